#include "curate/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "curate/error.hpp"
#include "curate/text.hpp"

namespace curate {

Config Config::defaults() {
  Config c;
  c.set("grobid_url", "http://localhost:8070");
  c.set("tika_url", "http://localhost:9998");
  c.set("parser_profile", "http");
  c.set("ocr_command", "");
  c.set("llm_profile", "mock");
  c.set("llm_base_url", "http://localhost:8000");
  c.set("llm_model", "gpt-4o");
  c.set("llm_token_env", "CURATE_LLM_TOKEN");
  c.set("llm_context_chars", "32000");
  c.set("mock_fixture", "");
  c.set("embedding_profile", "lexical");
  c.set("embedding_url", "http://localhost:8080/embed");
  c.set("embedding_dim", "512");
  c.set("window", "0");
  c.set("overlap", "0.1");
  c.set("k1", "1.2");
  c.set("b", "0.75");
  c.set("band_supported", "90");
  c.set("band_partial", "60");
  c.set("fuzzy_scorer", "partial_ratio");
  c.set("suggest_threshold", "0.5");
  c.set("pilot_cap", "10");
  c.set("support_k", "3");
  c.set("m", "1");
  c.set("k", "10");
  c.set("seed", "0");
  c.set("jobs", "0");
  c.set("exact_case", "false");
  c.set("api_token_env", "");
  return c;
}

Config Config::parse(std::string_view text) {
  Config c;
  std::size_t line_no = 0;
  for (const auto& raw : text::split(text, '\n')) {
    ++line_no;
    const std::string line = text::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidConfig,
                  "config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = text::trim(line.substr(0, eq));
    if (key.empty()) {
      throw Error(ErrorCode::InvalidConfig, "config line " + std::to_string(line_no) + ": empty key");
    }
    c.set(key, text::trim(line.substr(eq + 1)));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string Config::serialize() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

void Config::set(const std::string& key, std::string value) { entries_[key] = std::move(value); }

bool Config::has(const std::string& key) const { return entries_.count(key) != 0; }

void Config::merge(const Config& overrides) {
  for (const auto& [k, v] : overrides.entries_) entries_[k] = v;
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end() || it->second.empty()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig, "config key " + key + " is not a number: " + it->second);
  }
}

long long Config::get_int(const std::string& key, long long fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end() || it->second.empty()) return fallback;
  try {
    std::size_t used = 0;
    const long long v = std::stoll(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig, "config key " + key + " is not an integer: " + it->second);
  }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end() || it->second.empty()) return fallback;
  const std::string v = text::fold_case(it->second);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::InvalidConfig, "config key " + key + " is not a boolean: " + it->second);
}

std::optional<std::string> Config::secret_from_env(const std::string& key) const {
  const std::string var = get(key);
  if (var.empty()) return std::nullopt;
  const char* value = std::getenv(var.c_str());
  if (value == nullptr) return std::nullopt;
  return std::string(value);
}

}  // namespace curate
