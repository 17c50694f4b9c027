#include "curate/llm.hpp"

#include <json.hpp>

#include "curate/config.hpp"
#include "curate/error.hpp"
#include "curate/generator.hpp"
#include "curate/text.hpp"
#include "internal.hpp"

namespace curate {

namespace {

std::vector<std::string> string_list(const nlohmann::json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  const auto& v = j.at(key);
  if (v.is_string()) {
    out.push_back(v.get<std::string>());
  } else {
    for (const auto& s : v) out.push_back(s.get<std::string>());
  }
  return out;
}

std::string first_example_response(const std::string& prompt) {
  const std::string marker = std::string(kExampleResponse) + "\n";
  const auto at = prompt.find(marker);
  if (at == std::string::npos) return "[]";
  const auto start = at + marker.size();
  const auto end = prompt.find('\n', start);
  return prompt.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

}  // namespace

std::string article_section(const std::string& prompt) {
  const std::string open = std::string(kArticleStart) + "\n";
  const auto b = prompt.find(open);
  if (b == std::string::npos) return {};
  const auto start = b + open.size();
  const auto e = prompt.find("\n" + std::string(kArticleEnd), start);
  return prompt.substr(start, e == std::string::npos ? std::string::npos : e - start);
}

MockLlmProvider::MockLlmProvider(const std::string& fixture_json) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(fixture_json);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("mock LLM fixture: ") + e.what());
  }
  name_ = j.value("name", name_);
  context_chars_ = j.value("context_chars", context_chars_);
  default_response_ = j.value("default", default_response_);
  if (j.contains("responses")) {
    for (const auto& [hash, text] : j["responses"].items()) responses_.emplace_back(hash, text.get<std::string>());
  }
  if (j.contains("rules")) {
    for (const auto& r : j["rules"]) {
      rules_.push_back({string_list(r, "prompt_contains"), string_list(r, "article_contains"),
                        r.value("response", std::string{}), r.value("error", std::string{})});
    }
  }
}

std::unique_ptr<MockLlmProvider> MockLlmProvider::from_file(const std::string& path) {
  return std::make_unique<MockLlmProvider>(detail::read_file(path));
}

std::string MockLlmProvider::prompt_hash(const std::string& prompt) { return text::hex64(text::fnv1a64(prompt)); }

std::string MockLlmProvider::complete(const std::string& prompt) {
  {
    std::lock_guard lock(mutex_);
    calls_.push_back(prompt);
  }
  const std::string hash = prompt_hash(prompt);
  for (const auto& [h, response] : responses_) {
    if (h == hash) return response;
  }
  const std::string article = article_section(prompt);
  for (const auto& rule : rules_) {
    const bool prompt_ok = std::all_of(rule.prompt_contains.begin(), rule.prompt_contains.end(),
                                       [&](const std::string& s) { return prompt.find(s) != std::string::npos; });
    const bool article_ok = std::all_of(rule.article_contains.begin(), rule.article_contains.end(),
                                        [&](const std::string& s) { return article.find(s) != std::string::npos; });
    if (!prompt_ok || !article_ok) continue;
    if (!rule.error.empty()) throw Error(ErrorCode::ServiceUnavailable, "mock LLM: " + rule.error);
    if (rule.response == "$EXAMPLE_RESPONSE") return first_example_response(prompt);
    return rule.response;
  }
  return default_response_;
}

std::vector<std::string> MockLlmProvider::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

std::unique_ptr<LlmProvider> make_llm_provider(const Config& config) {
  const std::string profile = config.get("llm_profile", "mock");
  if (profile == "mock") {
    const std::string fixture = config.get("mock_fixture");
    if (fixture.empty()) return std::make_unique<MockLlmProvider>("{}");
    return MockLlmProvider::from_file(fixture);
  }
  if (profile == "http") {
    const auto context = config.get_int("llm_context_chars", 32000);
    if (context <= 0) throw Error(ErrorCode::InvalidConfig, "llm_context_chars must be positive");
    return std::make_unique<HttpLlmProvider>(config.get("llm_base_url"), config.get("llm_model"),
                                             config.secret_from_env("llm_token_env").value_or(""),
                                             static_cast<std::size_t>(context));
  }
  throw Error(ErrorCode::InvalidConfig, "unknown llm_profile: " + profile);
}

}  // namespace curate
