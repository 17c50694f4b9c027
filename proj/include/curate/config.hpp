#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace curate {

/// Flat `key = value` engine configuration. Lines starting with `#` are
/// comments. Unknown keys are kept so the file round-trips.
class Config {
 public:
  Config() = default;

  static Config defaults();
  static Config parse(std::string_view text);
  static Config load(const std::string& path);

  /// Writes keys in sorted order; `parse(serialize())` is the identity.
  std::string serialize() const;

  void set(const std::string& key, std::string value);
  bool has(const std::string& key) const;
  void merge(const Config& overrides);

  std::string get(const std::string& key, const std::string& fallback = {}) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Reads the value of the environment variable whose name is stored under
  /// `key` (used for API tokens, which never live in the file itself).
  std::optional<std::string> secret_from_env(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace curate
