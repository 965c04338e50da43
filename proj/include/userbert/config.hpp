#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace userbert {

/// Flat `key = value` configuration. '#' starts a comment, blank lines ignored.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Applies `key=value` override strings (CLI surface).
  void apply_overrides(const std::vector<std::string>& overrides);

  std::string to_string() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace userbert
