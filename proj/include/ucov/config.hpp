#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ucov {

/// Value of one config key: number, string, bool, or (nested) array.
struct ConfigValue {
  enum class Kind { Number, String, Bool, Array };
  Kind kind = Kind::Number;
  /// Numbers keep their source text so 64-bit integers survive exactly.
  std::string text;
  double number = 0.0;
  bool flag = false;
  std::vector<ConfigValue> items;
};

/// Flat TOML-like key/value file. `[section]` headers prefix the keys that
/// follow ("section.key"); `#` starts a comment; values are numbers, quoted
/// strings, true/false, or bracketed arrays (which may nest and span lines).
class Config {
 public:
  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const ConfigValue& get(const std::string& key) const;
  void set_number(const std::string& key, double value);
  void set_integer(const std::string& key, std::int64_t value);
  void set_string(const std::string& key, std::string value);

  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key) const;
  std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const;
  std::string string(const std::string& key) const;
  std::string string(const std::string& key, const std::string& fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<std::int64_t> integers(const std::string& key) const;
  std::vector<std::vector<double>> matrix(const std::string& key) const;

  std::vector<std::string> keys() const;

 private:
  std::map<std::string, ConfigValue> values_;
};

}  // namespace ucov
