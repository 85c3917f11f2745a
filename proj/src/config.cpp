#include "ucov/config.hpp"

#include "ucov/errors.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ucov {

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  std::map<std::string, ConfigValue> run() {
    std::map<std::string, ConfigValue> out;
    std::string section;
    for (;;) {
      skip_space_and_comments(true);
      if (at_end()) break;
      if (peek() == '[') {
        ++pos_;
        const std::string name = read_name();
        if (name.empty()) fail("empty section name");
        expect(']');
        section = name;
        expect_line_end();
        continue;
      }
      const std::string key = read_name();
      if (key.empty()) fail("expected a key");
      skip_space_and_comments(false);
      expect('=');
      skip_space_and_comments(false);
      ConfigValue value = read_value();
      expect_line_end();
      const std::string full = section.empty() ? key : section + "." + key;
      if (out.count(full)) fail("duplicate key '" + full + "'");
      out.emplace(full, std::move(value));
    }
    return out;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }

  [[noreturn]] void fail(const std::string& what) const {
    int line = 1;
    for (std::size_t i = 0; i < pos_ && i < text_.size(); ++i) line += text_[i] == '\n';
    throw InvalidConfig("config line " + std::to_string(line) + ": " + what);
  }

  void skip_space_and_comments(bool newlines) {
    while (!at_end()) {
      const char ch = peek();
      if (ch == '#') {
        while (!at_end() && peek() != '\n') ++pos_;
      } else if (ch == ' ' || ch == '\t' || ch == '\r' || (newlines && ch == '\n')) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  void expect(char ch) {
    if (peek() != ch) fail(std::string("expected '") + ch + "'");
    ++pos_;
  }

  void expect_line_end() {
    skip_space_and_comments(false);
    if (!at_end() && peek() != '\n') fail("unexpected trailing text");
  }

  std::string read_name() {
    skip_space_and_comments(false);
    const std::size_t start = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' ||
                         peek() == '-' || peek() == '.')) {
      ++pos_;
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  ConfigValue read_value() {
    ConfigValue v;
    const char ch = peek();
    if (ch == '"') {
      ++pos_;
      v.kind = ConfigValue::Kind::String;
      while (!at_end() && peek() != '"') {
        if (peek() == '\n') fail("unterminated string");
        if (peek() == '\\') {
          ++pos_;
          if (at_end()) fail("unterminated string");
        }
        v.text.push_back(peek());
        ++pos_;
      }
      expect('"');
      return v;
    }
    if (ch == '[') {
      ++pos_;
      v.kind = ConfigValue::Kind::Array;
      skip_space_and_comments(true);
      if (peek() == ']') {
        ++pos_;
        return v;
      }
      for (;;) {
        skip_space_and_comments(true);
        v.items.push_back(read_value());
        skip_space_and_comments(true);
        if (peek() == ',') {
          ++pos_;
          skip_space_and_comments(true);
          if (peek() == ']') {
            ++pos_;
            return v;
          }
          continue;
        }
        expect(']');
        return v;
      }
    }
    const std::size_t start = pos_;
    while (!at_end() && !std::isspace(static_cast<unsigned char>(peek())) && peek() != ',' &&
           peek() != ']' && peek() != '#') {
      ++pos_;
    }
    const std::string word(text_.substr(start, pos_ - start));
    if (word == "true" || word == "false") {
      v.kind = ConfigValue::Kind::Bool;
      v.flag = word == "true";
      v.text = word;
      return v;
    }
    v.kind = ConfigValue::Kind::Number;
    v.text = word;
    std::string digits = word;
    std::erase(digits, '_');
    char* end = nullptr;
    v.number = std::strtod(digits.c_str(), &end);
    if (digits.empty() || end != digits.c_str() + digits.size() || !std::isfinite(v.number)) {
      fail("cannot parse value '" + word + "'");
    }
    return v;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::int64_t as_integer(const std::string& key, const ConfigValue& v) {
  if (v.kind != ConfigValue::Kind::Number) throw InvalidConfig("'" + key + "' must be an integer");
  std::string digits = v.text;
  std::erase(digits, '_');
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), out);
  if (ec == std::errc() && ptr == digits.data() + digits.size()) return out;
  // allow 1e4-style integers
  if (v.number == std::floor(v.number) && std::abs(v.number) < 9.0e15) {
    return static_cast<std::int64_t>(v.number);
  }
  throw InvalidConfig("'" + key + "' must be an integer, got '" + v.text + "'");
}

double as_number(const std::string& key, const ConfigValue& v) {
  if (v.kind != ConfigValue::Kind::Number) throw InvalidConfig("'" + key + "' must be a number");
  return v.number;
}

}  // namespace

Config Config::parse(std::string_view text) {
  Config c;
  c.values_ = Parser(text).run();
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const ConfigValue& Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw InvalidConfig("missing config key '" + key + "'");
  return it->second;
}

void Config::set_number(const std::string& key, double value) {
  ConfigValue v;
  v.kind = ConfigValue::Kind::Number;
  v.number = value;
  std::ostringstream s;
  s.precision(17);
  s << value;
  v.text = s.str();
  values_[key] = std::move(v);
}

void Config::set_integer(const std::string& key, std::int64_t value) {
  ConfigValue v;
  v.kind = ConfigValue::Kind::Number;
  v.number = static_cast<double>(value);
  v.text = std::to_string(value);
  values_[key] = std::move(v);
}

void Config::set_string(const std::string& key, std::string value) {
  ConfigValue v;
  v.kind = ConfigValue::Kind::String;
  v.text = std::move(value);
  values_[key] = std::move(v);
}

double Config::number(const std::string& key) const { return as_number(key, get(key)); }

double Config::number(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

std::int64_t Config::integer(const std::string& key) const { return as_integer(key, get(key)); }

std::int64_t Config::integer(const std::string& key, std::int64_t fallback) const {
  return has(key) ? integer(key) : fallback;
}

std::uint64_t Config::unsigned_integer(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const ConfigValue& v = get(key);
  if (v.kind != ConfigValue::Kind::Number) throw InvalidConfig("'" + key + "' must be an integer");
  std::string digits = v.text;
  std::erase(digits, '_');
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), out);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) {
    throw InvalidConfig("'" + key + "' must be a nonnegative integer, got '" + v.text + "'");
  }
  return out;
}

std::string Config::string(const std::string& key) const {
  const ConfigValue& v = get(key);
  if (v.kind != ConfigValue::Kind::String) throw InvalidConfig("'" + key + "' must be a quoted string");
  return v.text;
}

std::string Config::string(const std::string& key, const std::string& fallback) const {
  return has(key) ? string(key) : fallback;
}

bool Config::boolean(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const ConfigValue& v = get(key);
  if (v.kind != ConfigValue::Kind::Bool) throw InvalidConfig("'" + key + "' must be true or false");
  return v.flag;
}

std::vector<double> Config::numbers(const std::string& key) const {
  const ConfigValue& v = get(key);
  if (v.kind == ConfigValue::Kind::Number) return {v.number};
  if (v.kind != ConfigValue::Kind::Array) throw InvalidConfig("'" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& item : v.items) out.push_back(as_number(key, item));
  return out;
}

std::vector<std::int64_t> Config::integers(const std::string& key) const {
  const ConfigValue& v = get(key);
  if (v.kind == ConfigValue::Kind::Number) return {as_integer(key, v)};
  if (v.kind != ConfigValue::Kind::Array) throw InvalidConfig("'" + key + "' must be an array of integers");
  std::vector<std::int64_t> out;
  for (const auto& item : v.items) out.push_back(as_integer(key, item));
  return out;
}

std::vector<std::vector<double>> Config::matrix(const std::string& key) const {
  const ConfigValue& v = get(key);
  if (v.kind != ConfigValue::Kind::Array) throw InvalidConfig("'" + key + "' must be an array of arrays");
  std::vector<std::vector<double>> out;
  for (const auto& row : v.items) {
    if (row.kind == ConfigValue::Kind::Number) {
      out.push_back({row.number});
      continue;
    }
    if (row.kind != ConfigValue::Kind::Array) throw InvalidConfig("'" + key + "' must be an array of arrays");
    std::vector<double> r;
    for (const auto& item : row.items) r.push_back(as_number(key, item));
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::string> Config::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) out.push_back(k);
  return out;
}

}  // namespace ucov
