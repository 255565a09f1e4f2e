#pragma once

// Reader for the small TOML subset used by cbvcc.toml: [table] headers,
// `key = value` pairs with strings, integers, floats and booleans, and #
// comments. Keys are flattened to "table.key".

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <variant>

#include "cbvcc/types.hpp"

namespace cbvcc::config {

using Value = std::variant<bool, long long, double, std::string>;

class Config {
 public:
  static Config parse(const std::string& text, const std::string& source = "config") {
    Config cfg;
    std::string table;
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      auto end = text.find('\n', pos);
      if (end == std::string::npos) end = text.size();
      std::string line = strip_comment(text.substr(pos, end - pos));
      pos = end + 1;
      ++lineno;
      line = trim(line);
      if (line.empty()) continue;
      const std::string where = source + ":" + std::to_string(lineno);
      if (line.front() == '[') {
        if (line.back() != ']') throw Error(ErrorKind::config, where + ": unterminated table header");
        table = trim(line.substr(1, line.size() - 2));
        if (table.empty()) throw Error(ErrorKind::config, where + ": empty table name");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw Error(ErrorKind::config, where + ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      if (key.empty()) throw Error(ErrorKind::config, where + ": empty key");
      const std::string full = table.empty() ? key : table + "." + key;
      if (cfg.values_.count(full)) throw Error(ErrorKind::config, where + ": duplicate key '" + full + "'");
      cfg.values_[full] = parse_value(trim(line.substr(eq + 1)), where);
    }
    return cfg;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::config, "cannot open config '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse(text, path);
  }

  bool contains(const std::string& key) const { return values_.count(key) > 0; }

  std::optional<std::string> get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    if (auto s = std::get_if<std::string>(&it->second)) return *s;
    throw Error(ErrorKind::config, "config key '" + key + "' must be a string");
  }

  std::optional<double> get_double(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    if (auto d = std::get_if<double>(&it->second)) return *d;
    if (auto i = std::get_if<long long>(&it->second)) return static_cast<double>(*i);
    throw Error(ErrorKind::config, "config key '" + key + "' must be a number");
  }

  std::optional<long long> get_int(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    if (auto i = std::get_if<long long>(&it->second)) return *i;
    throw Error(ErrorKind::config, "config key '" + key + "' must be an integer");
  }

  std::optional<bool> get_bool(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    if (auto b = std::get_if<bool>(&it->second)) return *b;
    throw Error(ErrorKind::config, "config key '" + key + "' must be true or false");
  }

  const std::map<std::string, Value>& values() const noexcept { return values_; }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  // Drops a trailing # comment that is not inside a quoted string.
  static std::string strip_comment(const std::string& s) {
    char quote = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const char c = s[i];
      if (quote) {
        if (c == '\\' && quote == '"') ++i;
        else if (c == quote) quote = 0;
      } else if (c == '"' || c == '\'') {
        quote = c;
      } else if (c == '#') {
        return s.substr(0, i);
      }
    }
    return s;
  }

  static Value parse_value(const std::string& v, const std::string& where) {
    if (v.empty()) throw Error(ErrorKind::config, where + ": missing value");
    if (v == "true") return true;
    if (v == "false") return false;
    if (v.front() == '"' || v.front() == '\'') {
      if (v.size() < 2 || v.back() != v.front()) throw Error(ErrorKind::config, where + ": unterminated string");
      std::string out;
      for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        if (v.front() == '"' && v[i] == '\\' && i + 2 < v.size()) {
          const char n = v[++i];
          out += n == 'n' ? '\n' : n == 't' ? '\t' : n;
        } else {
          out += v[i];
        }
      }
      return out;
    }
    std::string num;
    for (char c : v) {
      if (c != '_') num += c;
    }
    if (!num.empty() && num.front() == '+') num.erase(0, 1);
    long long i = 0;
    auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), i);
    if (ec == std::errc() && p == num.data() + num.size()) return i;
    double d = 0.0;
    auto [p2, ec2] = std::from_chars(num.data(), num.data() + num.size(), d);
    if (ec2 == std::errc() && p2 == num.data() + num.size()) return d;
    throw Error(ErrorKind::config, where + ": unsupported value '" + v + "'");
  }

  std::map<std::string, Value> values_;
};

}  // namespace cbvcc::config
