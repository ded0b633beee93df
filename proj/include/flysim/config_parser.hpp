#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "flysim/errors.hpp"
#include "flysim/math.hpp"

namespace flysim::config {

// Subset of TOML: [table] and [[array-of-tables]] headers, dotted keys,
// `key = value` with strings, numbers, booleans and (possibly multi-line)
// arrays, and `#` comments.
struct Value {
  std::variant<bool, double, std::string, std::vector<Value>> data;
  bool integer = false;
};

class Document {
 public:
  struct Entry {
    Value value;
    std::size_t line = 0;
    mutable bool used = false;
  };

  static Document parse(std::istream& in, const std::string& source) {
    Document doc;
    doc.source_ = source;
    std::string table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::string text = strip(remove_comment(line));
      if (text.empty()) continue;
      if (text.starts_with("[[")) {
        if (!text.ends_with("]]")) throw ParseError(source, line_no, "unterminated table header");
        const std::string name = strip(text.substr(2, text.size() - 4));
        check_key(name, source, line_no);
        const int index = doc.array_counts_[name]++;
        table = name + "." + std::to_string(index);
        continue;
      }
      if (text.front() == '[') {
        if (text.back() != ']') throw ParseError(source, line_no, "unterminated table header");
        const std::string name = strip(text.substr(1, text.size() - 2));
        check_key(name, source, line_no);
        table = doc.resolve_table(name);
        if (!doc.tables_.insert({table, line_no}).second)
          throw ParseError(source, line_no, "table [" + name + "] defined twice");
        continue;
      }
      const auto eq = text.find('=');
      if (eq == std::string::npos) throw ParseError(source, line_no, "expected 'key = value'");
      const std::string key = strip(text.substr(0, eq));
      check_key(key, source, line_no);
      std::string raw = strip(text.substr(eq + 1));
      const std::size_t start_line = line_no;
      while (bracket_depth(raw) > 0) {
        if (!std::getline(in, line)) throw ParseError(source, start_line, "unterminated array");
        ++line_no;
        raw += " " + strip(remove_comment(line));
      }
      std::size_t pos = 0;
      Value v = parse_value(raw, pos, source, start_line);
      skip_ws(raw, pos);
      if (pos != raw.size()) throw ParseError(source, start_line, "unexpected text after value: '" + raw.substr(pos) + "'");
      const std::string full = table.empty() ? key : table + "." + key;
      if (!doc.entries_.emplace(full, Entry{std::move(v), start_line}).second)
        throw ParseError(source, start_line, "duplicate key '" + full + "'");
    }
    return doc;
  }

  static Document load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open config file");
    return parse(in, path);
  }

  static Document from_string(const std::string& text, const std::string& source = "<string>") {
    std::istringstream in(text);
    return parse(in, source);
  }

  const std::string& source() const { return source_; }
  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  int array_count(const std::string& name) const {
    const auto it = array_counts_.find(name);
    return it == array_counts_.end() ? 0 : it->second;
  }

  // Reads `key` into `out` when present. Marks the key as used.
  template <typename T>
  bool get(const std::string& key, T& out) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return false;
    it->second.used = true;
    try {
      out = convert<T>(it->second.value);
    } catch (const ConfigError& e) {
      throw ConfigError(where(it->second) + ": " + key + ": " + e.what());
    }
    return true;
  }

  // Every key must have been consumed by a binder.
  void check_all_used() const {
    for (const auto& [key, entry] : entries_)
      if (!entry.used) throw ConfigError(where(entry) + ": unknown key '" + key + "'");
  }

  std::string where(const Entry& e) const { return source_ + ":" + std::to_string(e.line); }

 private:
  std::string resolve_table(const std::string& name) const {
    // [a.b] after [[a]] refers to the last element of the array a.
    for (const auto& [array, count] : array_counts_) {
      if (name.starts_with(array + ".") && count > 0)
        return array + "." + std::to_string(count - 1) + name.substr(array.size());
    }
    return name;
  }

  static std::string remove_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
      if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
  }

  static std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static void check_key(const std::string& key, const std::string& source, std::size_t line) {
    if (key.empty()) throw ParseError(source, line, "empty key");
    for (char c : key)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-'))
        throw ParseError(source, line, "invalid character in key '" + key + "'");
  }

  static int bracket_depth(const std::string& s) {
    int depth = 0;
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
      if (quoted) continue;
      if (s[i] == '[') ++depth;
      if (s[i] == ']') --depth;
    }
    return depth;
  }

  static void skip_ws(const std::string& s, std::size_t& pos) {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
  }

  static Value parse_value(const std::string& s, std::size_t& pos, const std::string& source, std::size_t line) {
    skip_ws(s, pos);
    if (pos >= s.size()) throw ParseError(source, line, "missing value");
    const char c = s[pos];
    if (c == '"') {
      std::string out;
      ++pos;
      while (pos < s.size() && s[pos] != '"') {
        if (s[pos] == '\\' && pos + 1 < s.size()) {
          const char e = s[++pos];
          out += e == 'n' ? '\n' : e == 't' ? '\t' : e;
        } else {
          out += s[pos];
        }
        ++pos;
      }
      if (pos >= s.size()) throw ParseError(source, line, "unterminated string");
      ++pos;
      return Value{out};
    }
    if (c == '[') {
      std::vector<Value> items;
      ++pos;
      skip_ws(s, pos);
      if (pos < s.size() && s[pos] == ']') {
        ++pos;
        return Value{items};
      }
      while (true) {
        items.push_back(parse_value(s, pos, source, line));
        skip_ws(s, pos);
        if (pos < s.size() && s[pos] == ',') {
          ++pos;
          skip_ws(s, pos);
          if (pos < s.size() && s[pos] == ']') {
            ++pos;
            break;
          }
          continue;
        }
        if (pos < s.size() && s[pos] == ']') {
          ++pos;
          break;
        }
        throw ParseError(source, line, "expected ',' or ']' in array");
      }
      return Value{items};
    }
    std::size_t end = pos;
    while (end < s.size() && s[end] != ',' && s[end] != ']' && s[end] != ' ' && s[end] != '\t') ++end;
    const std::string tok = s.substr(pos, end - pos);
    pos = end;
    if (tok == "true") return Value{true};
    if (tok == "false") return Value{false};
    if (tok == "inf" || tok == "+inf") return Value{std::numeric_limits<double>::infinity()};
    double d = 0.0;
    const char* first = tok.data() + (tok.starts_with('+') ? 1 : 0);
    const auto res = std::from_chars(first, tok.data() + tok.size(), d);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
      throw ParseError(source, line, "invalid value '" + tok + "'");
    const bool integer = tok.find_first_of(".eE") == std::string::npos;
    return Value{d, integer};
  }

  template <typename T>
  static T convert(const Value& v) {
    if constexpr (std::is_same_v<T, bool>) {
      if (const auto* b = std::get_if<bool>(&v.data)) return *b;
      throw ConfigError("expected true or false");
    } else if constexpr (std::is_same_v<T, double>) {
      if (const auto* d = std::get_if<double>(&v.data)) return *d;
      throw ConfigError("expected a number");
    } else if constexpr (std::is_integral_v<T>) {
      const auto* d = std::get_if<double>(&v.data);
      if (!d || !v.integer) throw ConfigError("expected an integer");
      return static_cast<T>(*d);
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (const auto* s = std::get_if<std::string>(&v.data)) return *s;
      throw ConfigError("expected a string");
    } else if constexpr (std::is_same_v<T, Vec3> || std::is_same_v<T, Vec4>) {
      const auto* a = std::get_if<std::vector<Value>>(&v.data);
      constexpr int n = T::RowsAtCompileTime;
      if (!a || a->size() != n) throw ConfigError("expected an array of " + std::to_string(n) + " numbers");
      T out;
      for (int i = 0; i < n; ++i) out[i] = convert<double>((*a)[i]);
      return out;
    } else if constexpr (std::is_same_v<T, std::array<Vec3, 4>>) {
      const auto* a = std::get_if<std::vector<Value>>(&v.data);
      if (!a || a->size() != 4) throw ConfigError("expected an array of 4 three-vectors");
      T out;
      for (int i = 0; i < 4; ++i) out[i] = convert<Vec3>((*a)[i]);
      return out;
    } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
      const auto* a = std::get_if<std::vector<Value>>(&v.data);
      if (!a) throw ConfigError("expected an array of strings");
      T out;
      for (const auto& item : *a) out.push_back(convert<std::string>(item));
      return out;
    } else if constexpr (std::is_same_v<T, std::pair<double, double>>) {
      const auto* a = std::get_if<std::vector<Value>>(&v.data);
      if (!a || a->size() != 2) throw ConfigError("expected an array of 2 numbers");
      return {convert<double>((*a)[0]), convert<double>((*a)[1])};
    } else {
      static_assert(sizeof(T) == 0, "unsupported config type");
    }
  }

  std::string source_;
  std::map<std::string, Entry> entries_;
  std::map<std::string, std::size_t> tables_;
  std::map<std::string, int> array_counts_;
};

}  // namespace flysim::config
