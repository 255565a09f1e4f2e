#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "cbvcc/types.hpp"

namespace cbvcc::csv {

// Plain comma-separated rows; fields never contain commas or quotes here.
inline std::vector<std::string> split_row(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  }

  std::size_t require_column(std::string_view name, const std::string& source) const {
    auto c = column(name);
    if (!c) throw Error(ErrorKind::format, source + ": missing column '" + std::string(name) + "'");
    return *c;
  }
};

inline Table read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::format, "cannot open '" + path + "'");
  Table t;
  std::string line;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto row = split_row(line);
    if (first) {
      t.header = std::move(row);
      first = false;
      continue;
    }
    if (row.size() != t.header.size()) {
      throw Error(ErrorKind::format, path + ":" + std::to_string(lineno) + ": expected " +
                                         std::to_string(t.header.size()) + " fields, got " +
                                         std::to_string(row.size()));
    }
    t.rows.push_back(std::move(row));
  }
  if (first) throw Error(ErrorKind::format, path + ": empty file (no header)");
  return t;
}

inline double parse_double(std::string_view s, const std::string& ctx) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorKind::format, ctx + ": not a number '" + std::string(s) + "'");
  }
  return v;
}

inline long long parse_int(std::string_view s, const std::string& ctx) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorKind::format, ctx + ": not an integer '" + std::string(s) + "'");
  }
  return v;
}

// Shortest representation that parses back to the same double.
inline std::string format_roundtrip(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

inline std::string format_optional(const std::optional<double>& v) {
  return v ? format_roundtrip(*v) : std::string();
}

inline void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::format, "cannot write '" + path + "'");
  out << contents;
  if (!out) throw Error(ErrorKind::format, "write failed for '" + path + "'");
}

inline std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out;
}

}  // namespace cbvcc::csv
