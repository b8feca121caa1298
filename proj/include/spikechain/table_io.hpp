#pragma once

// Structured-text tables: "# key = value" header lines, one "# columns:" line,
// then whitespace-separated rows. Numbers are written with round-trip precision.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "spikechain/error.hpp"

namespace spikechain::io {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_long_double(long double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.21Lg", v);
  return buf;
}

struct Table {
  std::vector<std::pair<std::string, std::string>> header;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void set(const std::string& key, const std::string& value) {
    for (auto& kv : header)
      if (kv.first == key) {
        kv.second = value;
        return;
      }
    header.emplace_back(key, value);
  }
  void set(const std::string& key, double value) { set(key, fmt_double(value)); }

  const std::string& get(const std::string& key) const {
    for (const auto& kv : header)
      if (kv.first == key) return kv.second;
    throw Error(ErrorCode::ArtifactMissing, "io", "missing header key '" + key + "'");
  }
  double get_double(const std::string& key) const { return std::stod(get(key)); }
  bool has(const std::string& key) const {
    for (const auto& kv : header)
      if (kv.first == key) return true;
    return false;
  }

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw Error(ErrorCode::ArtifactMissing, "io", "missing column '" + name + "'");
  }

  std::vector<double> column_values(const std::string& name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(std::stod(r.at(c)));
    return out;
  }

  std::vector<long double> column_values_ld(const std::string& name) const {
    const std::size_t c = column(name);
    std::vector<long double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(std::stold(r.at(c)));
    return out;
  }
};

// Written to a sibling temporary and renamed, so readers never see a partial file.
inline void write_table(const std::string& path, const Table& t) {
  const std::string tmp = path + ".tmp" + std::to_string(std::random_device{}());
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw Error(ErrorCode::ArtifactMissing, "io", "cannot write " + path);
    for (const auto& [k, v] : t.header) os << "# " << k << " = " << v << '\n';
    os << "# columns:";
    for (const auto& c : t.columns) os << ' ' << c;
    os << '\n';
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "\t" : "") << row[i];
      os << '\n';
    }
    if (!os) throw Error(ErrorCode::ArtifactMissing, "io", "short write to " + path);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::ArtifactMissing, "io", "cannot move " + tmp + " to " + path);
  }
}

inline Table read_table(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::ArtifactMissing, "io", "cannot read " + path);
  Table t;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string body = line.substr(line.find_first_not_of("# "));
      if (body.rfind("columns:", 0) == 0) {
        std::istringstream ss(body.substr(8));
        std::string c;
        while (ss >> c) t.columns.push_back(c);
      } else {
        const auto eq = body.find(" = ");
        if (eq != std::string::npos) t.header.emplace_back(body.substr(0, eq), body.substr(eq + 3));
      }
      continue;
    }
    std::istringstream ss(line);
    std::vector<std::string> row;
    std::string cell;
    while (ss >> cell) row.push_back(cell);
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace spikechain::io
