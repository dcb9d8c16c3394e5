#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "selreg/error.hpp"

namespace selreg {

//! Empty cells (monostate) mark absent values, e.g. an MSE over no points.
using Cell = std::variant<std::monostate, double, std::int64_t, std::string>;

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

//! Result table with a fixed column set, written as CSV.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw Error("table row width does not match header");
    rows.push_back(std::move(row));
  }

  std::size_t column(const std::string& name) const {
    for (std::size_t k = 0; k < columns.size(); ++k)
      if (columns[k] == name) return k;
    throw Error("no column '" + name + "'");
  }

  void write_csv(std::ostream& out) const {
    for (std::size_t k = 0; k < columns.size(); ++k) out << (k ? "," : "") << columns[k];
    out << '\n';
    for (const auto& row : rows) {
      for (std::size_t k = 0; k < row.size(); ++k) {
        if (k) out << ',';
        std::visit(
            [&](const auto& v) {
              using T = std::decay_t<decltype(v)>;
              if constexpr (std::is_same_v<T, double>) out << format_real(v);
              else if constexpr (std::is_same_v<T, std::int64_t>) out << v;
              else if constexpr (std::is_same_v<T, std::string>) out << v;
            },
            row[k]);
      }
      out << '\n';
    }
  }

  std::string to_csv() const {
    std::ostringstream s;
    write_csv(s);
    return s.str();
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    write_csv(out);
  }
};

//! Numeric value of a cell; NaN for absent or non-numeric cells.
inline double as_real(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace selreg
