#include "supremal/field_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "supremal/error.hpp"

namespace supremal {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_field_csv(std::ostream& out, const ScalarField& field) {
  const Grid& g = field.grid();
  out << (g.dim() == 1 ? "x,value\n" : "x,y,value\n");
  for (int n = 0; n < g.num_nodes(); ++n) {
    const Vec2 x = g.position(n);
    out << format_number(x[0]) << ',';
    if (g.dim() == 2) out << format_number(x[1]) << ',';
    out << format_number(field[n]) << '\n';
  }
}

void write_field_csv(const std::string& path, const ScalarField& field) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot open " + path + " for writing");
  write_field_csv(out, field);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

ScalarField read_field_csv(std::istream& in, const GridPtr& grid) {
  const Grid& g = *grid;
  const std::string expected = g.dim() == 1 ? "x,value" : "x,y,value";
  std::string line;
  if (!std::getline(in, line) || trim(line) != expected) {
    throw InvalidArgument("field csv: expected header '" + expected + "'");
  }
  std::vector<double> values;
  values.reserve(g.num_nodes());
  int row = 0;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    std::vector<double> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        cols.push_back(std::stod(cell, &used));
        if (trim(cell.substr(used)) != "") throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw InvalidArgument("field csv: bad number '" + cell + "' on row " + std::to_string(row + 1));
      }
    }
    if (static_cast<int>(cols.size()) != g.dim() + 1) {
      throw InvalidArgument("field csv: wrong column count on row " + std::to_string(row + 1));
    }
    if (row >= g.num_nodes()) {
      throw InvalidArgument("field csv: more rows than the " + std::to_string(g.num_nodes()) + " grid nodes");
    }
    const Vec2 x = g.position(row);
    for (int k = 0; k < g.dim(); ++k) {
      if (std::abs(cols[k] - x[k]) > 1e-9 * (1.0 + std::abs(x[k]))) {
        throw InvalidArgument("field csv: row " + std::to_string(row + 1) + " is not at grid node " +
                              std::to_string(row));
      }
    }
    values.push_back(cols.back());
    ++row;
  }
  if (row != g.num_nodes()) {
    throw InvalidArgument("field csv: " + std::to_string(row) + " rows for " + std::to_string(g.num_nodes()) +
                          " grid nodes");
  }
  return ScalarField(grid, std::move(values));
}

ScalarField read_field_csv(const std::string& path, const GridPtr& grid) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  return read_field_csv(in, grid);
}

}  // namespace supremal
