#pragma once

#include <iosfwd>
#include <string>

#include "supremal/grid.hpp"

namespace supremal {

/// CSV with header `x,value` (1D) or `x,y,value` (2D), one row per node in
/// node-index order, numbers printed with 17 significant digits.
void write_field_csv(std::ostream& out, const ScalarField& field);
void write_field_csv(const std::string& path, const ScalarField& field);

/// Reads a field written by write_field_csv. Rejects wrong headers, node
/// counts that do not match `grid`, and coordinates off the grid.
ScalarField read_field_csv(std::istream& in, const GridPtr& grid);
ScalarField read_field_csv(const std::string& path, const GridPtr& grid);

/// "%.17g" formatting shared by the CSV and JSON writers.
std::string format_number(double v);

}  // namespace supremal
