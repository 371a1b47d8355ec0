#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include "curvlab/grid.hpp"

namespace curvlab {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Plain CSV, one row per node: i,j,c0[,c1,...]. Header row included.
void write_grid_csv(std::ostream& out, const PeriodicGridField& field);
PeriodicGridField read_grid_csv(std::istream& in, int n, Rank rank);

/// First line is a JSON object with resolution and rank; the CSV follows.
void write_grid_document(std::ostream& out, const PeriodicGridField& field);
PeriodicGridField read_grid_document(std::istream& in);

/// 64-bit FNV-1a over bytes, printed as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace curvlab
