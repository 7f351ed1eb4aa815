#pragma once

#include "qcstab/grid.hpp"

#include <iosfwd>
#include <string>

namespace qcstab {

/// Shortest round-trip decimal representation; identical on every run.
std::string format_number(double x);

/// Reads the `x1,...,xn,v1,...,vm` CSV format. Geometry is inferred from the
/// coordinates, which must form a row-major tensor lattice to within 1e-9 of
/// the axis extent.
GridMapping read_mapping_csv(std::istream& in);
GridMapping read_mapping_csv_file(const std::string& path);

void write_mapping_csv(std::ostream& out, const GridMapping& v);
void write_mapping_csv_file(const std::string& path, const GridMapping& v);

}  // namespace qcstab
