#pragma once

// CSV persistence for dense matrices.
//
// Format: a header line "rows,cols" followed by one comma-separated line per
// row.  Values are written with %.17g so a write/read round trip reproduces
// every double bit-exactly.

#include "blocksketch/types.hpp"

#include <iosfwd>
#include <string>

namespace blocksketch::io {

void write_matrix_csv(std::ostream& out, const Matrix& m);
void write_matrix_csv(const std::string& path, const Matrix& m);

Matrix read_matrix_csv(std::istream& in);
Matrix read_matrix_csv(const std::string& path);

// Formats a double exactly as the CSV writers do (%.17g).
std::string format_full(double value);

// Shorter formatting (%.12g) used by result tables, where byte-stable output
// matters but full round-trip precision does not.
std::string format_short(double value);

}  // namespace blocksketch::io
