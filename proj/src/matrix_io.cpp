#include "blocksketch/matrix_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace blocksketch::io {

std::string format_full(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string format_short(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

void write_matrix_csv(std::ostream& out, const Matrix& m) {
  out << m.rows() << ',' << m.cols() << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_full(m(i, j));
    }
    out << '\n';
  }
}

void write_matrix_csv(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_matrix_csv: cannot open " + path);
  write_matrix_csv(out, m);
  if (!out.good()) throw std::runtime_error("write_matrix_csv: write failed for " + path);
}

Matrix read_matrix_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw dimension_error("read_matrix_csv: missing header");
  Index rows = 0, cols = 0;
  {
    std::istringstream header(line);
    char comma = 0;
    if (!(header >> rows >> comma >> cols) || comma != ',' || rows <= 0 || cols <= 0)
      throw dimension_error("read_matrix_csv: malformed header '" + line + "'");
  }
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    if (!std::getline(in, line))
      throw dimension_error("read_matrix_csv: unexpected end of data");
    std::istringstream row(line);
    std::string cell;
    for (Index j = 0; j < cols; ++j) {
      if (!std::getline(row, cell, ','))
        throw dimension_error("read_matrix_csv: short row");
      std::size_t used = 0;
      m(i, j) = std::stod(cell, &used);
    }
  }
  return m;
}

Matrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_matrix_csv: cannot open " + path);
  return read_matrix_csv(in);
}

}  // namespace blocksketch::io
