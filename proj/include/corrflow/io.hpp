#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "corrflow/matrix.hpp"

namespace corrflow {

inline constexpr const char* kToolVersion = "corrflow 0.1.0";

// 17 significant digits round-trip a double bit-exactly through decimal.
inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string format_complex(Complex z) {
  std::string s = format_real(z.real());
  s += (z.imag() < 0.0 || (z.imag() == 0.0 && std::signbit(z.imag()))) ? "-" : "+";
  s += format_real(std::abs(z.imag()));
  s += "j";
  return s;
}

inline std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Matrix container format: one header line `dim=<n>`, then n rows of n
// entries, each entry serialized as `re,im`.
inline void write_matrix_csv(std::ostream& out, const ComplexMatrix& m) {
  out << "dim=" << m.rows() << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ",";
      out << format_real(m(i, j).real()) << "," << format_real(m(i, j).imag());
    }
    out << "\n";
  }
}

inline void write_matrix_csv(const std::string& path, const ComplexMatrix& m) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  write_matrix_csv(out, m);
}

inline ComplexMatrix read_matrix_csv(std::istream& in, const std::string& origin) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(origin + ": empty matrix file", 1);
  if (line.rfind("dim=", 0) != 0) throw ParseError(origin + ": first line must be dim=<n>", 1);
  long dim = 0;
  try {
    dim = std::stol(line.substr(4));
  } catch (const std::exception&) {
    throw ParseError(origin + ": malformed dimension '" + line + "'", 1);
  }
  if (dim <= 0 || dim > 4096) throw ParseError(origin + ": dimension out of range", 1);

  ComplexMatrix m(dim, dim);
  for (long i = 0; i < dim; ++i) {
    if (!std::getline(in, line))
      throw ParseError(origin + ": expected " + std::to_string(dim) + " matrix rows",
                       static_cast<int>(i + 1));
    std::stringstream row(line);
    std::string cell;
    for (long j = 0; j < 2 * dim; ++j) {
      if (!std::getline(row, cell, ','))
        throw ParseError(origin + ": row " + std::to_string(i + 1) + " has too few entries",
                         static_cast<int>(i + 2));
      double value = 0.0;
      try {
        std::size_t used = 0;
        value = std::stod(cell, &used);
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ParseError(origin + ": bad number '" + cell + "'", static_cast<int>(i + 2));
      }
      if (j % 2 == 0)
        m(i, j / 2).real(value);
      else
        m(i, j / 2).imag(value);
    }
    if (std::getline(row, cell, ','))
      throw ParseError(origin + ": row " + std::to_string(i + 1) + " has too many entries",
                       static_cast<int>(i + 2));
  }
  return m;
}

inline ComplexMatrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open matrix file '" + path + "'");
  return read_matrix_csv(in, path);
}

// CSV table with `#` comment lines for provenance; all rows pre-formatted so
// output is byte-identical across runs.
struct ResultTable {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void write(std::ostream& out) const {
    for (const auto& c : comments) out << "# " << c << "\n";
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
      out << "\n";
    }
  }

  void write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    write(out);
  }
};

}  // namespace corrflow
