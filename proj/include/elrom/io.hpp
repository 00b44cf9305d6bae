#pragma once

// Plain-text exports: Matrix Market coordinate files for cross-checking,
// CSV emission, and the debug mesh format (vertices / triangles / tagged
// boundary edges).

#include <fstream>
#include <iomanip>
#include <string>
#include <vector>

#include "elrom/common.hpp"
#include "elrom/mesh.hpp"

namespace elrom {

inline void write_matrix_market(const std::string& path, const SpMat& A) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_matrix_market: cannot open " + path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << A.rows() << " " << A.cols() << " " << A.nonZeros() << "\n";
  out << std::setprecision(17);
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it)
      out << it.row() + 1 << " " << it.col() + 1 << " " << it.value() << "\n";
}

inline void write_matrix_market(const std::string& path, const SpMatC& A) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_matrix_market: cannot open " + path);
  out << "%%MatrixMarket matrix coordinate complex general\n";
  out << A.rows() << " " << A.cols() << " " << A.nonZeros() << "\n";
  out << std::setprecision(17);
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMatC::InnerIterator it(A, k); it; ++it)
      out << it.row() + 1 << " " << it.col() + 1 << " " << it.value().real() << " "
          << it.value().imag() << "\n";
}

/// CSV with a fixed header; rows are written with full precision.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path);
    for (size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << "\n";
    out_ << std::setprecision(17);
  }

  void row(const std::vector<double>& values) {
    for (size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << values[i];
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

inline void write_mesh_text(const std::string& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_mesh_text: cannot open " + path);
  out << std::setprecision(17);
  out << "vertices " << mesh.n_vertices() << "\n";
  for (int v = 0; v < mesh.n_vertices(); ++v)
    out << mesh.vertices(v, 0) << " " << mesh.vertices(v, 1) << "\n";
  out << "triangles " << mesh.n_triangles() << "\n";
  for (const auto& t : mesh.triangles) out << t[0] << " " << t[1] << " " << t[2] << "\n";
  out << "boundary_edges " << mesh.boundary_edges.size() << "\n";
  for (const auto& e : mesh.boundary_edges) out << e.v0 << " " << e.v1 << " " << e.tag << "\n";
}

}  // namespace elrom
