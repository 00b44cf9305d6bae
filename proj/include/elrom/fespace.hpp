#pragma once

// Vector-valued P1/P2 Lagrange spaces on triangle meshes, with boundary DOF
// sets, port extraction and free-DOF restriction helpers. DOFs are
// node-interleaved: dof(node, c) = 2*node + c with c = 0 (x) / 1 (y).

#include <algorithm>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "elrom/common.hpp"
#include "elrom/mesh.hpp"

namespace elrom {

struct FunctionSpace {
  std::shared_ptr<const Mesh> mesh;
  int degree = 2;  // 1 or 2

  // Scalar nodes: vertices first, then (for P2) edge midpoints.
  Eigen::Matrix<double, Eigen::Dynamic, 2> node_coords;
  // Per triangle: v0 v1 v2 [m01 m12 m20]. P1 uses only the first 3.
  std::vector<std::array<int, 6>> element_nodes;
  // Boundary edge -> midpoint node (P2 only), aligned with mesh.boundary_edges.
  std::vector<int> boundary_edge_midnode;

  int n_nodes = 0;
  int n_dofs = 0;  // 2 * n_nodes

  std::vector<int> dirichlet_dofs;  // sorted
  std::vector<char> is_dirichlet;   // mask over all dofs
  std::vector<int> free_dofs;       // sorted complement
  std::vector<int> free_index;      // full dof -> free index, -1 on Dirichlet

  int n_free() const { return static_cast<int>(free_dofs.size()); }
  int nodes_per_element() const { return degree == 2 ? 6 : 3; }
};

/// Build the P1/P2 vector space; `dirichlet_tags` marks boundaries where both
/// displacement components are constrained to zero.
inline FunctionSpace build_function_space(std::shared_ptr<const Mesh> mesh, int degree,
                                          const std::set<std::string>& dirichlet_tags = {}) {
  if (degree != 1 && degree != 2)
    throw std::invalid_argument("build_function_space: degree must be 1 or 2");
  const auto mesh_tags = mesh->boundary_tags();
  for (const auto& tag : dirichlet_tags)
    if (!mesh_tags.count(tag))
      throw std::invalid_argument("build_function_space: unknown boundary tag '" + tag + "'");

  FunctionSpace s;
  s.mesh = mesh;
  s.degree = degree;

  const int nv = mesh->n_vertices();
  std::map<std::pair<int, int>, int> edge_node;
  std::vector<Eigen::Vector2d> mids;
  auto midpoint_node = [&](int a, int b) {
    auto key = std::make_pair(std::min(a, b), std::max(a, b));
    auto [it, inserted] = edge_node.try_emplace(key, nv + static_cast<int>(mids.size()));
    if (inserted)
      mids.emplace_back(0.5 * (mesh->vertices.row(a) + mesh->vertices.row(b)));
    return it->second;
  };

  s.element_nodes.reserve(mesh->n_triangles());
  for (const auto& tri : mesh->triangles) {
    std::array<int, 6> en{tri[0], tri[1], tri[2], -1, -1, -1};
    if (degree == 2) {
      en[3] = midpoint_node(tri[0], tri[1]);
      en[4] = midpoint_node(tri[1], tri[2]);
      en[5] = midpoint_node(tri[2], tri[0]);
    }
    s.element_nodes.push_back(en);
  }

  s.n_nodes = nv + static_cast<int>(mids.size());
  s.node_coords.resize(s.n_nodes, 2);
  s.node_coords.topRows(nv) = mesh->vertices;
  for (int i = 0; i < static_cast<int>(mids.size()); ++i)
    s.node_coords.row(nv + i) = mids[i].transpose();
  s.n_dofs = 2 * s.n_nodes;

  if (degree == 2) {
    s.boundary_edge_midnode.reserve(mesh->boundary_edges.size());
    for (const auto& e : mesh->boundary_edges)
      s.boundary_edge_midnode.push_back(midpoint_node(e.v0, e.v1));
  }

  std::set<int> dnodes;
  for (size_t k = 0; k < mesh->boundary_edges.size(); ++k) {
    const auto& e = mesh->boundary_edges[k];
    if (!dirichlet_tags.count(e.tag)) continue;
    dnodes.insert(e.v0);
    dnodes.insert(e.v1);
    if (degree == 2) dnodes.insert(s.boundary_edge_midnode[k]);
  }
  s.is_dirichlet.assign(s.n_dofs, 0);
  for (int n : dnodes) {
    s.is_dirichlet[2 * n] = 1;
    s.is_dirichlet[2 * n + 1] = 1;
    s.dirichlet_dofs.push_back(2 * n);
    s.dirichlet_dofs.push_back(2 * n + 1);
  }
  std::sort(s.dirichlet_dofs.begin(), s.dirichlet_dofs.end());

  s.free_index.assign(s.n_dofs, -1);
  for (int d = 0; d < s.n_dofs; ++d)
    if (!s.is_dirichlet[d]) {
      s.free_index[d] = static_cast<int>(s.free_dofs.size());
      s.free_dofs.push_back(d);
    }
  return s;
}

/// Ordered trace of the space on one straight boundary segment. Node order is
/// lexicographic by (x, y); per node the x-displacement DOF precedes the
/// y-displacement DOF.
struct PortDescriptor {
  std::string side;
  std::vector<int> nodes;
  std::vector<int> dofs;  // 2 per node, interleaved
  Eigen::Matrix<double, Eigen::Dynamic, 2> node_coords;

  int n_dofs() const { return static_cast<int>(dofs.size()); }
};

inline PortDescriptor extract_port_dofs(const FunctionSpace& space, const std::string& side) {
  const Mesh& mesh = *space.mesh;
  std::set<int> nodes;
  bool found = false;
  for (size_t k = 0; k < mesh.boundary_edges.size(); ++k) {
    const auto& e = mesh.boundary_edges[k];
    if (e.tag != side) continue;
    found = true;
    nodes.insert(e.v0);
    nodes.insert(e.v1);
    if (space.degree == 2) nodes.insert(space.boundary_edge_midnode[k]);
  }
  if (!found)
    throw std::invalid_argument("extract_port_dofs: no boundary edge tagged '" + side + "'");

  PortDescriptor port;
  port.side = side;
  port.nodes.assign(nodes.begin(), nodes.end());
  std::sort(port.nodes.begin(), port.nodes.end(), [&](int a, int b) {
    double ax = space.node_coords(a, 0), ay = space.node_coords(a, 1);
    double bx = space.node_coords(b, 0), by = space.node_coords(b, 1);
    if (ax != bx) return ax < bx;
    return ay < by;
  });
  port.node_coords.resize(static_cast<int>(port.nodes.size()), 2);
  for (size_t i = 0; i < port.nodes.size(); ++i) {
    port.node_coords.row(static_cast<int>(i)) = space.node_coords.row(port.nodes[i]);
    port.dofs.push_back(2 * port.nodes[i]);
    port.dofs.push_back(2 * port.nodes[i] + 1);
  }
  return port;
}

// ---------------------------------------------------------------------------
// DOF set algebra: restriction to free DOFs and generic split solves.

template <class Scalar>
Eigen::SparseMatrix<Scalar> gather_matrix(const Eigen::SparseMatrix<Scalar>& A,
                                          const std::vector<int>& rows,
                                          const std::vector<int>& cols) {
  std::vector<int> row_of(A.rows(), -1), col_of(A.cols(), -1);
  for (size_t i = 0; i < rows.size(); ++i) row_of[rows[i]] = static_cast<int>(i);
  for (size_t j = 0; j < cols.size(); ++j) col_of[cols[j]] = static_cast<int>(j);
  std::vector<Eigen::Triplet<Scalar>> trips;
  for (int k = 0; k < A.outerSize(); ++k)
    for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(A, k); it; ++it) {
      int r = row_of[it.row()], c = col_of[it.col()];
      if (r >= 0 && c >= 0) trips.emplace_back(r, c, it.value());
    }
  Eigen::SparseMatrix<Scalar> out(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

template <class Scalar>
Eigen::SparseMatrix<Scalar> restrict_free(const Eigen::SparseMatrix<Scalar>& A,
                                          const FunctionSpace& s) {
  return gather_matrix(A, s.free_dofs, s.free_dofs);
}

template <class Derived>
auto gather_rows(const Eigen::MatrixBase<Derived>& v, const std::vector<int>& rows) {
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Derived::ColsAtCompileTime> out(
      static_cast<int>(rows.size()), v.cols());
  for (size_t i = 0; i < rows.size(); ++i) out.row(static_cast<int>(i)) = v.row(rows[i]);
  return out;
}

template <class Derived>
auto restrict_free(const Eigen::MatrixBase<Derived>& v, const FunctionSpace& s) {
  return gather_rows(v, s.free_dofs);
}

/// Scatter a free-DOF vector back to the full space (zeros on Dirichlet DOFs).
template <class Derived>
auto expand_free(const Eigen::MatrixBase<Derived>& vf, const FunctionSpace& s) {
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Derived::ColsAtCompileTime> out =
      Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic,
                    Derived::ColsAtCompileTime>::Zero(s.n_dofs, vf.cols());
  for (size_t i = 0; i < s.free_dofs.size(); ++i) out.row(s.free_dofs[i]) = vf.row(static_cast<int>(i));
  return out;
}

/// Index bookkeeping for solves with a constrained DOF subset: the full DOF
/// range splits into "kept" (unknown) and "bound" (prescribed data) DOFs.
struct DofSplit {
  std::vector<int> kept;
  std::vector<int> bound;

  static DofSplit from_mask(int n_dofs, const std::vector<char>& bound_mask) {
    DofSplit sp;
    for (int d = 0; d < n_dofs; ++d)
      (bound_mask[d] ? sp.bound : sp.kept).push_back(d);
    return sp;
  }
};

}  // namespace elrom
