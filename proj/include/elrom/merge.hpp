#pragma once

// Merge translated component meshes into one conforming global mesh and FE
// space. Coincident port nodes are identified; surviving boundary edges keep
// instance-qualified tags ("c3:top"). Used for bi-component training systems,
// global PR-RBC assemblies and the monolithic FE truth.

#include <map>
#include <memory>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "elrom/common.hpp"
#include "elrom/fespace.hpp"
#include "elrom/mesh.hpp"

namespace elrom {

struct ComponentPlacement {
  const FunctionSpace* space = nullptr;  // archetype-local space
  double dx = 0.0, dy = 0.0;
  std::set<std::string> dirichlet_tags;  // archetype-local tags clamped to zero
};

struct MergedSpace {
  std::shared_ptr<Mesh> mesh;
  FunctionSpace space;
  std::vector<std::vector<int>> node_map;  // per instance: local node -> global node
  std::vector<std::vector<int>> dof_map;   // per instance: local dof -> global dof

  int n_dofs() const { return space.n_dofs; }
};

namespace detail {

struct CoordHash {
  size_t operator()(const std::pair<std::int64_t, std::int64_t>& k) const {
    return std::hash<std::int64_t>()(k.first * 1000003 + k.second);
  }
};

}  // namespace detail

inline std::string qualified_tag(int instance, const std::string& tag) {
  return "c" + std::to_string(instance) + ":" + tag;
}

inline MergedSpace merge_spaces(const std::vector<ComponentPlacement>& parts, int degree) {
  using Key = std::pair<std::int64_t, std::int64_t>;
  auto mesh = std::make_shared<Mesh>();
  std::unordered_map<Key, int, detail::CoordHash> vindex;
  std::vector<Eigen::Vector2d> coords;
  std::vector<std::vector<int>> vmap(parts.size());

  for (size_t p = 0; p < parts.size(); ++p) {
    const Mesh& local = *parts[p].space->mesh;
    vmap[p].resize(local.n_vertices());
    for (int v = 0; v < local.n_vertices(); ++v) {
      const double x = local.vertices(v, 0) + parts[p].dx;
      const double y = local.vertices(v, 1) + parts[p].dy;
      auto [it, inserted] = vindex.try_emplace(detail::coord_key(x, y),
                                               static_cast<int>(coords.size()));
      if (inserted) coords.emplace_back(x, y);
      vmap[p][v] = it->second;
    }
    for (const auto& tri : local.triangles)
      mesh->triangles.push_back({vmap[p][tri[0]], vmap[p][tri[1]], vmap[p][tri[2]]});
  }
  mesh->vertices.resize(static_cast<int>(coords.size()), 2);
  for (int i = 0; i < static_cast<int>(coords.size()); ++i)
    mesh->vertices.row(i) = coords[i].transpose();

  // Qualified tag lookup for surviving (single-triangle) edges. Shared port
  // edges are interior after the merge and drop out automatically.
  std::map<std::pair<int, int>, std::string> edge_tag;
  double hmax = 0.0;
  for (size_t p = 0; p < parts.size(); ++p) {
    const Mesh& local = *parts[p].space->mesh;
    hmax = std::max(hmax, local.characteristic_h);
    for (const auto& e : local.boundary_edges) {
      int a = vmap[p][e.v0], b = vmap[p][e.v1];
      edge_tag[{std::min(a, b), std::max(a, b)}] = qualified_tag(static_cast<int>(p), e.tag);
    }
  }
  for (const auto& [a, b] : detail::find_boundary_edges(mesh->triangles)) {
    auto it = edge_tag.find({a, b});
    if (it == edge_tag.end())
      throw std::invalid_argument("merge_spaces: boundary edge without origin tag");
    mesh->boundary_edges.push_back({a, b, it->second});
  }
  mesh->characteristic_h = hmax;

  std::set<std::string> dirichlet;
  for (size_t p = 0; p < parts.size(); ++p)
    for (const auto& tag : parts[p].dirichlet_tags) {
      const std::string q = qualified_tag(static_cast<int>(p), tag);
      if (!mesh->has_boundary_tag(q))
        throw std::invalid_argument("merge_spaces: Dirichlet tag lost in merge: " + q);
      dirichlet.insert(q);
    }

  MergedSpace out;
  out.mesh = mesh;
  out.space = build_function_space(mesh, degree, dirichlet);

  // Node lookup by coordinates covers P2 midpoints as well.
  std::unordered_map<Key, int, detail::CoordHash> nindex;
  for (int n = 0; n < out.space.n_nodes; ++n)
    nindex[detail::coord_key(out.space.node_coords(n, 0), out.space.node_coords(n, 1))] = n;

  out.node_map.resize(parts.size());
  out.dof_map.resize(parts.size());
  for (size_t p = 0; p < parts.size(); ++p) {
    const FunctionSpace& ls = *parts[p].space;
    out.node_map[p].resize(ls.n_nodes);
    out.dof_map[p].resize(ls.n_dofs);
    for (int n = 0; n < ls.n_nodes; ++n) {
      auto it = nindex.find(detail::coord_key(ls.node_coords(n, 0) + parts[p].dx,
                                              ls.node_coords(n, 1) + parts[p].dy));
      if (it == nindex.end())
        throw std::invalid_argument("merge_spaces: component node missing from merged space");
      out.node_map[p][n] = it->second;
      out.dof_map[p][2 * n] = 2 * it->second;
      out.dof_map[p][2 * n + 1] = 2 * it->second + 1;
    }
  }
  return out;
}

/// Scatter-add a component matrix into global triplets through a DOF map.
template <class Scalar>
void scatter_add(std::vector<Eigen::Triplet<Scalar>>& trips,
                 const Eigen::SparseMatrix<Scalar>& local, const std::vector<int>& dof_map,
                 Scalar factor = Scalar(1)) {
  for (int k = 0; k < local.outerSize(); ++k)
    for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(local, k); it; ++it)
      trips.emplace_back(dof_map[it.row()], dof_map[it.col()], factor * it.value());
}

template <class Scalar>
void scatter_add(Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& global,
                 const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& local,
                 const std::vector<int>& dof_map, Scalar factor = Scalar(1)) {
  for (int i = 0; i < local.size(); ++i) global[dof_map[i]] += factor * local[i];
}

}  // namespace elrom
