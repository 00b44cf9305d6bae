#pragma once

// Structured triangulations of the archetype geometries: axis-aligned
// rectangles and the T-shaped pier, meshed as crossed-triangle grids.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "elrom/common.hpp"

namespace elrom {

/// Conforming 2D triangle mesh with tagged boundary edges.
///
/// Invariants: every triangle has positive signed area; every boundary
/// edge belongs to exactly one triangle; the boundary tags partition the
/// boundary.
struct Mesh {
  struct BoundaryEdge {
    int v0 = 0, v1 = 0;  // endpoint vertex indices
    std::string tag;
  };

  Eigen::Matrix<double, Eigen::Dynamic, 2> vertices;  // coordinates [m]
  std::vector<std::array<int, 3>> triangles;          // CCW vertex triples
  std::vector<BoundaryEdge> boundary_edges;
  double characteristic_h = 0.0;

  int n_vertices() const { return static_cast<int>(vertices.rows()); }
  int n_triangles() const { return static_cast<int>(triangles.size()); }

  double triangle_area(int t) const {
    const auto& tri = triangles[t];
    Eigen::Vector2d a = vertices.row(tri[0]);
    Eigen::Vector2d b = vertices.row(tri[1]);
    Eigen::Vector2d c = vertices.row(tri[2]);
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
  }

  double area() const {
    double s = 0.0;
    for (int t = 0; t < n_triangles(); ++t) s += triangle_area(t);
    return s;
  }

  std::set<std::string> boundary_tags() const {
    std::set<std::string> tags;
    for (const auto& e : boundary_edges) tags.insert(e.tag);
    return tags;
  }

  bool has_boundary_tag(const std::string& tag) const {
    return boundary_tags().count(tag) > 0;
  }
};

namespace detail {

// Quantized coordinate key for merging coincident nodes. Construction uses
// identical arithmetic for coincident nodes, so the quantization only has to
// absorb last-bit noise.
inline std::pair<std::int64_t, std::int64_t> coord_key(double x, double y) {
  const double q = 1e9;
  return {static_cast<std::int64_t>(std::llround(x * q)),
          static_cast<std::int64_t>(std::llround(y * q))};
}

// Recover boundary edges from triangle adjacency: an edge on the boundary is
// referenced by exactly one triangle.
inline std::vector<std::pair<int, int>> find_boundary_edges(
    const std::vector<std::array<int, 3>>& triangles) {
  std::map<std::pair<int, int>, int> count;
  for (const auto& tri : triangles) {
    for (int e = 0; e < 3; ++e) {
      int a = tri[e], b = tri[(e + 1) % 3];
      count[{std::min(a, b), std::max(a, b)}]++;
    }
  }
  std::vector<std::pair<int, int>> edges;
  for (const auto& [edge, c] : count)
    if (c == 1) edges.push_back(edge);
  return edges;
}

}  // namespace detail

/// Structured crossed-triangle grid on [0,length] x [0,height] with nx x ny
/// quads, each split along the same diagonal. Boundary edges are tagged
/// left / right / bottom / top.
inline Mesh build_rectangle_mesh(double length, double height, int nx, int ny) {
  if (length <= 0.0 || height <= 0.0)
    throw std::invalid_argument("build_rectangle_mesh: dimensions must be positive");
  if (nx < 1 || ny < 1)
    throw std::invalid_argument("build_rectangle_mesh: subdivisions must be >= 1");

  Mesh mesh;
  const double dx = length / nx, dy = height / ny;
  mesh.vertices.resize((nx + 1) * (ny + 1), 2);
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      mesh.vertices.row(j * (nx + 1) + i) << i * dx, j * dy;

  auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      mesh.triangles.push_back({a, b, c});
      mesh.triangles.push_back({a, c, d});
    }

  const double tol = 1e-12 * std::max(length, height);
  for (const auto& [a, b] : detail::find_boundary_edges(mesh.triangles)) {
    Eigen::Vector2d m = 0.5 * (mesh.vertices.row(a) + mesh.vertices.row(b));
    std::string tag;
    if (std::abs(m.x()) < tol) tag = "left";
    else if (std::abs(m.x() - length) < tol) tag = "right";
    else if (std::abs(m.y()) < tol) tag = "bottom";
    else tag = "top";
    mesh.boundary_edges.push_back({a, b, tag});
  }

  mesh.characteristic_h = std::hypot(dx, dy);
  return mesh;
}

/// T-shaped pier: a flange [0,flange_length] x [0,flange_height] with a
/// centered stem [x0,x0+stem_length] x [-stem_height,0]. The stem grid reuses
/// the flange spacing so the union mesh is conforming; subdivisions that do
/// not line up with the stem extent are rejected.
///
/// Tags: left / right (flange end ports), top, bottom (flange underside),
/// stem_left / stem_right / stem_bottom.
inline Mesh build_tee_mesh(double flange_length, double flange_height,
                           double stem_length, double stem_height,
                           int nx_flange, int ny_flange) {
  if (flange_length <= 0 || flange_height <= 0 || stem_length <= 0 || stem_height <= 0)
    throw std::invalid_argument("build_tee_mesh: dimensions must be positive");
  if (nx_flange < 1 || ny_flange < 1)
    throw std::invalid_argument("build_tee_mesh: subdivisions must be >= 1");

  const double dx = flange_length / nx_flange;
  const double dy = flange_height / ny_flange;
  const double x0 = 0.5 * (flange_length - stem_length);

  auto near_int = [](double v) { return std::abs(v - std::llround(v)) < 1e-9; };
  if (!near_int(x0 / dx) || !near_int(stem_length / dx) || !near_int(stem_height / dy))
    throw std::invalid_argument("build_tee_mesh: resolution incompatible with stem alignment");

  const int i0 = static_cast<int>(std::llround(x0 / dx));
  const int nsx = static_cast<int>(std::llround(stem_length / dx));
  const int nsy = static_cast<int>(std::llround(stem_height / dy));

  Mesh mesh;
  std::map<std::pair<std::int64_t, std::int64_t>, int> index;
  std::vector<Eigen::Vector2d> coords;
  auto vertex = [&](double x, double y) {
    auto key = detail::coord_key(x, y);
    auto [it, inserted] = index.try_emplace(key, static_cast<int>(coords.size()));
    if (inserted) coords.emplace_back(x, y);
    return it->second;
  };

  // Flange quads, then stem quads; shared nodes on y=0 are merged.
  for (int j = 0; j < ny_flange; ++j)
    for (int i = 0; i < nx_flange; ++i) {
      int a = vertex(i * dx, j * dy), b = vertex((i + 1) * dx, j * dy);
      int c = vertex((i + 1) * dx, (j + 1) * dy), d = vertex(i * dx, (j + 1) * dy);
      mesh.triangles.push_back({a, b, c});
      mesh.triangles.push_back({a, c, d});
    }
  for (int j = 0; j < nsy; ++j)
    for (int i = 0; i < nsx; ++i) {
      double xl = (i0 + i) * dx, xr = (i0 + i + 1) * dx;
      double yb = -(j + 1) * dy, yt = -j * dy;
      int a = vertex(xl, yb), b = vertex(xr, yb), c = vertex(xr, yt), d = vertex(xl, yt);
      mesh.triangles.push_back({a, b, c});
      mesh.triangles.push_back({a, c, d});
    }

  mesh.vertices.resize(static_cast<int>(coords.size()), 2);
  for (int i = 0; i < static_cast<int>(coords.size()); ++i)
    mesh.vertices.row(i) = coords[i].transpose();

  const double tol = 1e-12 * std::max(flange_length, flange_height + stem_height);
  const double x1 = x0 + stem_length;
  for (const auto& [a, b] : detail::find_boundary_edges(mesh.triangles)) {
    Eigen::Vector2d m = 0.5 * (mesh.vertices.row(a) + mesh.vertices.row(b));
    std::string tag;
    if (std::abs(m.x()) < tol && m.y() > 0) tag = "left";
    else if (std::abs(m.x() - flange_length) < tol && m.y() > 0) tag = "right";
    else if (std::abs(m.y() - flange_height) < tol) tag = "top";
    else if (std::abs(m.y() + stem_height) < tol) tag = "stem_bottom";
    else if (std::abs(m.x() - x0) < tol && m.y() < 0) tag = "stem_left";
    else if (std::abs(m.x() - x1) < tol && m.y() < 0) tag = "stem_right";
    else tag = "bottom";
    mesh.boundary_edges.push_back({a, b, tag});
  }

  mesh.characteristic_h = std::hypot(dx, dy);
  return mesh;
}

/// Mesh translated by (dx, dy); topology and tags unchanged.
inline Mesh translate(const Mesh& mesh, double dx, double dy) {
  Mesh out = mesh;
  out.vertices.col(0).array() += dx;
  out.vertices.col(1).array() += dy;
  return out;
}

}  // namespace elrom
