#pragma once

// Assembly of the elastodynamics bilinear forms (mass, plane-strain
// stiffness, Rayleigh damping), the Gaussian traction load, the H1 norm
// matrix, the frequency-domain operator and the per-component affine
// decomposition.

#include <cmath>
#include <functional>
#include <vector>

#include "elrom/common.hpp"
#include "elrom/fespace.hpp"
#include "elrom/quadrature.hpp"

namespace elrom {

struct MaterialParams {
  double E = 0.0;        // Young's modulus [Pa]
  double nu = 0.0;       // Poisson ratio
  double rho = 0.0;      // density [kg/m^3]
  double alpha_ray = 0;  // mass-proportional damping [1/s]
  double beta_ray = 0;   // stiffness-proportional damping [s]

  void validate() const {
    if (E <= 0) throw std::invalid_argument("MaterialParams: E must be positive");
    if (nu <= 0 || nu >= 0.5) throw std::invalid_argument("MaterialParams: nu must be in (0, 0.5)");
    if (rho <= 0) throw std::invalid_argument("MaterialParams: rho must be positive");
    if (alpha_ray < 0 || beta_ray < 0)
      throw std::invalid_argument("MaterialParams: damping coefficients must be >= 0");
  }
};

/// Gaussian surface traction on the top boundary:
///   sigma.n = F * g(x1) * [1, -c_friction],  g(x1) = exp(-(x1-x_c)^2/sigma_x^2),
/// to be scaled in time by the separable signature t*exp(-t/sigma_t).
struct LoadParams {
  double F = 0.0;          // amplitude [Pa/s]
  double sigma_t = 1.0;    // temporal width [s]
  double x_c = 0.0;        // load center [m], component-local
  double sigma_x = 1.0;    // spatial width [m]
  double c_friction = 0;   // tangential fraction
  bool active = false;

  void validate() const {
    if (sigma_x <= 0) throw std::invalid_argument("LoadParams: sigma_x must be positive");
    if (sigma_t <= 0) throw std::invalid_argument("LoadParams: sigma_t must be positive");
  }
};

/// Separable time factor f_t(t) = t * exp(-t/sigma_t).
struct TimeSignature {
  double sigma_t = 1.0;

  double value(double t) const { return t * std::exp(-t / sigma_t); }
  /// Laplace transform at s = i*omega: 1/(i*omega + 1/sigma_t)^2.
  Cplx transform(double omega) const {
    Cplx s(1.0 / sigma_t, omega);
    return 1.0 / (s * s);
  }
};

/// Mass form: rho * int w.v. SPD on free DOFs.
inline SpMat assemble_mass(const FunctionSpace& s, double rho) {
  const Mesh& mesh = *s.mesh;
  const int npe = s.nodes_per_element();
  std::vector<Triplet> trips;
  trips.reserve(mesh.n_triangles() * npe * npe * 2);
  double N[6];
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const double jac2 = 2.0 * mesh.triangle_area(t);  // |det J|
    const auto& en = s.element_nodes[t];
    for (const auto& q : triangle_rule_deg4()) {
      shape_values(s.degree, q.l0, q.l1, q.l2, N);
      const double w = rho * q.w * jac2;
      for (int a = 0; a < npe; ++a)
        for (int b = 0; b < npe; ++b) {
          const double m = w * N[a] * N[b];
          trips.emplace_back(2 * en[a], 2 * en[b], m);
          trips.emplace_back(2 * en[a] + 1, 2 * en[b] + 1, m);
        }
    }
  }
  SpMat M(s.n_dofs, s.n_dofs);
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

namespace detail {

// Physical shape gradients on triangle t at one quadrature point.
inline void physical_gradients(const FunctionSpace& s, int t, const TriQuadPoint& q,
                               double (*grad)[2]) {
  const Mesh& mesh = *s.mesh;
  const auto& tri = mesh.triangles[t];
  const Eigen::Vector2d p0 = mesh.vertices.row(tri[0]);
  const Eigen::Vector2d p1 = mesh.vertices.row(tri[1]);
  const Eigen::Vector2d p2 = mesh.vertices.row(tri[2]);
  Eigen::Matrix2d J;
  J.col(0) = p1 - p0;
  J.col(1) = p2 - p0;
  const Eigen::Matrix2d Jit = J.inverse().transpose();
  // dl0 = (-1,-1), dl1 = (1,0), dl2 = (0,1) in reference coordinates.
  const Eigen::Vector2d dl[3] = {Jit * Eigen::Vector2d(-1, -1), Jit * Eigen::Vector2d(1, 0),
                                 Jit * Eigen::Vector2d(0, 1)};
  double g[6][3];
  shape_grad_coeffs(s.degree, q.l0, q.l1, q.l2, g);
  const int npe = s.nodes_per_element();
  for (int a = 0; a < npe; ++a) {
    Eigen::Vector2d d = g[a][0] * dl[0] + g[a][1] * dl[1] + g[a][2] * dl[2];
    grad[a][0] = d.x();
    grad[a][1] = d.y();
  }
}

}  // namespace detail

/// Plane-strain isotropic stiffness form with Lame coefficients
/// lambda = nu E / ((1+nu)(1-2nu)) and mu = E / (2(1+nu)):
///   a(w,v) = int lambda div(w) div(v) + 2 mu eps(w):eps(v).
/// Symmetric PSD; the kernel on a fully-Neumann mesh is spanned by the two
/// translations and the linearized rotation.
inline SpMat assemble_stiffness(const FunctionSpace& s, double E, double nu) {
  if (nu >= 0.5 || nu <= -1.0)
    throw std::invalid_argument("assemble_stiffness: nu outside (-1, 0.5)");
  const double lambda = nu * E / ((1 + nu) * (1 - 2 * nu));
  const double mu = E / (2 * (1 + nu));

  const Mesh& mesh = *s.mesh;
  const int npe = s.nodes_per_element();
  std::vector<Triplet> trips;
  trips.reserve(mesh.n_triangles() * npe * npe * 4);
  double grad[6][2];
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const double jac2 = 2.0 * mesh.triangle_area(t);
    const auto& en = s.element_nodes[t];
    for (const auto& q : triangle_rule_deg4()) {
      detail::physical_gradients(s, t, q, grad);
      const double w = q.w * jac2;
      for (int a = 0; a < npe; ++a)
        for (int b = 0; b < npe; ++b) {
          const double dot = grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1];
          for (int i = 0; i < 2; ++i)
            for (int k = 0; k < 2; ++k) {
              double v = lambda * grad[a][i] * grad[b][k] + mu * grad[a][k] * grad[b][i];
              if (i == k) v += mu * dot;
              trips.emplace_back(2 * en[a] + i, 2 * en[b] + k, w * v);
            }
        }
    }
  }
  SpMat A(s.n_dofs, s.n_dofs);
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

/// Rayleigh damping C = alpha*M + beta*A.
inline SpMat assemble_damping(const SpMat& M, const SpMat& A, double alpha_ray, double beta_ray) {
  if (M.rows() != A.rows() || M.cols() != A.cols())
    throw std::invalid_argument("assemble_damping: dimension mismatch");
  return SpMat(alpha_ray * M + beta_ray * A);
}

/// H1 norm matrix: int grad(w):grad(v) + w.v over all DOFs (SPD).
inline SpMat assemble_h1_norm(const FunctionSpace& s) {
  const Mesh& mesh = *s.mesh;
  const int npe = s.nodes_per_element();
  std::vector<Triplet> trips;
  trips.reserve(mesh.n_triangles() * npe * npe * 2);
  double N[6], grad[6][2];
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const double jac2 = 2.0 * mesh.triangle_area(t);
    const auto& en = s.element_nodes[t];
    for (const auto& q : triangle_rule_deg4()) {
      shape_values(s.degree, q.l0, q.l1, q.l2, N);
      detail::physical_gradients(s, t, q, grad);
      const double w = q.w * jac2;
      for (int a = 0; a < npe; ++a)
        for (int b = 0; b < npe; ++b) {
          const double g =
              w * (grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1] + N[a] * N[b]);
          trips.emplace_back(2 * en[a], 2 * en[b], g);
          trips.emplace_back(2 * en[a] + 1, 2 * en[b] + 1, g);
        }
    }
  }
  SpMat X(s.n_dofs, s.n_dofs);
  X.setFromTriplets(trips.begin(), trips.end());
  return X;
}

/// Spatial factor of the separable traction load, integrated on boundary
/// edges carrying `top_tag`. The Gaussian may be much narrower than an edge,
/// so each edge within 6*sigma_x of the center is split into panels of width
/// <= sigma_x/2 before applying the Gauss rule.
inline Vec assemble_traction_load(const FunctionSpace& s, const LoadParams& load,
                                  const std::string& top_tag = "top") {
  load.validate();
  Vec f = Vec::Zero(s.n_dofs);
  if (!load.active || load.F == 0.0) return f;
  const Mesh& mesh = *s.mesh;
  if (!mesh.has_boundary_tag(top_tag))
    throw std::invalid_argument("assemble_traction_load: unknown boundary tag '" + top_tag + "'");

  const int nen = (s.degree == 2) ? 3 : 2;
  double S[3];
  int enodes[3];
  for (size_t k = 0; k < mesh.boundary_edges.size(); ++k) {
    const auto& e = mesh.boundary_edges[k];
    if (e.tag != top_tag) continue;
    const Eigen::Vector2d p0 = mesh.vertices.row(e.v0);
    const Eigen::Vector2d p1 = mesh.vertices.row(e.v1);
    const double len = (p1 - p0).norm();
    enodes[0] = e.v0;
    enodes[1] = e.v1;
    if (s.degree == 2) enodes[2] = s.boundary_edge_midnode[k];

    // Skip edges where the Gaussian is numerically zero.
    const double lo = std::min(p0.x(), p1.x()), hi = std::max(p0.x(), p1.x());
    if (load.x_c < lo - 6 * load.sigma_x || load.x_c > hi + 6 * load.sigma_x) continue;

    const int n_panels = std::max(1, static_cast<int>(std::ceil(len / (0.5 * load.sigma_x))));
    for (int p = 0; p < n_panels; ++p) {
      const double ta = static_cast<double>(p) / n_panels;
      const double tb = static_cast<double>(p + 1) / n_panels;
      for (const auto& q : edge_rule_gauss4()) {
        const double t = ta + (tb - ta) * q.t;
        const Eigen::Vector2d x = (1 - t) * p0 + t * p1;
        const double g = std::exp(-std::pow((x.x() - load.x_c) / load.sigma_x, 2));
        const double w = q.w * (tb - ta) * len * load.F * g;
        edge_shape_values(s.degree, t, S);
        for (int a = 0; a < nen; ++a) {
          f[2 * enodes[a]] += w * S[a];
          f[2 * enodes[a] + 1] += -load.c_friction * w * S[a];
        }
      }
    }
  }
  return f;
}

/// Frequency-domain operator A_hat(omega) = -omega^2 M + i omega C + A.
inline SpMatC frequency_operator(const SpMat& M, const SpMat& C, const SpMat& A, double omega) {
  if (M.rows() != A.rows() || C.rows() != A.rows())
    throw std::invalid_argument("frequency_operator: dimension mismatch");
  SpMatC out = A.cast<Cplx>();
  out += Cplx(-omega * omega, 0.0) * M.cast<Cplx>();
  out += Cplx(0.0, omega) * C.cast<Cplx>();
  return out;
}

/// Local frequency-domain parameter of one component.
struct LocalParams {
  double E = 1.0;
  double alpha_ray = 0.0;
  double beta_ray = 0.0;
  double rho = 1.0;
  double omega = 0.0;
};

/// Exact affine decomposition A_hat(mu) = sum_q theta_q(mu) * A_q. With
/// Rayleigh damping the family collapses to two parameter-independent terms:
/// the unit-density mass matrix and the unit-modulus stiffness matrix, with
///   theta_M = rho*(-omega^2 + i*alpha*omega),  theta_A = E*(1 + i*beta*omega).
struct AffineOperator {
  std::vector<SpMat> terms;
  std::vector<std::function<Cplx(const LocalParams&)>> thetas;
  bool symmetric = true;

  SpMatC evaluate(const LocalParams& p) const {
    SpMatC out(terms[0].rows(), terms[0].cols());
    for (size_t q = 0; q < terms.size(); ++q) out += thetas[q](p) * terms[q].cast<Cplx>();
    return out;
  }
};

inline AffineOperator build_affine_component_operators(const FunctionSpace& s, double nu) {
  AffineOperator op;
  op.terms.push_back(assemble_mass(s, 1.0));
  op.terms.push_back(assemble_stiffness(s, 1.0, nu));
  op.thetas.push_back([](const LocalParams& p) {
    return p.rho * Cplx(-p.omega * p.omega, p.alpha_ray * p.omega);
  });
  op.thetas.push_back(
      [](const LocalParams& p) { return p.E * Cplx(1.0, p.beta_ray * p.omega); });
  return op;
}

}  // namespace elrom
