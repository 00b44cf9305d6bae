#pragma once

// Reference solvers: sparse direct solve of the frequency-domain system and
// implicit Newmark-beta time marching (beta=1/4, gamma=1/2 mid-point rule by
// default), plus the Richardson time-discretization indicator.

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <cmath>
#include <string>
#include <type_traits>
#include <vector>

#include "elrom/common.hpp"
#include "elrom/forms.hpp"

namespace elrom {

struct NewmarkConfig {
  double beta_t = 0.25;
  double gamma_t = 0.5;
  double dt = 0.0;
  int n_steps = 0;
  double t_final = 0.0;

  static NewmarkConfig uniform(double t_final, int n_steps, double beta_t = 0.25,
                               double gamma_t = 0.5) {
    NewmarkConfig c;
    c.t_final = t_final;
    c.n_steps = n_steps;
    c.dt = t_final / n_steps;
    c.beta_t = beta_t;
    c.gamma_t = gamma_t;
    return c;
  }

  void validate() const {
    if (n_steps < 1 || dt <= 0 || t_final <= 0)
      throw std::invalid_argument("NewmarkConfig: need n_steps >= 1, dt > 0, t_final > 0");
    if (std::abs(dt * n_steps - t_final) > 1e-10 * t_final)
      throw std::invalid_argument("NewmarkConfig: dt * n_steps != t_final");
  }
};

/// Displacement / velocity / acceleration coefficient trajectories at the
/// n_steps+1 time nodes (one column per node). Velocity and acceleration
/// storage is optional for large runs.
template <class Scalar>
struct BasicTimeHistory {
  NewmarkConfig cfg;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> u, v, a;
  std::string basis_tag = "fe";
  double max_step_residual = 0.0;  // filled when residual checking is on

  int n_nodes() const { return static_cast<int>(u.cols()); }
  double time_at(int j) const { return j * cfg.dt; }
};
using TimeHistory = BasicTimeHistory<double>;
using TimeHistoryC = BasicTimeHistory<Cplx>;

template <class Scalar>
struct BasicLoadTerm {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> f_x;
  TimeSignature signature;
};
using LoadTerm = BasicLoadTerm<double>;
using LoadTermC = BasicLoadTerm<Cplx>;

// ---------------------------------------------------------------------------
// Direct solver wrappers with a uniform interface.

template <class MatT>
struct DirectSolver;

template <>
struct DirectSolver<SpMat> {
  Eigen::SimplicialLDLT<SpMat> solver;
  void compute(const SpMat& A) {
    solver.compute(A);
    if (solver.info() != Eigen::Success)
      throw FactorizationError("sparse LDLT factorization failed");
  }
  template <class Rhs>
  auto solve(const Rhs& b) const { return solver.solve(b).eval(); }
};

template <>
struct DirectSolver<SpMatC> {
  Eigen::SparseLU<SpMatC> solver;
  void compute(const SpMatC& A) {
    solver.compute(A);
    if (solver.info() != Eigen::Success)
      throw FactorizationError("sparse LU factorization failed");
  }
  template <class Rhs>
  auto solve(const Rhs& b) const { return solver.solve(b).eval(); }
};

template <>
struct DirectSolver<Mat> {
  Eigen::PartialPivLU<Mat> solver;
  double scale = 0.0;
  void compute(const Mat& A) {
    solver.compute(A);
    scale = A.cwiseAbs().maxCoeff();
    const double dmin = solver.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (!(dmin > scale * 1e-300)) throw FactorizationError("dense LU: singular matrix");
  }
  template <class Rhs>
  auto solve(const Rhs& b) const { return solver.solve(b).eval(); }
};

template <>
struct DirectSolver<MatC> {
  Eigen::PartialPivLU<MatC> solver;
  double scale = 0.0;
  void compute(const MatC& A) {
    solver.compute(A);
    scale = A.cwiseAbs().maxCoeff();
    const double dmin = solver.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (!(dmin > scale * 1e-300)) throw FactorizationError("dense LU: singular matrix");
  }
  template <class Rhs>
  auto solve(const Rhs& b) const { return solver.solve(b).eval(); }
};

// ---------------------------------------------------------------------------

/// Sparse direct solve of A_hat u = f_hat with a residual contract of 1e-10
/// relative; throws FactorizationError on singular or badly conditioned
/// systems.
inline VecC solve_frequency_fe(const SpMatC& A_hat, const VecC& f_hat,
                               double* residual_out = nullptr) {
  if (A_hat.rows() != A_hat.cols() || A_hat.rows() != f_hat.size())
    throw std::invalid_argument("solve_frequency_fe: dimension mismatch");
  DirectSolver<SpMatC> lu;
  lu.compute(A_hat);
  VecC u = lu.solve(f_hat);
  const double fn = f_hat.norm();
  const double res = fn > 0 ? (A_hat * u - f_hat).norm() / fn : 0.0;
  if (residual_out) *residual_out = res;
  if (res > 1e-8)
    throw FactorizationError("solve_frequency_fe: relative residual " + std::to_string(res));
  return u;
}

/// Initial acceleration from M a0 = f0 (zero initial displacement/velocity).
inline Vec initial_acceleration(const SpMat& M, const Vec& f0) {
  if (M.rows() != f0.size())
    throw std::invalid_argument("initial_acceleration: dimension mismatch");
  DirectSolver<SpMat> chol;
  chol.compute(M);
  return chol.solve(f0);
}

struct MarchOptions {
  bool store_derivatives = true;
  bool check_residual = false;
};

/// Newmark-beta marching with zero initial conditions. The marching matrix
/// T = M + dt*gamma*C + dt^2*beta*A is factorized once and reused for every
/// step. Loads are sums of separable terms f_x * f_t(t).
template <class MatT>
BasicTimeHistory<typename MatT::Scalar> newmark_march(
    const MatT& M, const MatT& C, const MatT& A,
    const std::vector<BasicLoadTerm<typename MatT::Scalar>>& loads, const NewmarkConfig& cfg,
    const MarchOptions& opts = {}) {
  using Scalar = typename MatT::Scalar;
  using VecT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  cfg.validate();
  const int n = static_cast<int>(M.rows());
  const double dt = cfg.dt, gt = cfg.gamma_t, bt = cfg.beta_t;

  auto load_at = [&](double t) {
    VecT f = VecT::Zero(n);
    for (const auto& term : loads) f += term.f_x * Scalar(term.signature.value(t));
    return f;
  };

  BasicTimeHistory<Scalar> hist;
  hist.cfg = cfg;
  hist.u.setZero(n, cfg.n_steps + 1);
  if (opts.store_derivatives) {
    hist.v.setZero(n, cfg.n_steps + 1);
    hist.a.setZero(n, cfg.n_steps + 1);
  }

  DirectSolver<MatT> msolver;
  msolver.compute(M);
  VecT u = VecT::Zero(n), v = VecT::Zero(n);
  VecT a = msolver.solve(load_at(0.0));
  if (opts.store_derivatives) hist.a.col(0) = a;

  MatT T = M + Scalar(dt * gt) * C + Scalar(dt * dt * bt) * A;
  DirectSolver<MatT> tsolver;
  tsolver.compute(T);

  for (int j = 1; j <= cfg.n_steps; ++j) {
    const VecT fj = load_at(j * dt);
    const VecT vp = v + Scalar(dt * (1 - gt)) * a;
    const VecT up = u + Scalar(dt) * v + Scalar(dt * dt * (0.5 - bt)) * a;
    const VecT anew = tsolver.solve(VecT(fj - C * vp - A * up));
    v = vp + Scalar(dt * gt) * anew;
    u = up + Scalar(dt * dt * bt) * anew;
    a = anew;
    hist.u.col(j) = u;
    if (opts.store_derivatives) {
      hist.v.col(j) = v;
      hist.a.col(j) = a;
    }
    if (opts.check_residual) {
      const VecT r = M * a + C * v + A * u - fj;
      const double den = std::max({(M * a).norm(), (C * v).norm(), (A * u).norm(), fj.norm()});
      if (den > 0)
        hist.max_step_residual = std::max(hist.max_step_residual, r.norm() / den);
    }
  }
  return hist;
}

// ---------------------------------------------------------------------------
// Richardson extrapolation indicator.

struct RichardsonResult {
  double delta = 0.0;    // normalized solution change between dt and 2*dt
  double epsilon = 0.0;  // delta / (2^p - 1), p = 2
};

namespace detail {
template <class Derived>
double norm_in(const Eigen::MatrixBase<Derived>& x, const SpMat& X) {
  return std::sqrt(std::abs(x.dot(X * x.derived())));
}
}  // namespace detail

/// delta = max_j ||u_dt^{2j} - u_2dt^j||_X / max_j ||u_dt^j||_X over shared
/// nodes, epsilon = delta / 3 for the second-order Newmark scheme.
inline RichardsonResult richardson_indicator(const TimeHistory& fine, const TimeHistory& coarse,
                                             const SpMat& X) {
  if (fine.cfg.n_steps != 2 * coarse.cfg.n_steps ||
      std::abs(fine.cfg.t_final - coarse.cfg.t_final) > 1e-12 * fine.cfg.t_final)
    throw std::invalid_argument("richardson_indicator: histories are not a dt / 2dt pair");
  if (fine.u.rows() != coarse.u.rows())
    throw std::invalid_argument("richardson_indicator: dimension mismatch");

  double num = 0.0, den = 0.0;
  for (int j = 1; j <= coarse.cfg.n_steps; ++j)
    num = std::max(num, detail::norm_in(Vec(fine.u.col(2 * j) - coarse.u.col(j)), X));
  for (int j = 1; j <= fine.cfg.n_steps; ++j)
    den = std::max(den, detail::norm_in(Vec(fine.u.col(j)), X));

  RichardsonResult r;
  r.delta = den > 0 ? num / den : 0.0;
  r.epsilon = r.delta / 3.0;  // 2^p - 1 with p = 2
  return r;
}

}  // namespace elrom
