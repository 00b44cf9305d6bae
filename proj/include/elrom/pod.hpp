#pragma once

// Proper Orthogonal Decomposition by the method of snapshots in an arbitrary
// SPD inner product, plus modified Gram-Schmidt orthonormalization used by
// POD and the greedy basis accretion.

#include <Eigen/Eigenvalues>

#include "elrom/common.hpp"

namespace elrom {

/// Retention target: fixed size, spectral tolerance, or both (size caps).
struct PodTarget {
  int size = -1;      // <0: unlimited
  double tol = -1.0;  // retain n with lambda_{n+1}/lambda_1 <= tol; <0: keep all nonzero

  static PodTarget fixed(int n) { return {n, -1.0}; }
  static PodTarget tolerance(double t) { return {-1, t}; }
};

template <class Scalar>
struct BasicPodResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> modes;  // X-orthonormal columns
  Vec eigenvalues;                                              // non-increasing
};
using PodResult = BasicPodResult<double>;
using PodResultC = BasicPodResult<Cplx>;

/// In-place modified Gram-Schmidt in the X inner product (two passes).
/// Columns whose residual falls below drop_tol * (largest input norm) are
/// removed; returns the retained count.
template <class Scalar>
int orthonormalize_in(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& V, const SpMat& X,
                      double drop_tol = 1e-12) {
  using MatT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using VecT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const int m = static_cast<int>(V.cols());
  MatT out(V.rows(), m);
  MatT xout(V.rows(), m);  // cached X * q_k, X symmetric
  double max_norm = 0.0;
  for (int j = 0; j < m; ++j) {
    VecT xv = X.template cast<Scalar>() * V.col(j);
    max_norm = std::max(max_norm, std::sqrt(std::abs(V.col(j).dot(xv))));
  }
  int kept = 0;
  for (int j = 0; j < m; ++j) {
    VecT w = V.col(j);
    for (int pass = 0; pass < 2; ++pass)
      for (int k = 0; k < kept; ++k) w -= out.col(k) * xout.col(k).dot(w);
    VecT xw = X.template cast<Scalar>() * w;
    const double nw = std::sqrt(std::abs(w.dot(xw)));
    if (nw > drop_tol * max_norm && nw > 0.0) {
      out.col(kept) = w / Scalar(nw);
      xout.col(kept) = xw / Scalar(nw);
      ++kept;
    }
  }
  out.conservativeResize(Eigen::NoChange, kept);
  V = out;
  return kept;
}

/// POD of column snapshots in the SPD inner product X. Eigen-decomposes the
/// snapshot Gram matrix; modes are X-orthonormal, eigenvalues non-increasing.
/// A zero snapshot matrix yields an empty basis. A Gram matrix with a
/// significantly negative eigenvalue flags an indefinite inner product.
template <class Scalar>
BasicPodResult<Scalar> pod(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& snapshots, const SpMat& X,
    const PodTarget& target) {
  using MatT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (snapshots.cols() < 1)
    throw std::invalid_argument("pod: need at least one snapshot");
  if (X.rows() != snapshots.rows())
    throw std::invalid_argument("pod: inner product dimension mismatch");

  const MatT XS = X.template cast<Scalar>() * snapshots;
  MatT gram = snapshots.adjoint() * XS;
  gram = Scalar(0.5) * (gram + MatT(gram.adjoint()));  // symmetrize roundoff

  Eigen::SelfAdjointEigenSolver<MatT> eig(gram);
  if (eig.info() != Eigen::Success) throw std::runtime_error("pod: eigensolver failed");
  const Vec lam_asc = eig.eigenvalues();
  const double lmax = lam_asc.cwiseAbs().maxCoeff();
  if (lmax > 0 && lam_asc.minCoeff() < -1e-8 * lmax)
    throw std::invalid_argument("pod: inner product is not positive semidefinite on snapshots");

  const int m = static_cast<int>(gram.rows());
  BasicPodResult<Scalar> result;
  result.eigenvalues.resize(m);
  MatT vecs(m, m);
  for (int i = 0; i < m; ++i) {  // descending order
    result.eigenvalues[i] = lam_asc[m - 1 - i];
    vecs.col(i) = eig.eigenvectors().col(m - 1 - i);
  }

  int n = 0;
  const double lambda1 = std::max(result.eigenvalues[0], 0.0);
  for (int i = 0; i < m; ++i) {
    if (result.eigenvalues[i] <= lambda1 * 1e-14 || result.eigenvalues[i] <= 0) break;
    if (target.tol > 0 && n >= 1 && result.eigenvalues[i] / lambda1 <= target.tol) break;
    if (target.size >= 0 && n >= target.size) break;
    ++n;
  }

  result.modes.resize(snapshots.rows(), n);
  for (int i = 0; i < n; ++i)
    result.modes.col(i) =
        snapshots * vecs.col(i) / Scalar(std::sqrt(result.eigenvalues[i]));
  // Tighten orthonormality lost to roundoff for small eigenvalues.
  if (n > 0) orthonormalize_in(result.modes, X);
  result.eigenvalues.conservativeResize(std::min<int>(m, std::max(n, 1)));
  return result;
}

/// Real POD of complex snapshots: stacks real and imaginary parts so the
/// returned modes (and hence the PR-RBC basis) stay real.
inline PodResult pod_real_stacked(const MatC& snapshots, const SpMat& X,
                                  const PodTarget& target) {
  Mat stacked(snapshots.rows(), 2 * snapshots.cols());
  stacked << snapshots.real(), snapshots.imag();
  return pod<double>(stacked, X, target);
}

}  // namespace elrom
