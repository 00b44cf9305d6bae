#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <stdexcept>
#include <string>

namespace elrom {

using Cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using VecC = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using MatC = Eigen::MatrixXcd;
using SpMat = Eigen::SparseMatrix<double>;
using SpMatC = Eigen::SparseMatrix<Cplx>;
using Triplet = Eigen::Triplet<double>;
using TripletC = Eigen::Triplet<Cplx>;

/// Direct factorization did not succeed (singular or indefinite system).
struct FactorizationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Offline training could not produce a usable space.
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Unreadable, truncated or version-mismatched library / data file.
struct CorruptFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace elrom
