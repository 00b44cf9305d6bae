#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "elrom/forms.hpp"
#include "elrom/mesh.hpp"

using namespace elrom;

namespace {

FunctionSpace unit_square_space(int degree = 2) {
  auto mesh = std::make_shared<Mesh>(build_rectangle_mesh(1.0, 1.0, 1, 1));
  return build_function_space(mesh, degree);
}

Vec constant_field(const FunctionSpace& s, double ux, double uy) {
  Vec u(s.n_dofs);
  for (int n = 0; n < s.n_nodes; ++n) {
    u[2 * n] = ux;
    u[2 * n + 1] = uy;
  }
  return u;
}

}  // namespace

TEST(Mass, ConstantIntegration) {
  FunctionSpace s = unit_square_space();
  SpMat M = assemble_mass(s, 1.0);
  Vec ones = constant_field(s, 1.0, 1.0);
  // 1^T M 1 = rho * area * 2 components.
  EXPECT_NEAR(ones.dot(M * ones), 2.0, 1e-12);
}

TEST(Mass, DensityScaling) {
  FunctionSpace s = unit_square_space();
  SpMat M1 = assemble_mass(s, 1.0);
  SpMat M2 = assemble_mass(s, 1180.0);
  EXPECT_NEAR((Mat(M2) - 1180.0 * Mat(M1)).cwiseAbs().maxCoeff(), 0.0, 1e-10);
}

TEST(Mass, PositiveDefinite) {
  FunctionSpace s = unit_square_space();
  Mat M = Mat(assemble_mass(s, 1.0));
  Eigen::SelfAdjointEigenSolver<Mat> eig(M);
  EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
}

TEST(Stiffness, RigidBodyKernel) {
  auto mesh = std::make_shared<Mesh>(build_rectangle_mesh(2.0, 1.0, 4, 2));
  FunctionSpace s = build_function_space(mesh, 2);
  SpMat A = assemble_stiffness(s, 2.755e9, 0.35);
  const double scale = Mat(A).cwiseAbs().maxCoeff();

  EXPECT_LT((A * constant_field(s, 1.0, 0.0)).norm() / scale, 1e-10);
  EXPECT_LT((A * constant_field(s, 0.0, 1.0)).norm() / scale, 1e-10);

  Vec rot(s.n_dofs);
  for (int n = 0; n < s.n_nodes; ++n) {
    rot[2 * n] = -s.node_coords(n, 1);
    rot[2 * n + 1] = s.node_coords(n, 0);
  }
  EXPECT_LT((A * rot).norm() / scale, 1e-9);
}

TEST(Stiffness, KernelDimensionIsThree) {
  auto mesh = std::make_shared<Mesh>(build_rectangle_mesh(1.0, 1.0, 1, 1));
  FunctionSpace s = build_function_space(mesh, 2);
  Mat A = Mat(assemble_stiffness(s, 1.0, 0.3));
  Eigen::SelfAdjointEigenSolver<Mat> eig(A);
  const double lmax = eig.eigenvalues().maxCoeff();
  int nullity = 0;
  for (int i = 0; i < A.rows(); ++i)
    if (eig.eigenvalues()[i] < 1e-10 * lmax) ++nullity;
  EXPECT_EQ(nullity, 3);
}

TEST(Stiffness, UniaxialPatchTest) {
  // u = (g*x, 0) on a single-element mesh has energy (lambda + 2 mu) g^2 A.
  auto mesh = std::make_shared<Mesh>(build_rectangle_mesh(1.0, 1.0, 1, 1));
  FunctionSpace s = build_function_space(mesh, 2);
  const double E = 7.0, nu = 0.3, g = 0.25;
  SpMat A = assemble_stiffness(s, E, nu);
  Vec u(s.n_dofs);
  for (int n = 0; n < s.n_nodes; ++n) {
    u[2 * n] = g * s.node_coords(n, 0);
    u[2 * n + 1] = 0.0;
  }
  const double lambda = nu * E / ((1 + nu) * (1 - 2 * nu));
  const double mu = E / (2 * (1 + nu));
  const double exact = (lambda + 2 * mu) * g * g * 1.0;
  EXPECT_NEAR(u.dot(A * u), exact, 1e-12 * exact);
}

TEST(Stiffness, IncompressibleLimitRejected) {
  FunctionSpace s = unit_square_space();
  EXPECT_THROW(assemble_stiffness(s, 1.0, 0.5), std::invalid_argument);
}

TEST(Damping, RayleighCombination) {
  auto mesh = std::make_shared<Mesh>(build_rectangle_mesh(2.0, 1.0, 2, 1));
  FunctionSpace s = build_function_space(mesh, 2);
  SpMat M = assemble_mass(s, 1180.0);
  SpMat A = assemble_stiffness(s, 2.755e9, 0.35);

  EXPECT_EQ(Mat(assemble_damping(M, A, 0.0, 0.0)).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_NEAR((Mat(assemble_damping(M, A, 1.0, 0.0)) - Mat(M)).cwiseAbs().maxCoeff(), 0.0, 0.0);

  const double alpha = 2.7e-4, beta = 5.3e-5;
  SpMat C = assemble_damping(M, A, alpha, beta);
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> pick(0, s.n_dofs - 1);
  for (int k = 0; k < 5; ++k) {
    int i = pick(rng), j = pick(rng);
    const double expected = alpha * M.coeff(i, j) + beta * A.coeff(i, j);
    const double got = C.coeff(i, j);
    if (expected != 0.0)
      EXPECT_NEAR(got, expected, 1e-15 * std::abs(expected));
    else
      EXPECT_EQ(got, 0.0);
  }
  SpMat bad(3, 3);
  EXPECT_THROW(assemble_damping(M, bad, 1.0, 1.0), std::invalid_argument);
}

TEST(Traction, ZeroAmplitudeAndInactive) {
  auto mesh = std::make_shared<Mesh>(build_rectangle_mesh(5.0, 1.0, 10, 2));
  FunctionSpace s = build_function_space(mesh, 2);
  LoadParams load;
  load.F = 0.0;
  load.active = true;
  load.x_c = 2.5;
  load.sigma_x = 0.1;
  EXPECT_EQ(assemble_traction_load(s, load).norm(), 0.0);
  load.F = 1.0;
  load.active = false;
  EXPECT_EQ(assemble_traction_load(s, load).norm(), 0.0);
}

TEST(Traction, ComponentRatioIsMinusFriction) {
  auto mesh = std::make_shared<Mesh>(build_rectangle_mesh(5.0, 1.0, 10, 2));
  FunctionSpace s = build_function_space(mesh, 2);
  LoadParams load;
  load.F = 3.0;
  load.active = true;
  load.x_c = 2.5;
  load.sigma_x = 0.04;
  load.c_friction = 0.6;
  Vec f = assemble_traction_load(s, load);
  double sx = 0, sy = 0;
  for (int n = 0; n < s.n_nodes; ++n) {
    sx += f[2 * n];
    sy += f[2 * n + 1];
  }
  EXPECT_NEAR(sy / sx, -load.c_friction, 1e-12);
}

TEST(Traction, GaussianIntegralOracle) {
  // Sum of x-entries = F * integral of the Gaussian = F * sqrt(pi) * sigma_x
  // for a centered narrow load (partition of unity of the trace basis).
  auto mesh = std::make_shared<Mesh>(build_rectangle_mesh(5.0, 1.0, 20, 2));
  FunctionSpace s = build_function_space(mesh, 2);
  LoadParams load;
  load.F = -2.0e3;
  load.active = true;
  load.x_c = 2.5;
  load.sigma_x = 0.02;
  Vec f = assemble_traction_load(s, load);
  double sx = 0;
  for (int n = 0; n < s.n_nodes; ++n) sx += f[2 * n];
  const double exact = load.F * std::sqrt(kPi) * load.sigma_x;
  EXPECT_NEAR(sx, exact, 0.02 * std::abs(exact));
}

TEST(H1Norm, ConstantFieldAndScaling) {
  auto mesh = std::make_shared<Mesh>(build_rectangle_mesh(2.0, 1.0, 4, 2));
  FunctionSpace s = build_function_space(mesh, 2);
  SpMat X = assemble_h1_norm(s);
  Vec ones = constant_field(s, 1.0, 1.0);
  EXPECT_NEAR(ones.dot(X * ones), 2.0 * 2.0, 1e-12);  // 2 * area

  std::mt19937 rng(3);
  std::normal_distribution<double> gauss;
  Vec u(s.n_dofs);
  for (int i = 0; i < s.n_dofs; ++i) u[i] = gauss(rng);
  const double n1 = std::sqrt(u.dot(X * u));
  const double n2 = std::sqrt((2 * u).dot(X * (2 * u)));
  EXPECT_NEAR(n2, 2.0 * n1, 1e-14 * n2);
}

TEST(H1Norm, CholeskySucceeds) {
  auto mesh = std::make_shared<Mesh>(build_rectangle_mesh(1.0, 1.0, 2, 2));
  FunctionSpace s = build_function_space(mesh, 2);
  SpMat X = assemble_h1_norm(s);
  Eigen::SimplicialLLT<SpMat> llt(X);
  EXPECT_EQ(llt.info(), Eigen::Success);
}

TEST(FrequencyOperator, StaticLimitAndConjugacy) {
  auto mesh = std::make_shared<Mesh>(build_rectangle_mesh(2.0, 1.0, 2, 1));
  FunctionSpace s = build_function_space(mesh, 2);
  SpMat M = assemble_mass(s, 1180.0);
  SpMat A = assemble_stiffness(s, 2.755e9, 0.35);
  SpMat C = assemble_damping(M, A, 2e-4, 1e-4);

  SpMatC A0 = frequency_operator(M, C, A, 0.0);
  EXPECT_NEAR((Mat(A0.real()) - Mat(A)).cwiseAbs().maxCoeff(), 0.0, 1e-12);
  EXPECT_EQ(Mat(A0.imag()).cwiseAbs().maxCoeff(), 0.0);

  SpMat Czero(s.n_dofs, s.n_dofs);
  SpMatC Ac = frequency_operator(M, Czero, A, 3.5);
  EXPECT_EQ(Mat(Ac.imag()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_NEAR((Mat(Ac.real()) - (Mat(A) - 3.5 * 3.5 * Mat(M))).cwiseAbs().maxCoeff(), 0.0, 1e-9);

  std::mt19937 rng(11);
  std::uniform_real_distribution<double> w(0.1, 100.0);
  for (int k = 0; k < 10; ++k) {
    double omega = w(rng);
    MatC P = MatC(frequency_operator(M, C, A, omega));
    MatC Q = MatC(frequency_operator(M, C, A, -omega));
    EXPECT_LT((Q - P.conjugate()).cwiseAbs().maxCoeff(), 1e-12 * P.cwiseAbs().maxCoeff());
  }
}

TEST(AffineOperators, ReconstructionOracle) {
  auto mesh = std::make_shared<Mesh>(build_rectangle_mesh(2.0, 1.0, 2, 1));
  const double nu = 0.35, rho = 1180.0;
  FunctionSpace s = build_function_space(mesh, 2);
  AffineOperator op = build_affine_component_operators(s, nu);
  EXPECT_EQ(op.terms.size(), 2u);

  std::mt19937 rng(5);
  std::uniform_real_distribution<double> uE(0.75 * 2.755e9, 1.25 * 2.755e9);
  std::uniform_real_distribution<double> ua(0.0, 5.4e-4), ub(0.0, 1.1e-4), uw(0.0, 240.0);
  for (int k = 0; k < 20; ++k) {
    LocalParams p{uE(rng), ua(rng), ub(rng), rho, uw(rng)};
    SpMat M = assemble_mass(s, p.rho);
    SpMat A = assemble_stiffness(s, p.E, nu);
    SpMat C = assemble_damping(M, A, p.alpha_ray, p.beta_ray);
    MatC direct = MatC(frequency_operator(M, C, A, p.omega));
    MatC affine = MatC(op.evaluate(p));
    const double scale = direct.cwiseAbs().maxCoeff();
    EXPECT_LT((direct - affine).cwiseAbs().maxCoeff(), 1e-12 * scale);
  }

  // omega = 0 with no damping leaves only the stiffness family active.
  LocalParams p0{1.0, 0.0, 0.0, rho, 0.0};
  EXPECT_EQ(op.thetas[0](p0), Cplx(0.0, 0.0));
  EXPECT_EQ(op.thetas[1](p0), Cplx(1.0, 0.0));
}

TEST(TimeSignatureChecks, BasicProperties) {
  TimeSignature sig{0.017};
  EXPECT_EQ(sig.value(0.0), 0.0);
  for (double t : {1e-4, 1e-2, 0.3}) EXPECT_GE(sig.value(t), 0.0);
  // |f_t_hat(0)| = sigma^2 is the spectral peak.
  EXPECT_NEAR(std::abs(sig.transform(0.0)), sig.sigma_t * sig.sigma_t, 1e-15);
}
