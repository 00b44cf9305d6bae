#include <gtest/gtest.h>

#include "elrom/online.hpp"
#include "test_support.hpp"

using namespace elrom;
using elrom::testing::desk_library;
using elrom::testing::h1_relative_error;
using elrom::testing::monolithic_frequency_solve;
using elrom::testing::nominal_mu;

namespace {

using elrom::testing::mini_bridge_system;

// Abutment-pier pair: a one-port assembly for structural checks. The pier's
// right port dangles, so partial connectivity is explicitly allowed.
SystemModel abutment_pier_system() {
  auto lib = desk_library();
  SystemLayout layout;
  layout.components.push_back({1, 0.0, 0.0});
  layout.components.push_back({2, lib->archetype(1).width, 0.0});
  layout.connections.push_back({0, "right", 1, "left"});
  layout.allow_partial_connectivity = true;
  return instantiate_system(layout, lib);
}

}  // namespace

TEST(Instantiate, BridgeMappingAndSizes) {
  auto lib = desk_library();
  SystemLayout layout = bridge_layout(*lib);
  ASSERT_EQ(layout.components.size(), 15u);
  const std::vector<int> expected = {1, 2, 3, 4, 3, 2, 3, 4, 3, 2, 3, 4, 3, 2, 1};
  for (int i = 0; i < 15; ++i) EXPECT_EQ(layout.components[i].archetype_id, expected[i]);

  SystemModel sys = instantiate_system(layout, lib);
  EXPECT_EQ(sys.ports.size(), 14u);
  // 2 abutment-pier ports (10 modes), 6 pier-beam (10), 6 beam-loaded (12).
  EXPECT_EQ(sys.n_port_coeffs, 2 * 10 + 6 * 10 + 6 * 12);
  // Coefficients: port modes, then per-attachment bubble blocks, then the
  // inhomogeneity blocks of the three loaded components.
  int expected_coeffs = sys.n_port_coeffs;
  for (int c = 0; c < sys.n_components(); ++c) {
    for (const auto& att : sys.attachments[c]) expected_coeffs += att.total_bubbles();
    if (sys.inhom_offset[c] >= 0) expected_coeffs += sys.projection_of(c).n_inhom;
  }
  EXPECT_EQ(sys.n_coeffs, expected_coeffs);
  EXPECT_EQ(sys.Z.cols(), sys.n_coeffs);
  EXPECT_GT(sys.n_coeffs, sys.n_port_coeffs);
}

TEST(Instantiate, ZColumnSupportAtMostTwoComponents) {
  auto lib = desk_library();
  SystemModel sys = instantiate_system(bridge_layout(*lib), lib);
  EXPECT_LE(max_z_column_support(sys), 2);
  EXPECT_GT(sys.Z.nonZeros(), 0);
}

TEST(Instantiate, SingleLoadedComponentHasOnlyInhomColumns) {
  auto lib = desk_library();
  SystemLayout layout;
  layout.components.push_back({4, 0.0, 0.0});
  SystemModel sys = instantiate_system(layout, lib);
  EXPECT_EQ(sys.n_port_coeffs, 0);
  EXPECT_EQ(sys.n_coeffs, lib->config.inhomogeneity_bubble_size);

  GlobalMu mu = nominal_mu(sys, {0});
  PRRBCSolution sol = solve_prrbc(sys, mu, 50.0);
  EXPECT_GT(sol.coeffs.norm(), 0.0);

  // Zero source: zero solution.
  GlobalMu mu0 = nominal_mu(sys, {});
  PRRBCSolution sol0 = solve_prrbc(sys, mu0, 50.0);
  EXPECT_EQ(sol0.coeffs.norm(), 0.0);
}

TEST(Schur, StaircaseSparsityOnBridge) {
  auto lib = desk_library();
  SystemModel sys = instantiate_system(bridge_layout(*lib), lib);
  GlobalMu mu = nominal_mu(sys, {3, 7, 11});
  SchurSystem sch = assemble_schur(sys, mu, lib->grid.omegas[17]);

  Mat mask = Mat(sch.S.cwiseAbs().cast<Cplx>().real());
  for (size_t p = 0; p < sys.ports.size(); ++p)
    for (size_t q = 0; q < sys.ports.size(); ++q) {
      const auto& pp = sys.ports[p];
      const auto& pq = sys.ports[q];
      const bool share = pp.comp_a == pq.comp_a || pp.comp_a == pq.comp_b ||
                         pp.comp_b == pq.comp_a || pp.comp_b == pq.comp_b;
      const double block = mask.block(pq.coeff_offset, pp.coeff_offset, pq.n_modes, pp.n_modes)
                               .cwiseAbs()
                               .maxCoeff();
      if (!share)
        EXPECT_EQ(block, 0.0) << "ports " << p << "," << q;
      else if (p == q)
        EXPECT_GT(block, 0.0);
    }
}

TEST(Schur, OnePortSingleDenseBlock) {
  SystemModel sys = abutment_pier_system();
  ASSERT_EQ(sys.ports.size(), 1u);
  GlobalMu mu = nominal_mu(sys, {});
  SchurSystem sch = assemble_schur(sys, mu, 40.0);
  EXPECT_EQ(sch.S.rows(), sys.n_port_coeffs);
  // One port: the Schur complement is one dense block.
  EXPECT_EQ(sch.S.nonZeros(), sys.n_port_coeffs * sys.n_port_coeffs);
}

TEST(Solve, ZeroSourceGivesZero) {
  SystemModel sys = abutment_pier_system();
  GlobalMu mu = nominal_mu(sys, {});
  PRRBCSolution sol = solve_prrbc(sys, mu, 25.0);
  EXPECT_EQ(sol.coeffs.norm(), 0.0);
  EXPECT_EQ(reconstruct_fe(sys, sol.coeffs).norm(), 0.0);
}

TEST(Solve, SchurResidualSmall) {
  auto lib = desk_library();
  SystemModel sys = mini_bridge_system(lib);
  GlobalMu mu = nominal_mu(sys, {3});
  for (double omega : {0.0, 30.0, 90.0, 200.0}) {
    PRRBCSolution sol = solve_prrbc(sys, mu, omega);
    EXPECT_LE(sol.schur_residual, 1e-10);
  }
}

TEST(Solve, MiniBridgeAgainstMonolithicFE) {
  auto lib = desk_library();
  SystemModel sys = mini_bridge_system(lib);
  GlobalMu mu = nominal_mu(sys, {3});
  double worst = 0.0;
  for (int j : {0, 3, 11, 17, 29, 40}) {
    const double omega = lib->grid.omegas[j];
    PRRBCSolution sol = solve_prrbc(sys, mu, omega);
    VecC u = reconstruct_fe(sys, sol.coeffs);
    VecC ref = monolithic_frequency_solve(sys, mu, omega);
    worst = std::max(worst, h1_relative_error(sys, u, ref));
    if (j == 0) EXPECT_LE(u.imag().norm(), 1e-10 * u.real().norm());  // static snapshot is real
  }
  EXPECT_LE(worst, 1e-2);
}

TEST(Solve, PetrovGalerkinAndGalerkinAgree) {
  auto lib = desk_library();
  SystemModel sys = mini_bridge_system(lib);
  GlobalMu mu = nominal_mu(sys, {3});
  const double omega = 60.0;
  VecC u_pg = reconstruct_fe(sys, solve_prrbc(sys, mu, omega, true).coeffs);
  VecC u_g = reconstruct_fe(sys, solve_prrbc(sys, mu, omega, false).coeffs);
  EXPECT_LE(h1_relative_error(sys, u_pg, u_g), 1e-2);
}

TEST(Solve, ReconstructLinearity) {
  SystemModel sys = abutment_pier_system();
  VecC a = VecC::Random(sys.n_coeffs), b = VecC::Random(sys.n_coeffs);
  VecC lhs = reconstruct_fe(sys, VecC(a + b));
  VecC rhs = reconstruct_fe(sys, a) + reconstruct_fe(sys, b);
  EXPECT_LE((lhs - rhs).norm(), 1e-14 * rhs.norm());

  // Basis column extraction.
  VecC e = VecC::Zero(sys.n_coeffs);
  e[3] = 1.0;
  VecC col = reconstruct_fe(sys, e);
  EXPECT_LE((col - sys.Z.col(3).cast<Cplx>()).norm(), 1e-15);
  EXPECT_THROW(reconstruct_fe(sys, VecC::Zero(2)), std::invalid_argument);
}

TEST(Solve, BubbleCorrectionMatchesComponentFE) {
  // Drive one trained component with a port mode as Dirichlet data and
  // compare the lifted + bubble-corrected representation against a direct
  // component FE solve.
  auto lib = desk_library();
  const ArchetypeComponent& arch = lib->archetype(3);
  const ReferencePort& rp = lib->port(2);  // beam side of the loaded pair
  const PortSpace& ps = lib->port_space(2);
  const LiftingFamily& fam = lib->family(2, 3, "left");

  LocalParams p{1.1 * lib->config.E_nominal, 0.4 * lib->config.alpha_ray_max,
                0.4 * lib->config.beta_ray_max, lib->config.rho, lib->grid.omegas[23]};
  const Cplx tm = detail::theta_mass(p), ta = detail::theta_stiff(p);

  // Direct FE: chi on the left port, zero on the right, zero elsewhere free.
  std::vector<char> bound(arch.space.n_dofs, 0);
  for (const auto& [side, port] : arch.ports)
    for (int d : port.dofs) bound[d] = 1;
  DofSplit split = DofSplit::from_mask(arch.space.n_dofs, bound);

  const int mode = 2;
  Vec chi_ext = Vec::Zero(arch.space.n_dofs);
  const PortDescriptor& port = arch.ports.at("left");
  for (int i = 0; i < port.n_dofs(); ++i) chi_ext[port.dofs[i]] = ps.modes(i, mode);

  SpMatC Akk = tm * gather_matrix(arch.mass_term(), split.kept, split.kept).cast<Cplx>() +
               ta * gather_matrix(arch.stiffness_term(), split.kept, split.kept).cast<Cplx>();
  SpMatC Akb = tm * gather_matrix(arch.mass_term(), split.kept, split.bound).cast<Cplx>() +
               ta * gather_matrix(arch.stiffness_term(), split.kept, split.bound).cast<Cplx>();
  VecC gb = gather_rows(chi_ext, split.bound).cast<Cplx>();
  Eigen::SparseLU<SpMatC> lu(Akk);
  ASSERT_EQ(lu.info(), Eigen::Success);
  VecC u_fe = VecC::Zero(arch.space.n_dofs);
  VecC uk = lu.solve(VecC(-(Akb * gb)));
  for (size_t i = 0; i < split.kept.size(); ++i) u_fe[split.kept[i]] = uk[i];
  u_fe += chi_ext.cast<Cplx>();

  // PR-RBC representation: lifting plus the small dense bubble correction.
  const ArchetypeProjection& proj = lib->projections[2];
  const auto& layout = proj.family(2, "left");
  MatC G = tm * proj.G_mass.cast<Cplx>() + ta * proj.G_stiff.cast<Cplx>();
  const int nb = layout.n_bubbles(mode);
  const auto bb = G.block(layout.bubble_col0(mode), layout.bubble_col0(mode), nb, nb);
  const auto bl = G.block(layout.bubble_col0(mode), layout.lift_col(mode), nb, 1);
  VecC c = Eigen::FullPivLU<MatC>(bb).solve(MatC(-bl));
  VecC u_rbc = fam.liftings.col(mode).cast<Cplx>() +
               fam.bubbles[mode].modes.cast<Cplx>() * c;

  const SpMatC X = arch.h1.cast<Cplx>();
  const VecC d = u_rbc - u_fe;
  const double err = std::sqrt(std::abs(d.dot(X * d))) /
                     std::sqrt(std::abs(u_fe.dot(X * u_fe)));
  EXPECT_LE(err, 1e-2);
}

TEST(Solve, OnlineTouchesNoFeFactorization) {
  // The largest factorized object online is the Schur complement.
  SystemModel sys = abutment_pier_system();
  EXPECT_LT(sys.n_port_coeffs, sys.global.space.n_free());
}

TEST(Instantiate, GeometricMismatchRejected) {
  auto lib = desk_library();
  SystemLayout layout;
  layout.components.push_back({1, 0.0, 0.0});
  layout.components.push_back({2, lib->archetype(1).width + 0.5, 0.0});  // gap
  layout.connections.push_back({0, "right", 1, "left"});
  EXPECT_THROW(instantiate_system(layout, lib), std::invalid_argument);
}

TEST(Instantiate, ConnectivityContractEnforced) {
  // A beam pair leaves always-connected ports dangling; the trained spaces
  // cannot represent that assembly.
  auto lib = desk_library();
  SystemLayout layout;
  layout.components.push_back({3, 0.0, 0.0});
  layout.components.push_back({4, lib->archetype(3).width, 0.0});
  layout.connections.push_back({0, "right", 1, "left"});
  EXPECT_THROW(instantiate_system(layout, lib), std::invalid_argument);
}
