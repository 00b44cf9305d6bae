#include <gtest/gtest.h>

#include <random>

#include "elrom/twolevel.hpp"
#include "test_support.hpp"

using namespace elrom;
using elrom::testing::desk_library;
using elrom::testing::mini_bridge_system;
using elrom::testing::nominal_mu;

namespace {

SpMat identity_sp(int n) {
  SpMat I(n, n);
  I.setIdentity();
  return I;
}

// Small clamped FE component for projection / marching tests.
struct SmallFe {
  FunctionSpace space;
  SpMat M, C, A, X;
  std::vector<LoadTerm> loads;

  SmallFe() {
    auto mesh = std::make_shared<Mesh>(build_rectangle_mesh(2.0, 1.0, 4, 2));
    space = build_function_space(mesh, 2, {"left"});
    M = restrict_free(assemble_mass(space, 1000.0), space);
    A = restrict_free(assemble_stiffness(space, 1e6, 0.3), space);
    C = assemble_damping(M, A, 0.5, 1e-4);
    X = restrict_free(assemble_h1_norm(space), space);
    LoadParams lp;
    lp.F = -100.0;
    lp.active = true;
    lp.x_c = 1.0;
    lp.sigma_x = 0.3;
    lp.c_friction = 0.5;
    loads.push_back({restrict_free(assemble_traction_load(space, lp), space),
                     TimeSignature{0.05}});
  }
};

}  // namespace

TEST(Grid, PaperDefaultsAndEdgeCase) {
  FrequencyGrid g = build_frequency_grid(0.0172, 10, 4);
  EXPECT_EQ(g.n(), 41);
  EXPECT_DOUBLE_EQ(g.omegas[0], 0.0);
  EXPECT_NEAR(g.d_omega, 1.0 / (10 * 0.0172), 1e-15);
  EXPECT_NEAR(g.omega_max, 4.0 / 0.0172, 1e-10);
  EXPECT_NEAR(g.omegas[g.n() - 1], g.omega_max, 1e-10);

  FrequencyGrid g11 = build_frequency_grid(2.0, 1, 1);
  ASSERT_EQ(g11.n(), 2);
  EXPECT_DOUBLE_EQ(g11.omegas[0], 0.0);
  EXPECT_DOUBLE_EQ(g11.omegas[1], 0.5);

  EXPECT_THROW(build_frequency_grid(-1.0, 10, 4), std::invalid_argument);
  EXPECT_THROW(build_frequency_grid(1.0, 0, 4), std::invalid_argument);
}

TEST(Grid, SpectralCoverageAtReference) {
  // |f_t_hat(w_max)| / |f_t_hat(0)| = 1/(1 + (w_max sigma)^2) = 1/17 at the
  // reference width with c_over = 4.
  const double sigma = 0.0172;
  FrequencyGrid g = build_frequency_grid(sigma, 10, 4);
  EXPECT_NEAR(spectral_coverage(g, sigma), 1.0 / 17.0, 1e-12);
  EXPECT_LE(spectral_coverage(g, sigma), 0.06);
}

TEST(Greedy, EqualSnapshots) {
  const int n = 20;
  VecC v = VecC::Random(n);
  MatC snaps(n, 5);
  for (int j = 0; j < 5; ++j) snaps.col(j) = v;
  GreedyResult r = strong_greedy(snaps, identity_sp(n), 5, 1e-10, 3);
  EXPECT_EQ(r.size(), 1);
  ASSERT_GE(r.trace.size(), 1u);
  EXPECT_LE(r.trace.back(), 1e-10);
}

TEST(Greedy, OrthogonalSnapshotsExhaust) {
  const int n = 12;
  MatC snaps(n, 6);
  for (int j = 0; j < 6; ++j) snaps.col(j) = VecC::Unit(n, 2 * j) * Cplx(1.0, 0.5);
  GreedyResult r = strong_greedy(snaps, identity_sp(n), 6, 1e-14, 11);
  EXPECT_EQ(r.size(), 6);
  // Exact reproduction of every snapshot.
  for (int j = 0; j < 6; ++j) {
    VecC proj = VecC::Zero(n);
    for (int k = 0; k < 6; ++k) proj += r.basis.col(k) * r.basis.col(k).dot(snaps.col(j));
    EXPECT_LE((proj - snaps.col(j)).norm(), 1e-12 * snaps.col(j).norm());
  }
}

TEST(Greedy, ZeroSnapshotsGiveEmptyBasis) {
  MatC snaps = MatC::Zero(8, 4);
  GreedyResult r = strong_greedy(snaps, identity_sp(8), 4, 1e-8, 1);
  EXPECT_EQ(r.size(), 0);
}

TEST(Greedy, MatchesBruteForceArgmax) {
  std::mt19937 rng(77);
  std::normal_distribution<double> gauss;
  const int n = 30, m = 12;
  SpMat X;
  {
    Mat B(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) B(i, j) = gauss(rng);
    Mat S = B.transpose() * B + n * Mat::Identity(n, n);
    X = S.sparseView();
  }
  MatC snaps(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) snaps(i, j) = Cplx(gauss(rng), gauss(rng));
  // Make a couple of near-duplicates to exercise tie handling.
  snaps.col(5) = snaps.col(2);

  GreedyResult r = strong_greedy(snaps, X, m, 1e-13, 123);

  // Brute force: at each step, project every snapshot on the span of the
  // snapshots picked so far (dense normal equations) and take the argmax.
  const MatC Xc = X.cast<Cplx>();
  auto error_of = [&](const std::vector<int>& picked, int j) {
    if (picked.empty()) return std::sqrt(std::abs(snaps.col(j).dot(Xc * snaps.col(j))));
    MatC B(n, picked.size());
    for (size_t k = 0; k < picked.size(); ++k) B.col(k) = snaps.col(picked[k]);
    MatC G = B.adjoint() * Xc * B;
    VecC rhs = B.adjoint() * (Xc * snaps.col(j));
    VecC c = G.fullPivLu().solve(rhs);
    VecC res = snaps.col(j) - B * c;
    return std::sqrt(std::abs(res.dot(Xc * res)));
  };

  std::vector<int> picked = {r.picked[0]};  // seeded random first pick
  for (size_t step = 1; step < r.picked.size(); ++step) {
    int jstar = 0;
    double emax = -1.0;
    for (int j = 0; j < m; ++j) {
      const double e = error_of(picked, j);
      if (e > emax + 1e-12 * (1 + emax)) {
        emax = e;
        jstar = j;
      }
    }
    EXPECT_EQ(r.picked[step], jstar) << "greedy step " << step;
    picked.push_back(r.picked[step]);
  }

  for (size_t i = 1; i < r.trace.size(); ++i)
    EXPECT_LE(r.trace[i], r.trace[i - 1] * (1 + 1e-12));
}

TEST(ProjectRom, ScalarAndHermitian) {
  SmallFe fe;
  const int n = static_cast<int>(fe.M.rows());
  MatC basis = MatC::Random(n, 1);
  basis /= std::sqrt(std::abs(basis.col(0).dot(fe.X.cast<Cplx>() * basis.col(0))));
  SpMat Q(1, n);
  Q.insert(0, 3) = 1.0;
  ReducedModel rom = project_rom(fe.M, fe.C, fe.A, fe.loads, Q, basis, fe.X);
  EXPECT_EQ(rom.M_rb.rows(), 1);
  VecC v = basis.col(0);
  EXPECT_NEAR(std::abs(rom.M_rb(0, 0) - v.dot(fe.M.cast<Cplx>() * v)), 0.0, 1e-10);
  EXPECT_GT(rom.M_rb(0, 0).real(), 0.0);

  MatC wide = MatC::Random(n, 6);
  ReducedModel rom6 = project_rom(fe.M, fe.C, fe.A, fe.loads, Q, wide, fe.X);
  EXPECT_LE((rom6.M_rb - rom6.M_rb.adjoint()).cwiseAbs().maxCoeff(),
            1e-12 * rom6.M_rb.cwiseAbs().maxCoeff());
  EXPECT_LE((rom6.A_rb - rom6.A_rb.adjoint()).cwiseAbs().maxCoeff(),
            1e-12 * rom6.A_rb.cwiseAbs().maxCoeff());
}

TEST(ProjectRom, DenseTripleProductOracle) {
  SmallFe fe;
  const int n = static_cast<int>(fe.M.rows());
  MatC basis = MatC::Random(n, 5);
  SpMat Q(2, n);
  Q.insert(0, 0) = 1.0;
  Q.insert(1, 5) = 2.0;
  ReducedModel rom = project_rom(fe.M, fe.C, fe.A, fe.loads, Q, basis, fe.X);

  MatC Md = Mat(fe.M).cast<Cplx>();
  MatC oracle = basis.adjoint() * Md * basis;
  EXPECT_LE((rom.M_rb - oracle).cwiseAbs().maxCoeff(), 1e-12 * oracle.cwiseAbs().maxCoeff());
  MatC Qd = Mat(Q).cast<Cplx>() * basis;
  EXPECT_LE((rom.Q_rb - Qd).cwiseAbs().maxCoeff(), 1e-12 * (1 + Qd.cwiseAbs().maxCoeff()));
  VecC f_oracle = basis.adjoint() * fe.loads[0].f_x.cast<Cplx>();
  EXPECT_LE((rom.loads_rb[0].f_x - f_oracle).norm(), 1e-12 * f_oracle.norm());
}

TEST(ReducedMarch, ZeroLoadAndResidual) {
  SmallFe fe;
  const int n = static_cast<int>(fe.M.rows());
  MatC basis = MatC::Random(n, 4);
  SpMat Q(1, n);
  Q.insert(0, 1) = 1.0;
  ReducedModel rom = project_rom(fe.M, fe.C, fe.A, {}, Q, basis, fe.X);
  auto hist = reduced_newmark_march(rom, NewmarkConfig::uniform(0.3, 60));
  EXPECT_EQ(hist.u.cwiseAbs().maxCoeff(), 0.0);

  ReducedModel rom_loaded = project_rom(fe.M, fe.C, fe.A, fe.loads, Q, basis, fe.X);
  MarchOptions opts;
  opts.check_residual = true;
  auto hist2 = reduced_newmark_march(rom_loaded, NewmarkConfig::uniform(0.3, 60), opts);
  EXPECT_LE(hist2.max_step_residual, 1e-10);
  EXPECT_GT(hist2.u.cwiseAbs().maxCoeff(), 0.0);
}

TEST(ReducedMarch, IdentityBasisReproducesTruth) {
  SmallFe fe;
  const int n = static_cast<int>(fe.M.rows());
  MatC basis = MatC::Identity(n, n);
  SpMat Q(1, n);
  Q.insert(0, 0) = 1.0;
  ReducedModel rom = project_rom(fe.M, fe.C, fe.A, fe.loads, Q, basis, fe.X);

  NewmarkConfig cfg = NewmarkConfig::uniform(0.5, 100);
  auto truth = newmark_march(fe.M, fe.C, fe.A, fe.loads, cfg);
  auto reduced = reduced_newmark_march(rom, cfg);
  const double scale = truth.u.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (int j = 0; j <= cfg.n_steps; ++j)
    worst = std::max(worst,
                     ((reduced.u.col(j)).real() - truth.u.col(j)).cwiseAbs().maxCoeff());
  EXPECT_LE(worst, 1e-12 * scale);
  EXPECT_LE(reduced.u.imag().cwiseAbs().maxCoeff(), 1e-12 * scale);
}

TEST(ReducedMarch, ConjugateClosureMatchesRealRom) {
  // A conjugate-closed complex basis marched in complex arithmetic must
  // reproduce the plain real ROM on the equivalent real span; Re[.] recovery
  // then loses nothing.
  SmallFe fe;
  const int n = static_cast<int>(fe.M.rows());
  std::mt19937 rng(5);
  std::normal_distribution<double> gauss;
  const int N = 6;
  MatC B(n, N);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < N; ++j) B(i, j) = Cplx(gauss(rng), gauss(rng));
  MatC W(n, 2 * N);
  W << B, B.conjugate();
  orthonormalize_in(W, fe.X);
  Mat R(n, 2 * N);
  R << B.real(), B.imag();
  orthonormalize_in(R, fe.X);
  ASSERT_EQ(W.cols(), 2 * N);
  ASSERT_EQ(R.cols(), 2 * N);

  SpMat Q(1, n);
  Q.insert(0, 2) = 1.0;
  NewmarkConfig cfg = NewmarkConfig::uniform(0.4, 80);
  ReducedModel rom_w = project_rom(fe.M, fe.C, fe.A, fe.loads, Q, W, fe.X);
  ReducedModel rom_r =
      project_rom(fe.M, fe.C, fe.A, fe.loads, Q, R.cast<Cplx>(), fe.X);
  auto hist_w = reduced_newmark_march(rom_w, cfg);
  auto hist_r = reduced_newmark_march(rom_r, cfg);

  double worst = 0.0, scale = 0.0;
  for (int j = 0; j <= cfg.n_steps; ++j) {
    Vec uw = (W * hist_w.u.col(j)).real();
    Vec ur = (R.cast<Cplx>() * hist_r.u.col(j)).real();
    worst = std::max(worst, (uw - ur).cwiseAbs().maxCoeff());
    scale = std::max(scale, ur.cwiseAbs().maxCoeff());
  }
  EXPECT_LE(worst, 1e-10 * scale);

  // The complex solution of the closed basis is conjugate-symmetric, so its
  // reconstruction is already real.
  double imag_mass = 0.0;
  for (int j = 0; j <= cfg.n_steps; ++j)
    imag_mass = std::max(imag_mass, (W * hist_w.u.col(j)).imag().cwiseAbs().maxCoeff());
  EXPECT_LE(imag_mass, 1e-10 * scale);
}

TEST(Qoi, NodalSamplerAndZeroHistory) {
  SmallFe fe;
  const int n = static_cast<int>(fe.M.rows());
  MatC basis = MatC::Random(n, 3);
  SpMat Q(1, n);
  const int dof = 7;
  Q.insert(0, dof) = 1.0;
  ReducedModel rom = project_rom(fe.M, fe.C, fe.A, fe.loads, Q, basis, fe.X);
  auto hist = reduced_newmark_march(rom, NewmarkConfig::uniform(0.2, 40));
  Mat q = qoi_extract(rom, hist);
  ASSERT_EQ(q.rows(), 1);
  ASSERT_EQ(q.cols(), 41);
  for (int j = 0; j <= 40; ++j) {
    const double direct = (basis * hist.u.col(j)).real()[dof];
    EXPECT_NEAR(q(0, j), direct, 1e-12 * (1 + std::abs(direct)));
  }

  TimeHistoryC zero;
  zero.cfg = hist.cfg;
  zero.u = MatC::Zero(3, 41);
  EXPECT_EQ(qoi_extract(rom, zero).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Richardson, ReducedMatchesFeEvaluation) {
  SmallFe fe;
  const int n = static_cast<int>(fe.M.rows());
  MatC basis = MatC::Random(n, 5);
  SpMat Q(1, n);
  Q.insert(0, 0) = 1.0;
  ReducedModel rom = project_rom(fe.M, fe.C, fe.A, fe.loads, Q, basis, fe.X);
  auto fine = reduced_newmark_march(rom, NewmarkConfig::uniform(0.4, 80));
  auto coarse = reduced_newmark_march(rom, NewmarkConfig::uniform(0.4, 40));
  RichardsonResult rr = reduced_richardson(rom, fine, coarse);

  // Reference: reconstruct real fields and use the FE-space indicator.
  TimeHistory fine_fe, coarse_fe;
  fine_fe.cfg = fine.cfg;
  coarse_fe.cfg = coarse.cfg;
  fine_fe.u.resize(n, fine.u.cols());
  coarse_fe.u.resize(n, coarse.u.cols());
  for (int j = 0; j < fine.u.cols(); ++j) fine_fe.u.col(j) = (basis * fine.u.col(j)).real();
  for (int j = 0; j < coarse.u.cols(); ++j)
    coarse_fe.u.col(j) = (basis * coarse.u.col(j)).real();
  RichardsonResult ref = richardson_indicator(fine_fe, coarse_fe, fe.X);
  EXPECT_NEAR(rr.delta, ref.delta, 1e-10 * (1 + ref.delta));
  EXPECT_DOUBLE_EQ(rr.epsilon, rr.delta / 3.0);
}

TEST(TwoLevel, MiniBridgeEndToEnd) {
  auto lib = desk_library();
  SystemModel sys = mini_bridge_system(lib);
  GlobalMu mu = nominal_mu(sys, {3});

  SpMat Q(1, sys.n_dofs());
  const int node = find_global_node(
      sys, sys.layout.components[3].dx + 0.5 * lib->config.L, lib->config.H);
  Q.insert(0, 2 * node + 1) = 1.0;

  TwoLevelConfig cfg;
  cfg.eps_greedy = 1e-5;
  cfg.seed = 7;
  cfg.t_final = 800.0 * lib->config.t_ref();
  cfg.nt_start = 1000;
  cfg.nt_cap = 4000;

  TwoLevelResult result = run_two_level(sys, mu, lib->grid, cfg, Q);
  EXPECT_TRUE(result.converged);
  EXPECT_GE(result.greedy.size(), 5);
  EXPECT_LE(result.greedy.size(), 41);
  EXPECT_TRUE(result.n_t == 1000 || result.n_t == 2000 || result.n_t == 4000);
  for (size_t i = 1; i < result.greedy.trace.size(); ++i)
    EXPECT_LE(result.greedy.trace[i], result.greedy.trace[i - 1] * (1 + 1e-12));
  EXPECT_EQ(result.history.u.cols(), result.n_t + 1);
  EXPECT_GT(result.cost.wall_level1, 0.0);
  EXPECT_GT(result.cost.ops_level1, 0.0);
  EXPECT_GT(result.cost.ops_marching, 0.0);
  ASSERT_FALSE(result.richardson.empty());
  EXPECT_LE(result.richardson.back().epsilon, 1e-3);
  for (const auto& step : result.richardson)
    EXPECT_DOUBLE_EQ(step.epsilon, step.delta / 3.0);

  // Zero loads: empty basis, trivial outputs.
  GlobalMu mu0 = nominal_mu(sys, {});
  TwoLevelResult trivial = run_two_level(sys, mu0, lib->grid, cfg, Q);
  EXPECT_TRUE(trivial.converged);
  EXPECT_EQ(trivial.greedy.size(), 0);
}
