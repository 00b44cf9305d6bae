#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "test_support.hpp"

using namespace elrom;
using elrom::testing::desk_config;
using elrom::testing::desk_library;

TEST(PortTraining, SizesSpectrumAndOrthonormality) {
  auto lib = desk_library();
  ASSERT_EQ(lib->ports.size(), 3u);
  EXPECT_EQ(lib->port_space(1).size(), 10);
  EXPECT_EQ(lib->port_space(2).size(), 12);
  EXPECT_EQ(lib->port_space(3).size(), 10);
  EXPECT_TRUE(lib->port_space(2).includes_inhomogeneity_modes);
  EXPECT_FALSE(lib->port_space(1).includes_inhomogeneity_modes);

  for (const auto& rp : lib->ports) {
    const PortSpace& ps = lib->port_space(rp.id);
    const auto& arch = lib->archetype(rp.arch_a);
    SpMat Xp = port_trace_norm(arch.ports.at("right").node_coords);
    Mat gram = ps.modes.transpose() * Xp * ps.modes;
    EXPECT_LE((gram - Mat::Identity(ps.size(), ps.size())).cwiseAbs().maxCoeff(), 1e-10);
    for (int i = 1; i < ps.spectrum.size(); ++i)
      EXPECT_LE(ps.spectrum[i], ps.spectrum[i - 1] * (1 + 1e-12));
  }
}

TEST(Bubbles, ZeroTraceAndOrthonormality) {
  auto lib = desk_library();
  for (const auto& [key, fam] : lib->liftings) {
    const ArchetypeComponent& arch = lib->archetype(std::get<1>(key));
    // Constraint ports of this family: the trained side plus every
    // always-connected port.
    std::set<std::string> constrained = arch.always_connected;
    constrained.insert(std::get<2>(key));
    for (const auto& bubble : fam.bubbles) {
      // Configured size is an upper bound; stiff families saturate their
      // numerical rank below it.
      ASSERT_LE(bubble.size(), lib->config.lifting_bubble_size);
      ASSERT_GE(bubble.size(), 1);
      double trace = 0.0;
      for (const auto& side : constrained)
        for (int d : arch.ports.at(side).dofs)
          trace = std::max(trace, bubble.modes.row(d).cwiseAbs().maxCoeff());
      EXPECT_LE(trace, 1e-12);
      Mat gram = bubble.modes.transpose() * arch.h1 * bubble.modes;
      EXPECT_LE((gram - Mat::Identity(bubble.size(), bubble.size())).cwiseAbs().maxCoeff(),
                1e-10);
      for (int i = 1; i < bubble.eigenvalues.size(); ++i)
        EXPECT_LE(bubble.eigenvalues[i], bubble.eigenvalues[i - 1] * (1 + 1e-12));
    }
  }
  const BubbleSpace& inhom = lib->inhom.at(4);
  EXPECT_EQ(inhom.size(), lib->config.inhomogeneity_bubble_size);
  const ArchetypeComponent& arch4 = lib->archetype(4);
  for (const auto& [side, port] : arch4.ports)
    for (int d : port.dofs)
      EXPECT_LE(inhom.modes.row(d).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Bubbles, InhomogeneityRequiresSource) {
  auto lib = desk_library();
  EXPECT_THROW(
      build_inhomogeneity_bubbles(lib->archetype(3), lib->grid, 4, 2, 1),
      std::invalid_argument);
}

TEST(Bubbles, LoadLinearInAmplitude) {
  // Only F varies: the response scales linearly, so exactly one significant
  // POD mode survives.
  LibraryConfig cfg = desk_config();
  auto archs = make_bridge_archetypes(cfg);
  ArchetypeComponent arch = archs[3];
  arch.box.load.sigma_t_min = arch.box.load.sigma_t_max = cfg.sigma_t_ref();
  arch.box.load.x_c_min = arch.box.load.x_c_max = 2.5;
  arch.box.load.sigma_x_min = arch.box.load.sigma_x_max = 0.03;
  arch.box.load.c_friction_min = arch.box.load.c_friction_max = 0.6;
  arch.box.E_min = arch.box.E_max = cfg.E_nominal;
  arch.box.alpha_max = 1e-4;
  arch.box.beta_max = 1e-5;
  arch.box.damping_floor_rel = 1.0 - 1e-12;  // pin damping at its max
  FrequencyGrid grid;
  grid.sigma_t_ref = cfg.sigma_t_ref();
  grid.omegas = Vec::Constant(1, 40.0);

  // Complex rank is exactly one: u(F) = F * u(F0).
  detail::ConstrainedOperator op;
  op.build(arch, detail::port_bound_mask(arch));
  LocalParams p{cfg.E_nominal, arch.box.alpha_max, arch.box.beta_max, cfg.rho, 40.0};
  Eigen::SparseLU<SpMatC> lu(op.op_kk(detail::theta_mass(p), detail::theta_stiff(p)));
  ASSERT_EQ(lu.info(), Eigen::Success);
  LoadParams base;
  base.F = arch.box.load.F_min;
  base.sigma_t = cfg.sigma_t_ref();
  base.x_c = 2.5;
  base.sigma_x = 0.03;
  base.c_friction = 0.6;
  base.active = true;
  LoadParams twice = base;
  twice.F = 2.0 * base.F;
  VecC u1 = lu.solve(VecC(gather_rows(assemble_traction_load(arch.space, base), op.split.kept)
                              .cast<Cplx>()));
  VecC u2 = lu.solve(VecC(gather_rows(assemble_traction_load(arch.space, twice), op.split.kept)
                              .cast<Cplx>()));
  EXPECT_LE((u2 - 2.0 * u1).norm(), 1e-12 * u2.norm());
  MatC snaps(u1.size(), 2);
  snaps << u1, u2;
  auto complex_pod = pod<Cplx>(snaps, op.H_kk, PodTarget::fixed(2));
  EXPECT_EQ(complex_pod.modes.cols(), 1);

  // The real-stacked production path keeps at most the real/imaginary pair
  // of that single direction, with the second one insignificant.
  BubbleSpace bubble = build_inhomogeneity_bubbles(arch, grid, 8, 6, 99);
  EXPECT_LE(bubble.size(), 2);
  if (bubble.eigenvalues.size() >= 2)
    EXPECT_LE(bubble.eigenvalues[1] / bubble.eigenvalues[0], 1e-8);
}

TEST(Bubbles, ParameterIndependentOperatorGivesOneMode) {
  LibraryConfig cfg = desk_config();
  auto archs = make_bridge_archetypes(cfg);
  ArchetypeComponent arch = archs[2];
  arch.box.E_min = arch.box.E_max = cfg.E_nominal;
  arch.box.alpha_max = 2e-4;
  arch.box.beta_max = 2e-5;
  arch.box.damping_floor_rel = 1.0 - 1e-12;
  FrequencyGrid grid;
  grid.sigma_t_ref = cfg.sigma_t_ref();
  grid.omegas = Vec::Constant(1, 60.0);  // single frequency: identical snapshots

  auto lib = desk_library();
  const ReferencePort& rp = lib->port(3);
  LiftingFamily fam =
      build_lifting_family(arch, "left", rp, lib->port_space(3), grid, 6, 4, 77);
  // Identical complex snapshots: at most the real/imaginary pair survives.
  for (const auto& bubble : fam.bubbles) EXPECT_LE(bubble.size(), 2);
}

TEST(Projections, BlockConsistencyOracle) {
  auto lib = desk_library();
  std::mt19937_64 rng(31);
  for (size_t ai = 0; ai < lib->archetypes.size(); ++ai) {
    const ArchetypeComponent& arch = lib->archetypes[ai];
    const ArchetypeProjection& proj = lib->projections[ai];
    ASSERT_EQ(proj.V.cols(), proj.n_cols);
    ASSERT_EQ(proj.G_mass.rows(), proj.n_cols);

    LocalSample s = sample_local(arch.box, rng);
    LocalParams p{s.E, s.alpha, s.beta, arch.rho, 87.3};
    SpMatC Ahat = arch.ops.evaluate(p);
    MatC direct = proj.V.cast<Cplx>().adjoint() * (Ahat * proj.V.cast<Cplx>());
    MatC blocks = detail::theta_mass(p) * proj.G_mass.cast<Cplx>() +
                  detail::theta_stiff(p) * proj.G_stiff.cast<Cplx>();
    const double scale = direct.cwiseAbs().maxCoeff();
    EXPECT_LE((direct - blocks).cwiseAbs().maxCoeff(), 1e-11 * scale);
  }

  // Two affine families per component.
  EXPECT_EQ(lib->archetype(1).ops.terms.size(), 2u);
}

TEST(Projections, FamilyCoverage) {
  auto lib = desk_library();
  // Archetype 3 joins reference ports 2 and 3 on both sides.
  const ArchetypeProjection& proj = lib->projections[2];
  EXPECT_EQ(proj.families.size(), 4u);
  EXPECT_NO_THROW(proj.family(2, "left"));
  EXPECT_NO_THROW(proj.family(3, "right"));
  EXPECT_THROW(proj.family(1, "left"), std::invalid_argument);
  // Loaded archetype exposes its top traces.
  const ArchetypeProjection& proj4 = lib->projections[3];
  EXPECT_GT(proj4.n_inhom, 0);
  EXPECT_EQ(proj4.V_top.rows(), static_cast<int>(proj4.top_dofs.size()));
}

TEST(OfflineScale, NeverExceedsBiComponentProblems) {
  auto lib = desk_library();
  EXPECT_GT(lib->meta.max_factorized_dim, 0);
  EXPECT_LE(lib->meta.max_factorized_dim, 2 * lib->meta.max_component_dofs);
  EXPECT_EQ(lib->meta.skipped_samples, 0);
}

TEST(LibraryIO, RoundTripBitExact) {
  auto lib = desk_library();
  const std::string path = std::filesystem::temp_directory_path() / "elrom_lib_test.bin";
  save_library(*lib, path);
  TrainedLibrary loaded = load_library(path);

  EXPECT_EQ(loaded.config.seed, lib->config.seed);
  EXPECT_EQ(loaded.ports.size(), lib->ports.size());
  for (size_t p = 0; p < lib->ports.size(); ++p) {
    EXPECT_EQ(loaded.port_spaces[p].size(), lib->port_spaces[p].size());
    EXPECT_TRUE(loaded.port_spaces[p].modes == lib->port_spaces[p].modes);
    EXPECT_TRUE(loaded.port_spaces[p].spectrum == lib->port_spaces[p].spectrum);
  }
  for (const auto& [key, fam] : lib->liftings) {
    const LiftingFamily& other = loaded.liftings.at(key);
    EXPECT_TRUE(other.liftings == fam.liftings);
    for (size_t m = 0; m < fam.bubbles.size(); ++m)
      EXPECT_TRUE(other.bubbles[m].modes == fam.bubbles[m].modes);
  }
  EXPECT_TRUE(loaded.inhom.at(4).modes == lib->inhom.at(4).modes);
  // Projections are rebuilt deterministically from identical inputs.
  EXPECT_TRUE(loaded.projections[0].G_mass == lib->projections[0].G_mass);
  std::filesystem::remove(path);
}

TEST(LibraryIO, TruncatedFileRejected) {
  auto lib = desk_library();
  const std::string path = std::filesystem::temp_directory_path() / "elrom_lib_trunc.bin";
  save_library(*lib, path);
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size / 2);
  EXPECT_THROW(load_library(path), CorruptFileError);

  std::ofstream bad(path, std::ios::binary);
  bad << "NOTALIB!";
  bad.close();
  EXPECT_THROW(load_library(path), CorruptFileError);
  std::filesystem::remove(path);
}
