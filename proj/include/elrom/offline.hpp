#pragma once

// PR-RBC offline stage: reference-port training (randomized snapshot POD of
// port traces from bi-component solves), lifting bubble spaces per
// (reference port, member archetype, side, port mode), inhomogeneity bubble
// spaces for loaded archetypes, and all parameter-independent projections
// needed by the online Schur assembly.

#include <chrono>
#include <map>
#include <tuple>

#include "elrom/archetype.hpp"
#include "elrom/grid.hpp"
#include "elrom/merge.hpp"
#include "elrom/parallel.hpp"
#include "elrom/pod.hpp"
#include "elrom/truth.hpp"

namespace elrom {

/// Reduced port space: real X_port-orthonormal modes over the reference port
/// trace DOFs, with the retained POD spectrum.
struct PortSpace {
  Mat modes;  // n_port_dofs x M'
  Vec spectrum;
  bool includes_inhomogeneity_modes = false;

  int size() const { return static_cast<int>(modes.cols()); }
};

/// Reduced bubble space: real modes over component DOFs with zero trace on
/// every component port, orthonormal in the component H1 inner product.
struct BubbleSpace {
  enum class Kind { lifting, inhomogeneity };
  Kind kind = Kind::lifting;
  int archetype_id = 0;
  Mat modes;  // full component DOFs x size
  Vec eigenvalues;

  int size() const { return static_cast<int>(modes.cols()); }
};

/// Per (reference port, archetype, side): the parameter-independent reference
/// liftings of every port mode (discrete-harmonic extension at the nominal
/// operator) and one bubble space per mode.
struct LiftingFamily {
  int rp_id = 0;
  int archetype_id = 0;
  std::string side;
  Mat liftings;  // component DOFs x M', includes the port trace
  std::vector<BubbleSpace> bubbles;  // one per port mode
};

using FamilyKey = std::tuple<int, int, std::string>;  // (rp id, arch id, side)

/// Dense projection tables for one archetype covering the combined column set
/// V = [per family, per mode: lifting | bubbles] ++ [inhomogeneity bubbles].
struct ArchetypeProjection {
  struct FamilyLayout {
    int rp_id = 0;
    std::string side;
    int n_modes = 0;
    std::vector<int> lift_cols;    // per mode
    std::vector<int> bubble_cols;  // per mode, first bubble column
    std::vector<int> nb;           // per mode (bubble ranks may differ)
    int lift_col(int m) const { return lift_cols[m]; }
    int bubble_col0(int m) const { return bubble_cols[m]; }
    int n_bubbles(int m) const { return nb[m]; }
  };

  std::vector<FamilyLayout> families;
  int inhom_col0 = -1, n_inhom = 0;
  int n_cols = 0;
  Mat V;          // component DOFs x n_cols
  Mat G_mass;     // V^T M1 V
  Mat G_stiff;    // V^T A1 V
  std::vector<int> top_dofs;  // loaded archetypes only
  Mat V_top;                  // V restricted to top_dofs

  const FamilyLayout& family(int rp_id, const std::string& side) const {
    for (const auto& f : families)
      if (f.rp_id == rp_id && f.side == side) return f;
    throw std::invalid_argument("ArchetypeProjection: no trained family for requested port side");
  }
};

struct TrainingMeta {
  double wall_seconds = 0.0;
  int skipped_samples = 0;
  int max_factorized_dim = 0;
  int max_component_dofs = 0;
  int max_bicomponent_dofs = 0;
};

struct TrainedLibrary {
  LibraryConfig config;
  FrequencyGrid grid;
  std::vector<ArchetypeComponent> archetypes;  // index id-1
  std::vector<ReferencePort> ports;            // index id-1
  std::vector<PortSpace> port_spaces;          // parallel to ports
  std::map<FamilyKey, LiftingFamily> liftings;
  std::map<int, BubbleSpace> inhom;  // by archetype id
  std::vector<ArchetypeProjection> projections;  // parallel to archetypes
  TrainingMeta meta;

  const ArchetypeComponent& archetype(int id) const { return archetypes.at(id - 1); }
  const ReferencePort& port(int id) const { return ports.at(id - 1); }
  const PortSpace& port_space(int id) const { return port_spaces.at(id - 1); }
  const LiftingFamily& family(int rp, int arch, const std::string& side) const {
    auto it = liftings.find({rp, arch, side});
    if (it == liftings.end())
      throw std::invalid_argument("TrainedLibrary: missing lifting family");
    return it->second;
  }
};

// ---------------------------------------------------------------------------
// Port trace inner product: 1D P1 chain (H1 seminorm + L2) along the port,
// applied per displacement component. A tridiagonal surrogate for the H^{1/2}
// trace norm; swappable.

inline SpMat port_trace_norm(const Eigen::Matrix<double, Eigen::Dynamic, 2>& node_coords) {
  const int n = static_cast<int>(node_coords.rows());
  std::vector<Triplet> trips;
  for (int i = 0; i + 1 < n; ++i) {
    const double h = (node_coords.row(i + 1) - node_coords.row(i)).norm();
    const double k = 1.0 / h, m = h / 6.0;
    const double loc[2][2] = {{k + 2 * m, -k + m}, {-k + m, k + 2 * m}};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c)
          trips.emplace_back(2 * (i + a) + c, 2 * (i + b) + c, loc[a][b]);
  }
  SpMat X(2 * n, 2 * n);
  X.setFromTriplets(trips.begin(), trips.end());
  return X;
}

namespace detail {

struct ConstrainedOperator {
  DofSplit split;
  SpMat M_kk, M_kb, A_kk, A_kb, H_kk;

  void build(const ArchetypeComponent& arch, const std::vector<char>& bound_mask) {
    split = DofSplit::from_mask(arch.space.n_dofs, bound_mask);
    M_kk = gather_matrix(arch.mass_term(), split.kept, split.kept);
    M_kb = gather_matrix(arch.mass_term(), split.kept, split.bound);
    A_kk = gather_matrix(arch.stiffness_term(), split.kept, split.kept);
    A_kb = gather_matrix(arch.stiffness_term(), split.kept, split.bound);
    H_kk = gather_matrix(arch.h1, split.kept, split.kept);
  }

  SpMatC op_kk(const Cplx& tm, const Cplx& ta) const {
    return SpMatC(tm * M_kk.cast<Cplx>() + ta * A_kk.cast<Cplx>());
  }
  SpMatC op_kb(const Cplx& tm, const Cplx& ta) const {
    return SpMatC(tm * M_kb.cast<Cplx>() + ta * A_kb.cast<Cplx>());
  }
};

inline std::vector<char> port_bound_mask(const ArchetypeComponent& arch) {
  std::vector<char> mask(arch.space.is_dirichlet.begin(), arch.space.is_dirichlet.end());
  for (const auto& [side, port] : arch.ports)
    for (int d : port.dofs) mask[d] = 1;
  return mask;
}

// Constraints of one lifting family: Dirichlet, the trained side, and every
// port that is connected in all feasible assemblies. Other local ports are
// free boundaries there and must not be pinned.
inline std::vector<char> family_bound_mask(const ArchetypeComponent& arch,
                                           const std::string& side) {
  std::vector<char> mask(arch.space.is_dirichlet.begin(), arch.space.is_dirichlet.end());
  for (int d : arch.ports.at(side).dofs) mask[d] = 1;
  for (const auto& other : arch.always_connected)
    for (int d : arch.ports.at(other).dofs) mask[d] = 1;
  return mask;
}

inline std::vector<char> inhom_bound_mask(const ArchetypeComponent& arch) {
  std::vector<char> mask(arch.space.is_dirichlet.begin(), arch.space.is_dirichlet.end());
  for (const auto& side : arch.always_connected)
    for (int d : arch.ports.at(side).dofs) mask[d] = 1;
  return mask;
}

inline Cplx theta_mass(const LocalParams& p) {
  return p.rho * Cplx(-p.omega * p.omega, p.alpha_ray * p.omega);
}
inline Cplx theta_stiff(const LocalParams& p) {
  return p.E * Cplx(1.0, p.beta_ray * p.omega);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Reference-port training.

/// Component-pairwise port training: random Dirichlet data on the outer
/// boundary of the bi-component system (plus, for loaded pairs, solutions
/// with the actual source and zero outer data), traces restricted to the
/// shared port, POD in the port trace inner product. Snapshot traces are
/// augmented with their mirror images so one reference port serves both
/// connection orientations.
inline PortSpace train_port_space(const ArchetypeComponent& left, const ArchetypeComponent& right,
                                  const ReferencePort& rp, const FrequencyGrid& grid,
                                  int n_samples, int target_size, std::uint64_t seed,
                                  TrainingMeta* meta = nullptr) {
  if (target_size > rp.n_port_dofs)
    throw std::invalid_argument("train_port_space: target size exceeds port trace dimension");

  std::vector<ComponentPlacement> parts(2);
  parts[0] = {&left.space, 0.0, 0.0, left.dirichlet_tags};
  parts[1] = {&right.space, left.width, 0.0, right.dirichlet_tags};
  MergedSpace bi = merge_spaces(parts, left.space.degree);
  if (meta) meta->max_bicomponent_dofs = std::max(meta->max_bicomponent_dofs, bi.n_dofs());

  // Shared port DOFs in reference ordering (= left component's right side).
  const PortDescriptor& port = left.ports.at("right");
  std::vector<int> port_dofs(port.dofs.size());
  for (size_t i = 0; i < port.dofs.size(); ++i) port_dofs[i] = bi.dof_map[0][port.dofs[i]];

  // Random data is imposed on the pair's outer ports: the interfaces through
  // which the rest of a feasible assembly drives this bi-component system.
  // Free boundaries keep their natural conditions, matching the in-situ
  // setting; end-piece sides that are never connected stay free as well.
  std::vector<char> outer(bi.n_dofs(), 0);
  auto mark_outer_ports = [&](const ArchetypeComponent& arch, int inst,
                              const std::string& shared_side) {
    for (const auto& [side, pd] : arch.ports) {
      if (side == shared_side || !arch.always_connected.count(side)) continue;
      for (int d : pd.dofs) outer[bi.dof_map[inst][d]] = 1;
    }
  };
  mark_outer_ports(left, 0, "right");
  mark_outer_ports(right, 1, "left");

  std::vector<char> bound = outer;
  for (int d : port_dofs) bound[d] = 0;  // the shared port stays free
  for (int d : bi.space.dirichlet_dofs) bound[d] = 1;
  std::vector<char> sample_mask(bi.n_dofs(), 0);
  for (int d = 0; d < bi.n_dofs(); ++d) sample_mask[d] = bound[d] && !bi.space.is_dirichlet[d];

  DofSplit split = DofSplit::from_mask(bi.n_dofs(), bound);
  // Port DOFs are kept unknowns except where the port closure touches a
  // Dirichlet boundary (e.g. the clamped abutment bottom); those trace
  // entries are identically zero.
  std::vector<int> port_kept(port_dofs.size());
  {
    std::vector<int> kept_index(bi.n_dofs(), -1);
    for (size_t i = 0; i < split.kept.size(); ++i) kept_index[split.kept[i]] = static_cast<int>(i);
    for (size_t i = 0; i < port_dofs.size(); ++i) {
      port_kept[i] = kept_index[port_dofs[i]];
      if (port_kept[i] < 0 && !bi.space.is_dirichlet[port_dofs[i]])
        throw std::invalid_argument("train_port_space: port DOF unexpectedly constrained");
    }
  }

  // Parameter-independent scattered terms per instance.
  const int nk = static_cast<int>(split.kept.size());
  if (meta) meta->max_factorized_dim = std::max(meta->max_factorized_dim, nk);
  std::array<const ArchetypeComponent*, 2> archs = {&left, &right};
  std::array<SpMat, 2> M_kk, M_kb, A_kk, A_kb;
  for (int p = 0; p < 2; ++p) {
    std::vector<Triplet> tm, ta;
    scatter_add(tm, archs[p]->mass_term(), bi.dof_map[p]);
    scatter_add(ta, archs[p]->stiffness_term(), bi.dof_map[p]);
    SpMat Mg(bi.n_dofs(), bi.n_dofs()), Ag(bi.n_dofs(), bi.n_dofs());
    Mg.setFromTriplets(tm.begin(), tm.end());
    Ag.setFromTriplets(ta.begin(), ta.end());
    M_kk[p] = gather_matrix(Mg, split.kept, split.kept);
    M_kb[p] = gather_matrix(Mg, split.kept, split.bound);
    A_kk[p] = gather_matrix(Ag, split.kept, split.kept);
    A_kb[p] = gather_matrix(Ag, split.kept, split.bound);
  }

  const bool loaded_pair = left.has_inhomogeneity || right.has_inhomogeneity;
  const int n_inhom = loaded_pair ? n_samples : 0;

  // Pre-draw the whole sample plan for determinism.
  std::mt19937_64 rng(seed);
  struct Plan {
    LocalSample a, b;
    double omega;
    Vec g;            // random outer data (empty for source samples)
    LoadParams load;  // source samples only
    bool source = false;
  };
  std::vector<Plan> plans(n_samples + n_inhom);
  std::uniform_int_distribution<int> pick_omega(0, grid.n() - 1);
  std::normal_distribution<double> gauss;
  const int n_sample_dofs = static_cast<int>(split.bound.size());
  for (int s = 0; s < n_samples + n_inhom; ++s) {
    Plan& pl = plans[s];
    pl.a = sample_local(left.box, rng);
    pl.b = sample_local(right.box, rng);
    pl.omega = grid.omegas[pick_omega(rng)];
    pl.source = s >= n_samples;
    if (!pl.source) {
      pl.g = Vec::Zero(n_sample_dofs);
      for (int i = 0; i < n_sample_dofs; ++i)
        if (sample_mask[split.bound[i]]) pl.g[i] = gauss(rng);
    } else {
      const ArchetypeComponent& src = left.has_inhomogeneity ? left : right;
      pl.load = sample_load(src.box.load, rng);
    }
  }

  MatC traces(rp.n_port_dofs, plans.size());
  std::vector<char> ok(plans.size(), 0);
  parallel_for(static_cast<int>(plans.size()), [&](int s) {
    const Plan& pl = plans[s];
    LocalParams pa{pl.a.E, pl.a.alpha, pl.a.beta, left.rho, pl.omega};
    LocalParams pb{pl.b.E, pl.b.alpha, pl.b.beta, right.rho, pl.omega};
    SpMatC K = detail::theta_mass(pa) * M_kk[0].cast<Cplx>() +
               detail::theta_stiff(pa) * A_kk[0].cast<Cplx>() +
               detail::theta_mass(pb) * M_kk[1].cast<Cplx>() +
               detail::theta_stiff(pb) * A_kk[1].cast<Cplx>();
    VecC rhs;
    if (!pl.source) {
      SpMatC Kb = detail::theta_mass(pa) * M_kb[0].cast<Cplx>() +
                  detail::theta_stiff(pa) * A_kb[0].cast<Cplx>() +
                  detail::theta_mass(pb) * M_kb[1].cast<Cplx>() +
                  detail::theta_stiff(pb) * A_kb[1].cast<Cplx>();
      rhs = -(Kb * pl.g.cast<Cplx>());
    } else {
      const int src_idx = left.has_inhomogeneity ? 0 : 1;
      const ArchetypeComponent& src = left.has_inhomogeneity ? left : right;
      Vec f_local = assemble_traction_load(src.space, pl.load, src.load_tag);
      Vec f_global = Vec::Zero(bi.n_dofs());
      scatter_add(f_global, f_local, bi.dof_map[src_idx]);
      rhs = gather_rows(f_global, split.kept).cast<Cplx>();
    }
    Eigen::SparseLU<SpMatC> lu(K);
    if (lu.info() != Eigen::Success) return;  // skip singular sample
    VecC u = lu.solve(rhs);
    for (size_t i = 0; i < port_kept.size(); ++i)
      traces(static_cast<int>(i), s) = port_kept[i] >= 0 ? u[port_kept[i]] : Cplx(0, 0);
    ok[s] = 1;
  });

  int n_ok = 0;
  for (char c : ok) n_ok += c;
  if (meta) meta->skipped_samples += static_cast<int>(plans.size()) - n_ok;
  if (n_ok == 0) throw TrainingError("train_port_space: all bi-component samples singular");

  // Keep successful traces and close the set under the mirror symmetry
  // (x-displacement sign flip across the port line).
  MatC snaps(rp.n_port_dofs, 2 * n_ok);
  int c = 0;
  for (size_t s = 0; s < plans.size(); ++s) {
    if (!ok[s]) continue;
    snaps.col(c) = traces.col(static_cast<int>(s));
    VecC mirrored = traces.col(static_cast<int>(s));
    for (int i = 0; i < rp.n_port_dofs; i += 2) mirrored[i] = -mirrored[i];
    snaps.col(n_ok + c) = mirrored;
    ++c;
  }

  SpMat Xp = port_trace_norm(port.node_coords);
  PodResult pod_result = pod_real_stacked(snaps, Xp, PodTarget::fixed(target_size));
  PortSpace ps;
  ps.modes = pod_result.modes;
  ps.spectrum = pod_result.eigenvalues;
  ps.includes_inhomogeneity_modes = loaded_pair;
  if (ps.size() < target_size)
    throw TrainingError("train_port_space: snapshot set rank-deficient for requested size");
  return ps;
}

// ---------------------------------------------------------------------------
// Bubble training.

/// Lifting family for one (reference port, archetype, side): the nominal
/// discrete-harmonic lifting of each port mode plus POD bubble spaces of the
/// parametric lifting remainders (zero trace on all ports by construction).
inline LiftingFamily build_lifting_family(const ArchetypeComponent& arch, const std::string& side,
                                          const ReferencePort& rp, const PortSpace& ps,
                                          const FrequencyGrid& grid, int n_samples,
                                          int bubble_size, std::uint64_t seed,
                                          TrainingMeta* meta = nullptr) {
  const PortDescriptor& port = arch.ports.at(side);
  if (ps.modes.rows() != port.n_dofs())
    throw std::invalid_argument("build_lifting_family: port space / port DOF mismatch");

  detail::ConstrainedOperator op;
  op.build(arch, detail::family_bound_mask(arch, side));
  const int nk = static_cast<int>(op.split.kept.size());
  if (meta) {
    meta->max_factorized_dim = std::max(meta->max_factorized_dim, nk);
    meta->max_component_dofs = std::max(meta->max_component_dofs, arch.space.n_dofs);
  }

  // Bound-side data per mode: chi on this port's DOFs, zero elsewhere.
  const int M = ps.size();
  Mat G_b = Mat::Zero(static_cast<int>(op.split.bound.size()), M);
  {
    std::vector<int> bound_index(arch.space.n_dofs, -1);
    for (size_t i = 0; i < op.split.bound.size(); ++i)
      bound_index[op.split.bound[i]] = static_cast<int>(i);
    for (int m = 0; m < M; ++m)
      for (int i = 0; i < port.n_dofs(); ++i) {
        const int bi = bound_index[port.dofs[i]];
        if (bi < 0)
          throw std::invalid_argument("build_lifting_family: port DOF not constrained");
        G_b(bi, m) = ps.modes(i, m);
      }
  }

  LiftingFamily fam;
  fam.rp_id = rp.id;
  fam.archetype_id = arch.id;
  fam.side = side;

  // Reference liftings at the nominal parameter (unit E, omega = 0): the
  // extension is independent of the modulus scale.
  Eigen::SimplicialLDLT<SpMat> nominal(op.A_kk);
  if (nominal.info() != Eigen::Success)
    throw FactorizationError("build_lifting_family: nominal stiffness factorization failed");
  Mat L_k = nominal.solve(Mat(-op.A_kb * G_b));

  fam.liftings = Mat::Zero(arch.space.n_dofs, M);
  for (int m = 0; m < M; ++m) {
    for (size_t i = 0; i < op.split.kept.size(); ++i)
      fam.liftings(op.split.kept[i], m) = L_k(static_cast<int>(i), m);
    for (size_t i = 0; i < op.split.bound.size(); ++i)
      fam.liftings(op.split.bound[i], m) = G_b(static_cast<int>(i), m);
  }

  // Parametric lifting snapshots; one factorization per sample serves all
  // modes.
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_omega(0, grid.n() - 1);
  struct Plan {
    LocalSample s;
    double omega;
  };
  std::vector<Plan> plans(n_samples);
  for (auto& pl : plans) pl = {sample_local(arch.box, rng), grid.omegas[pick_omega(rng)]};

  std::vector<MatC> sample_remainders(n_samples);
  std::vector<char> ok(n_samples, 0);
  parallel_for(n_samples, [&](int s) {
    LocalParams p{plans[s].s.E, plans[s].s.alpha, plans[s].s.beta, arch.rho, plans[s].omega};
    const Cplx tm = detail::theta_mass(p), ta = detail::theta_stiff(p);
    Eigen::SparseLU<SpMatC> lu(op.op_kk(tm, ta));
    if (lu.info() != Eigen::Success) return;
    MatC U = lu.solve(MatC(-(op.op_kb(tm, ta) * G_b.cast<Cplx>())));
    sample_remainders[s] = U - L_k.cast<Cplx>();
    ok[s] = 1;
  });

  int n_ok = 0;
  for (char cc : ok) n_ok += cc;
  if (meta) meta->skipped_samples += n_samples - n_ok;
  if (n_ok == 0) throw TrainingError("build_lifting_family: all component samples singular");

  for (int m = 0; m < M; ++m) {
    MatC snaps(nk, n_ok);
    int c = 0;
    for (int s = 0; s < n_samples; ++s)
      if (ok[s]) snaps.col(c++) = sample_remainders[s].col(m);
    PodResult pr = pod_real_stacked(snaps, op.H_kk, PodTarget::fixed(bubble_size));
    BubbleSpace bubble;
    bubble.kind = BubbleSpace::Kind::lifting;
    bubble.archetype_id = arch.id;
    bubble.eigenvalues = pr.eigenvalues;
    bubble.modes = Mat::Zero(arch.space.n_dofs, pr.modes.cols());
    for (int j = 0; j < pr.modes.cols(); ++j)
      for (size_t i = 0; i < op.split.kept.size(); ++i)
        bubble.modes(op.split.kept[i], j) = pr.modes(static_cast<int>(i), j);
    fam.bubbles.push_back(std::move(bubble));
  }
  return fam;
}

/// Inhomogeneity bubble space for a loaded archetype: POD of component
/// responses to sampled tractions with zero port data.
inline BubbleSpace build_inhomogeneity_bubbles(const ArchetypeComponent& arch,
                                               const FrequencyGrid& grid, int n_samples,
                                               int target_size, std::uint64_t seed,
                                               TrainingMeta* meta = nullptr) {
  if (!arch.has_inhomogeneity)
    throw std::invalid_argument("build_inhomogeneity_bubbles: archetype has no source term");

  detail::ConstrainedOperator op;
  op.build(arch, detail::inhom_bound_mask(arch));
  const int nk = static_cast<int>(op.split.kept.size());
  if (meta) meta->max_factorized_dim = std::max(meta->max_factorized_dim, nk);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_omega(0, grid.n() - 1);
  struct Plan {
    LocalSample s;
    double omega;
    LoadParams load;
  };
  std::vector<Plan> plans(n_samples);
  for (auto& pl : plans)
    pl = {sample_local(arch.box, rng), grid.omegas[pick_omega(rng)], sample_load(arch.box.load, rng)};

  MatC snaps = MatC::Zero(nk, n_samples);
  std::vector<char> ok(n_samples, 0);
  parallel_for(n_samples, [&](int s) {
    LocalParams p{plans[s].s.E, plans[s].s.alpha, plans[s].s.beta, arch.rho, plans[s].omega};
    Eigen::SparseLU<SpMatC> lu(op.op_kk(detail::theta_mass(p), detail::theta_stiff(p)));
    if (lu.info() != Eigen::Success) return;
    Vec f = assemble_traction_load(arch.space, plans[s].load, arch.load_tag);
    snaps.col(s) = lu.solve(VecC(gather_rows(f, op.split.kept).cast<Cplx>()));
    ok[s] = 1;
  });

  int n_ok = 0;
  for (char c : ok) n_ok += c;
  if (meta) meta->skipped_samples += n_samples - n_ok;
  if (n_ok == 0) throw TrainingError("build_inhomogeneity_bubbles: all samples singular");

  MatC kept_snaps(nk, n_ok);
  int c = 0;
  for (int s = 0; s < n_samples; ++s)
    if (ok[s]) kept_snaps.col(c++) = snaps.col(s);

  PodResult pr = pod_real_stacked(kept_snaps, op.H_kk, PodTarget::fixed(target_size));
  BubbleSpace bubble;
  bubble.kind = BubbleSpace::Kind::inhomogeneity;
  bubble.archetype_id = arch.id;
  bubble.eigenvalues = pr.eigenvalues;
  bubble.modes = Mat::Zero(arch.space.n_dofs, pr.modes.cols());
  for (int j = 0; j < pr.modes.cols(); ++j)
    for (size_t i = 0; i < op.split.kept.size(); ++i)
      bubble.modes(op.split.kept[i], j) = pr.modes(static_cast<int>(i), j);
  return bubble;
}

// ---------------------------------------------------------------------------
// Projection tables.

inline void precompute_projections(TrainedLibrary& lib) {
  lib.projections.assign(lib.archetypes.size(), {});
  for (size_t ai = 0; ai < lib.archetypes.size(); ++ai) {
    const ArchetypeComponent& arch = lib.archetypes[ai];
    ArchetypeProjection& proj = lib.projections[ai];

    int col = 0;
    for (const auto& [key, fam] : lib.liftings) {
      if (std::get<1>(key) != arch.id) continue;
      ArchetypeProjection::FamilyLayout layout;
      layout.rp_id = std::get<0>(key);
      layout.side = std::get<2>(key);
      layout.n_modes = static_cast<int>(fam.liftings.cols());
      for (int m = 0; m < layout.n_modes; ++m) {
        layout.lift_cols.push_back(col++);
        layout.bubble_cols.push_back(col);
        layout.nb.push_back(fam.bubbles[m].size());
        col += fam.bubbles[m].size();
      }
      proj.families.push_back(std::move(layout));
    }
    auto inhom_it = lib.inhom.find(arch.id);
    if (inhom_it != lib.inhom.end()) {
      proj.inhom_col0 = col;
      proj.n_inhom = inhom_it->second.size();
      col += proj.n_inhom;
    }
    proj.n_cols = col;

    proj.V = Mat::Zero(arch.space.n_dofs, col);
    for (const auto& layout : proj.families) {
      const LiftingFamily& fam = lib.family(layout.rp_id, arch.id, layout.side);
      for (int m = 0; m < layout.n_modes; ++m) {
        proj.V.col(layout.lift_col(m)) = fam.liftings.col(m);
        if (layout.nb[m] > 0)
          proj.V.middleCols(layout.bubble_col0(m), layout.nb[m]) = fam.bubbles[m].modes;
      }
    }
    if (proj.n_inhom > 0)
      proj.V.middleCols(proj.inhom_col0, proj.n_inhom) = inhom_it->second.modes;

    proj.G_mass = proj.V.transpose() * (arch.mass_term() * proj.V);
    proj.G_stiff = proj.V.transpose() * (arch.stiffness_term() * proj.V);

    if (arch.has_inhomogeneity) {
      proj.top_dofs = extract_port_dofs(arch.space, arch.load_tag).dofs;
      proj.V_top = gather_rows(proj.V, proj.top_dofs);
    }
  }
}

// ---------------------------------------------------------------------------
// Library orchestration.

inline TrainedLibrary train_library(const LibraryConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  TrainedLibrary lib;
  lib.config = cfg;
  lib.archetypes = make_bridge_archetypes(cfg);
  lib.ports = make_bridge_reference_ports(lib.archetypes, cfg);
  lib.grid = build_frequency_grid(cfg.sigma_t_ref(), cfg.c_under, cfg.c_over);

  for (const auto& arch : lib.archetypes)
    lib.meta.max_component_dofs = std::max(lib.meta.max_component_dofs, arch.space.n_dofs);

  lib.port_spaces.resize(lib.ports.size());
  for (size_t p = 0; p < lib.ports.size(); ++p) {
    const ReferencePort& rp = lib.ports[p];
    lib.port_spaces[p] = train_port_space(
        lib.archetype(rp.arch_a), lib.archetype(rp.arch_b), rp, lib.grid,
        cfg.port_oversampling * rp.target_size, rp.target_size, cfg.seed + 101 * rp.id,
        &lib.meta);
  }

  const int n_bubble_samples = cfg.bubble_oversampling * cfg.lifting_bubble_size;
  for (size_t p = 0; p < lib.ports.size(); ++p) {
    const ReferencePort& rp = lib.ports[p];
    for (int arch_id : {rp.arch_a, rp.arch_b})
      for (const std::string side : {"left", "right"}) {
        const ArchetypeComponent& arch = lib.archetype(arch_id);
        lib.liftings[{rp.id, arch_id, side}] = build_lifting_family(
            arch, side, rp, lib.port_spaces[p], lib.grid, n_bubble_samples,
            cfg.lifting_bubble_size,
            cfg.seed + 1000 * rp.id + 10 * arch_id + (side == "left" ? 1 : 2), &lib.meta);
      }
  }

  for (const auto& arch : lib.archetypes)
    if (arch.has_inhomogeneity)
      lib.inhom[arch.id] = build_inhomogeneity_bubbles(
          arch, lib.grid, cfg.bubble_oversampling * cfg.inhomogeneity_bubble_size,
          cfg.inhomogeneity_bubble_size, cfg.seed + 7 * arch.id, &lib.meta);

  precompute_projections(lib);
  lib.meta.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return lib;
}

}  // namespace elrom
