#pragma once

// Global system assembly: instantiate archetype components by translation,
// connect ports, build the global FE space, the sparse Z matrix holding the
// FE representation of the PR-RBC basis, and the monolithic FE operators
// used by truth solves and the Level-2 projection.

#include <memory>
#include <string>
#include <vector>

#include "elrom/merge.hpp"
#include "elrom/offline.hpp"

namespace elrom {

struct PlacedComponent {
  int archetype_id = 0;
  double dx = 0.0, dy = 0.0;
};

struct Connection {
  int comp_a = 0;
  std::string side_a;
  int comp_b = 0;
  std::string side_b;
};

struct SystemLayout {
  std::vector<PlacedComponent> components;
  std::vector<Connection> connections;
  // Extra global Dirichlet constraints beyond the archetype-intrinsic ones:
  // (component index, archetype-local boundary tag).
  std::vector<std::pair<int, std::string>> extra_dirichlet;
  // Accept layouts that leave always-connected ports dangling. The trained
  // spaces then clamp those ports, so the assembly is only meaningful for
  // structural experiments, not accuracy studies.
  bool allow_partial_connectivity = false;
};

/// The 15-component bridge chain of Table-2 type:
/// abutment | pier | beam | loaded | beam | pier | ... | pier | abutment.
inline SystemLayout bridge_layout(const TrainedLibrary& lib) {
  const std::vector<int> arch_ids = {1, 2, 3, 4, 3, 2, 3, 4, 3, 2, 3, 4, 3, 2, 1};
  SystemLayout layout;
  double x = 0.0;
  for (int id : arch_ids) {
    layout.components.push_back({id, x, 0.0});
    x += lib.archetype(id).width;
  }
  for (int i = 0; i + 1 < static_cast<int>(arch_ids.size()); ++i)
    layout.connections.push_back({i, "right", i + 1, "left"});
  return layout;
}

/// One instantiated port: a connection bound to its reference port, with the
/// shared global DOFs in reference trace ordering.
struct SystemPort {
  int conn_index = 0;
  int rp_id = 0;
  int comp_a = 0, comp_b = 0;
  std::string side_a, side_b;
  int n_modes = 0;
  int coeff_offset = 0;          // into the port-coefficient block
  std::vector<int> global_dofs;  // reference ordering
};

/// Per-component bookkeeping of the attached ports and the coefficient
/// layout of its bubble blocks (bubble ranks may vary per port mode).
struct ComponentAttachment {
  int port_index = 0;
  std::string side;
  int coeff_offset = 0;          // first bubble coefficient of this attachment
  std::vector<int> mode_offset;  // per-mode prefix sums, size n_modes + 1

  int nb(int m) const { return mode_offset[m + 1] - mode_offset[m]; }
  int coeff_of(int m) const { return coeff_offset + mode_offset[m]; }
  int total_bubbles() const { return mode_offset.empty() ? 0 : mode_offset.back(); }
};

/// Union sparsity pattern of the scattered component operators with
/// per-component slot tables, so parameter sweeps assemble global matrices
/// by value combination without re-sorting triplets.
struct OperatorSlots {
  SpMat pattern;  // compressed; values are scratch
  // Per component: slot/value pairs of the scattered mass and stiffness terms.
  std::vector<std::array<std::vector<std::pair<int, double>>, 2>> comp_entries;
};

struct SystemModel {
  std::shared_ptr<const TrainedLibrary> lib;
  SystemLayout layout;
  MergedSpace global;
  SpMat h1;

  std::vector<SystemPort> ports;
  std::vector<std::vector<ComponentAttachment>> attachments;  // per component
  std::vector<int> inhom_offset;  // per component, -1 if none
  int n_port_coeffs = 0;
  int n_coeffs = 0;  // N_{h,D}

  SpMat Z;  // global FE representation of the PR-RBC basis (real)
  OperatorSlots op_slots;
  SpMat mass_global;  // parameter-independent

  int n_dofs() const { return global.n_dofs(); }
  int n_components() const { return static_cast<int>(layout.components.size()); }
  const ArchetypeComponent& archetype_of(int comp) const {
    return lib->archetype(layout.components[comp].archetype_id);
  }
  const ArchetypeProjection& projection_of(int comp) const {
    return lib->projections[layout.components[comp].archetype_id - 1];
  }
};

inline SystemModel instantiate_system(const SystemLayout& layout,
                                      std::shared_ptr<const TrainedLibrary> lib) {
  SystemModel sys;
  sys.lib = lib;
  sys.layout = layout;

  std::vector<ComponentPlacement> parts;
  for (const auto& pc : layout.components) {
    const ArchetypeComponent& arch = lib->archetype(pc.archetype_id);
    ComponentPlacement placement{&arch.space, pc.dx, pc.dy, arch.dirichlet_tags};
    for (const auto& [comp, tag] : layout.extra_dirichlet)
      if (comp == static_cast<int>(parts.size())) placement.dirichlet_tags.insert(tag);
    parts.push_back(std::move(placement));
  }
  sys.global = merge_spaces(parts, lib->config.degree);
  sys.h1 = assemble_h1_norm(sys.global.space);

  // Bind connections to reference ports and check conformity.
  int offset = 0;
  for (size_t c = 0; c < layout.connections.size(); ++c) {
    const Connection& conn = layout.connections[c];
    const int arch_a = layout.components[conn.comp_a].archetype_id;
    const int arch_b = layout.components[conn.comp_b].archetype_id;

    const ReferencePort* rp = nullptr;
    bool flipped = false;
    for (const auto& cand : lib->ports) {
      if (cand.arch_a == arch_a && cand.arch_b == arch_b) rp = &cand;
      else if (cand.arch_a == arch_b && cand.arch_b == arch_a) {
        rp = &cand;
        flipped = true;
      }
      if (rp) break;
    }
    if (!rp)
      throw std::invalid_argument("instantiate_system: no reference port for archetype pair " +
                                  std::to_string(arch_a) + "-" + std::to_string(arch_b));
    (void)flipped;  // port modes live on the shared trace; orientation-free

    const PortDescriptor& pa = lib->archetype(arch_a).ports.at(conn.side_a);
    const PortDescriptor& pb = lib->archetype(arch_b).ports.at(conn.side_b);
    if (pa.n_dofs() != pb.n_dofs())
      throw std::invalid_argument("instantiate_system: port DOF count mismatch");

    SystemPort sp;
    sp.conn_index = static_cast<int>(c);
    sp.rp_id = rp->id;
    sp.comp_a = conn.comp_a;
    sp.comp_b = conn.comp_b;
    sp.side_a = conn.side_a;
    sp.side_b = conn.side_b;
    sp.n_modes = lib->port_space(rp->id).size();
    sp.coeff_offset = offset;
    offset += sp.n_modes;
    sp.global_dofs.resize(pa.n_dofs());
    for (int i = 0; i < pa.n_dofs(); ++i) {
      const int ga = sys.global.dof_map[conn.comp_a][pa.dofs[i]];
      const int gb = sys.global.dof_map[conn.comp_b][pb.dofs[i]];
      if (ga != gb)
        throw std::invalid_argument("instantiate_system: geometric mismatch at connection " +
                                    std::to_string(c));
      sp.global_dofs[i] = ga;
    }
    sys.ports.push_back(std::move(sp));
  }
  sys.n_port_coeffs = offset;

  // Coefficient layout: ports, then per-component bubble blocks, then
  // inhomogeneity blocks.
  sys.attachments.assign(layout.components.size(), {});
  for (size_t p = 0; p < sys.ports.size(); ++p) {
    const SystemPort& sp = sys.ports[p];
    ComponentAttachment a{static_cast<int>(p), sp.side_a, 0, {}};
    ComponentAttachment b{static_cast<int>(p), sp.side_b, 0, {}};
    sys.attachments[sp.comp_a].push_back(std::move(a));
    sys.attachments[sp.comp_b].push_back(std::move(b));
  }
  // The trained spaces pin exactly {trained side} + always-connected ports;
  // a layout is representable only if each instance's connected set matches
  // that contract (everything, nothing, or a single port of an end piece).
  for (int comp = 0; comp < sys.n_components() && !layout.allow_partial_connectivity; ++comp) {
    std::set<std::string> connected;
    for (const auto& att : sys.attachments[comp]) connected.insert(att.side);
    const auto& always = sys.archetype_of(comp).always_connected;
    const bool ok = connected.empty() || connected == always ||
                    (always.empty() && connected.size() == 1);
    if (!ok)
      throw std::invalid_argument(
          "instantiate_system: component " + std::to_string(comp) +
          " connectivity is incompatible with the trained library");
  }

  int coeff = sys.n_port_coeffs;
  sys.inhom_offset.assign(layout.components.size(), -1);
  for (int comp = 0; comp < sys.n_components(); ++comp) {
    const ArchetypeProjection& proj = sys.projection_of(comp);
    for (auto& att : sys.attachments[comp]) {
      const auto& fam = proj.family(sys.ports[att.port_index].rp_id, att.side);
      att.coeff_offset = coeff;
      att.mode_offset.assign(1, 0);
      for (int m = 0; m < fam.n_modes; ++m)
        att.mode_offset.push_back(att.mode_offset.back() + fam.nb[m]);
      coeff += att.total_bubbles();
    }
    if (proj.n_inhom > 0) {
      sys.inhom_offset[comp] = coeff;
      coeff += proj.n_inhom;
    }
  }
  sys.n_coeffs = coeff;

  // Z assembly. Lifted port-mode columns span two components and carry the
  // shared trace once; bubble and inhomogeneity columns live inside one
  // component.
  std::vector<Triplet> trips;
  auto scatter_column = [&](int col, const Vec& local, const std::vector<int>& dof_map) {
    for (int i = 0; i < local.size(); ++i)
      if (local[i] != 0.0) trips.emplace_back(dof_map[i], col, local[i]);
  };

  for (const SystemPort& sp : sys.ports) {
    const PortSpace& ps = lib->port_space(sp.rp_id);
    const LiftingFamily& fa =
        lib->family(sp.rp_id, layout.components[sp.comp_a].archetype_id, sp.side_a);
    const LiftingFamily& fb =
        lib->family(sp.rp_id, layout.components[sp.comp_b].archetype_id, sp.side_b);
    for (int m = 0; m < sp.n_modes; ++m) {
      const int col = sp.coeff_offset + m;
      scatter_column(col, fa.liftings.col(m), sys.global.dof_map[sp.comp_a]);
      scatter_column(col, fb.liftings.col(m), sys.global.dof_map[sp.comp_b]);
      for (size_t i = 0; i < sp.global_dofs.size(); ++i)  // trace counted once
        trips.emplace_back(sp.global_dofs[i], col, -ps.modes(static_cast<int>(i), m));
    }
  }
  for (int comp = 0; comp < sys.n_components(); ++comp) {
    for (const auto& att : sys.attachments[comp]) {
      const SystemPort& sp = sys.ports[att.port_index];
      const LiftingFamily& fam =
          lib->family(sp.rp_id, layout.components[comp].archetype_id, att.side);
      for (int m = 0; m < sp.n_modes; ++m)
        for (int b = 0; b < att.nb(m); ++b)
          scatter_column(att.coeff_of(m) + b, fam.bubbles[m].modes.col(b),
                         sys.global.dof_map[comp]);
    }
    if (sys.inhom_offset[comp] >= 0) {
      const BubbleSpace& bubble = lib->inhom.at(layout.components[comp].archetype_id);
      for (int b = 0; b < bubble.size(); ++b)
        scatter_column(sys.inhom_offset[comp] + b, bubble.modes.col(b),
                       sys.global.dof_map[comp]);
    }
  }
  sys.Z.resize(sys.n_dofs(), sys.n_coeffs);
  sys.Z.setFromTriplets(trips.begin(), trips.end());
  sys.Z.prune(0.0);

  // Union operator pattern and per-component slot tables.
  {
    std::vector<Triplet> pattern_trips;
    for (int c = 0; c < sys.n_components(); ++c) {
      scatter_add(pattern_trips, sys.archetype_of(c).mass_term(), sys.global.dof_map[c]);
      scatter_add(pattern_trips, sys.archetype_of(c).stiffness_term(), sys.global.dof_map[c]);
    }
    sys.op_slots.pattern.resize(sys.n_dofs(), sys.n_dofs());
    sys.op_slots.pattern.setFromTriplets(pattern_trips.begin(), pattern_trips.end());
    sys.op_slots.pattern.makeCompressed();

    auto slot_of = [&](int row, int col) {
      const int* outer = sys.op_slots.pattern.outerIndexPtr();
      const int* inner = sys.op_slots.pattern.innerIndexPtr();
      const int* it = std::lower_bound(inner + outer[col], inner + outer[col + 1], row);
      return static_cast<int>(it - inner);
    };
    sys.op_slots.comp_entries.resize(sys.n_components());
    for (int c = 0; c < sys.n_components(); ++c) {
      const ArchetypeComponent& arch = sys.archetype_of(c);
      const std::vector<int>& map = sys.global.dof_map[c];
      for (int t = 0; t < 2; ++t) {
        const SpMat& term = arch.ops.terms[t];
        auto& entries = sys.op_slots.comp_entries[c][t];
        entries.reserve(term.nonZeros());
        for (int k = 0; k < term.outerSize(); ++k)
          for (SpMat::InnerIterator it(term, k); it; ++it)
            entries.emplace_back(slot_of(map[it.row()], map[it.col()]), it.value());
      }
    }
  }

  {
    SpMat M = sys.op_slots.pattern;
    std::fill(M.valuePtr(), M.valuePtr() + M.nonZeros(), 0.0);
    for (int c = 0; c < sys.n_components(); ++c)
      for (const auto& [slot, v] : sys.op_slots.comp_entries[c][0])
        M.valuePtr()[slot] += lib->config.rho * v;
    sys.mass_global = std::move(M);
  }
  return sys;
}

// ---------------------------------------------------------------------------
// Global parameters and monolithic FE operators.

struct ComponentParams {
  double E = 0.0;
  double alpha_ray = 0.0;
  double beta_ray = 0.0;
  LoadParams load;  // meaningful for loaded archetypes only
};

struct GlobalMu {
  std::vector<ComponentParams> components;
};

inline LocalParams local_params(const SystemModel& sys, const GlobalMu& mu, int comp,
                                double omega) {
  const ComponentParams& p = mu.components.at(comp);
  return LocalParams{p.E, p.alpha_ray, p.beta_ray, sys.lib->config.rho, omega};
}

namespace detail {

// Combine the cached slot tables with per-component coefficients.
template <class Scalar, class CoefFn>
Eigen::SparseMatrix<Scalar> combine_global(const SystemModel& sys, CoefFn&& coef) {
  Eigen::SparseMatrix<Scalar> out = sys.op_slots.pattern.cast<Scalar>();
  std::fill(out.valuePtr(), out.valuePtr() + out.nonZeros(), Scalar(0));
  for (int c = 0; c < sys.n_components(); ++c)
    for (int t = 0; t < 2; ++t) {
      const Scalar w = coef(c, t);
      if (w == Scalar(0)) continue;
      for (const auto& [slot, v] : sys.op_slots.comp_entries[c][t])
        out.valuePtr()[slot] += w * Scalar(v);
    }
  return out;
}

}  // namespace detail

inline SpMat assemble_global_mass(const SystemModel& sys) { return sys.mass_global; }

inline SpMat assemble_global_stiffness(const SystemModel& sys, const GlobalMu& mu) {
  return detail::combine_global<double>(sys, [&](int c, int t) {
    return t == 1 ? mu.components.at(c).E : 0.0;
  });
}

inline SpMat assemble_global_damping(const SystemModel& sys, const GlobalMu& mu) {
  return detail::combine_global<double>(sys, [&](int c, int t) {
    const ComponentParams& p = mu.components.at(c);
    return t == 0 ? p.alpha_ray * sys.lib->config.rho : p.beta_ray * p.E;
  });
}

inline SpMatC assemble_global_frequency(const SystemModel& sys, const GlobalMu& mu,
                                        double omega) {
  return detail::combine_global<Cplx>(sys, [&](int c, int t) {
    const LocalParams p = local_params(sys, mu, c, omega);
    return t == 0 ? detail::theta_mass(p) : detail::theta_stiff(p);
  });
}

/// Per-component separable load terms (spatial factor scattered to global
/// DOFs plus the component's time signature).
inline std::vector<LoadTerm> assemble_global_loads(const SystemModel& sys, const GlobalMu& mu) {
  std::vector<LoadTerm> loads;
  for (int c = 0; c < sys.n_components(); ++c) {
    const ArchetypeComponent& arch = sys.archetype_of(c);
    const LoadParams& lp = mu.components.at(c).load;
    if (!arch.has_inhomogeneity || !lp.active || lp.F == 0.0) continue;
    Vec local = assemble_traction_load(arch.space, lp, arch.load_tag);
    LoadTerm term;
    term.f_x = Vec::Zero(sys.n_dofs());
    scatter_add(term.f_x, local, sys.global.dof_map[c]);
    term.signature = TimeSignature{lp.sigma_t};
    loads.push_back(std::move(term));
  }
  return loads;
}

/// Frequency-domain global load with unit time signature.
inline Vec assemble_global_frequency_load(const SystemModel& sys, const GlobalMu& mu) {
  Vec f = Vec::Zero(sys.n_dofs());
  for (const auto& term : assemble_global_loads(sys, mu)) f += term.f_x;
  return f;
}

/// Global scalar node index closest to (x, y); used to place output sensors.
inline int find_global_node(const SystemModel& sys, double x, double y) {
  int best = 0;
  double best_d = std::numeric_limits<double>::max();
  for (int n = 0; n < sys.global.space.n_nodes; ++n) {
    const double d = std::hypot(sys.global.space.node_coords(n, 0) - x,
                                sys.global.space.node_coords(n, 1) - y);
    if (d < best_d) {
      best_d = d;
      best = n;
    }
  }
  return best;
}

/// Maximum number of components whose DOF ranges intersect any Z column;
/// the PR-RBC basis contract is <= 2.
inline int max_z_column_support(const SystemModel& sys) {
  std::vector<std::vector<int>> owners(sys.n_dofs());
  for (int c = 0; c < sys.n_components(); ++c)
    for (int g : sys.global.dof_map[c]) owners[g].push_back(c);
  int worst = 0;
  for (int col = 0; col < sys.Z.outerSize(); ++col) {
    std::set<int> comps;
    for (SpMat::InnerIterator it(sys.Z, col); it; ++it)
      for (int c : owners[it.row()]) comps.insert(c);
    worst = std::max(worst, static_cast<int>(comps.size()));
  }
  return worst;
}

}  // namespace elrom
