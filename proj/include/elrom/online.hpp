#pragma once

// PR-RBC online stage for one (mu, omega): small dense bubble-correction
// solves per component, Petrov-Galerkin Schur complement over the port-mode
// coefficients, sparse solve, and FE reconstruction through Z. No
// FE-dimension factorization occurs here.

#include <Eigen/SparseLU>

#include "elrom/system.hpp"

namespace elrom {

/// Per-component online data: bubble-correction coefficients per attached
/// (port, mode), inhomogeneity coefficients, the complex reduced Gram and the
/// local traction trace.
struct ComponentSolution {
  MatC G;  // theta_M * G_mass + theta_A * G_stiff
  std::vector<std::vector<VecC>> corrections;  // per attachment, per mode
  VecC inhom_coeffs;                           // n_inhom (empty if none)
  VecC f_top;                                  // traction at top DOFs (loaded, active)
  bool near_singular = false;
};

/// Small dense solves for the parameter-dependent bubble corrections: for
/// every attached port mode, (B^T A B) c = -(B^T A L); for the source,
/// (B^T A B) c_f = B^T f_hat. Cost is independent of the FE dimension except
/// for the 1D traction assembly on the loaded boundary.
inline std::vector<ComponentSolution> solve_component_bubbles(const SystemModel& sys,
                                                              const GlobalMu& mu, double omega) {
  std::vector<ComponentSolution> out(sys.n_components());
  for (int c = 0; c < sys.n_components(); ++c) {
    const ArchetypeProjection& proj = sys.projection_of(c);
    const LocalParams p = local_params(sys, mu, c, omega);
    const Cplx tm = detail::theta_mass(p), ta = detail::theta_stiff(p);
    ComponentSolution& cs = out[c];
    cs.G = tm * proj.G_mass.cast<Cplx>() + ta * proj.G_stiff.cast<Cplx>();

    for (const auto& att : sys.attachments[c]) {
      const SystemPort& sp = sys.ports[att.port_index];
      const auto& fam = proj.family(sp.rp_id, att.side);
      std::vector<VecC> corr(sp.n_modes);
      for (int m = 0; m < sp.n_modes; ++m) {
        const int nb = fam.n_bubbles(m);
        if (nb == 0) {
          corr[m] = VecC();
          continue;
        }
        const MatC bb = cs.G.block(fam.bubble_col0(m), fam.bubble_col0(m), nb, nb);
        const VecC bl = cs.G.block(fam.bubble_col0(m), fam.lift_col(m), nb, 1);
        Eigen::FullPivLU<MatC> lu(bb);
        if (!lu.isInvertible()) cs.near_singular = true;
        corr[m] = lu.solve(VecC(-bl));
      }
      cs.corrections.push_back(std::move(corr));
    }

    const ArchetypeComponent& arch = sys.archetype_of(c);
    const LoadParams& lp = mu.components.at(c).load;
    if (proj.n_inhom > 0 && arch.has_inhomogeneity && lp.active && lp.F != 0.0) {
      Vec f_local = assemble_traction_load(arch.space, lp, arch.load_tag);
      cs.f_top = gather_rows(f_local, proj.top_dofs).cast<Cplx>();
      const auto ff = cs.G.block(proj.inhom_col0, proj.inhom_col0, proj.n_inhom, proj.n_inhom);
      VecC rhs = proj.V_top.middleCols(proj.inhom_col0, proj.n_inhom).transpose().cast<Cplx>() *
                 cs.f_top;
      Eigen::FullPivLU<MatC> lu(ff);
      if (!lu.isInvertible()) cs.near_singular = true;
      cs.inhom_coeffs = lu.solve(rhs);
    } else if (proj.n_inhom > 0) {
      cs.inhom_coeffs = VecC::Zero(proj.n_inhom);
    }
  }
  return out;
}

struct SchurSystem {
  SpMatC S;
  VecC rhs;
  std::vector<ComponentSolution> comps;
};

/// Petrov-Galerkin Schur complement: rows are the parameter-independent
/// lifted port modes, columns the statically condensed trial functions
/// (lifting + bubble correction). The Galerkin fallback uses the corrected
/// functions on both sides. Nonzero blocks couple only ports sharing a
/// component (staircase pattern).
inline SchurSystem assemble_schur(const SystemModel& sys, const GlobalMu& mu, double omega,
                                  bool petrov_galerkin = true) {
  SchurSystem sch;
  sch.comps = solve_component_bubbles(sys, mu, omega);
  const int D = sys.n_port_coeffs;
  sch.rhs = VecC::Zero(D);
  std::vector<TripletC> trips;

  for (int c = 0; c < sys.n_components(); ++c) {
    const ArchetypeProjection& proj = sys.projection_of(c);
    const ComponentSolution& cs = sch.comps[c];
    const auto& atts = sys.attachments[c];

    for (size_t ia = 0; ia < atts.size(); ++ia) {    // test attachment
      const SystemPort& pq = sys.ports[atts[ia].port_index];
      const auto& fam_q = proj.family(pq.rp_id, atts[ia].side);
      for (size_t ib = 0; ib < atts.size(); ++ib) {  // trial attachment
        const SystemPort& pp = sys.ports[atts[ib].port_index];
        const auto& fam_p = proj.family(pp.rp_id, atts[ib].side);
        const auto& corr = cs.corrections[ib];
        for (int n = 0; n < pq.n_modes; ++n) {
          const int row = pq.coeff_offset + n;
          const int nb_q = fam_q.n_bubbles(n);
          for (int m = 0; m < pp.n_modes; ++m) {
            const int nb_p = fam_p.n_bubbles(m);
            Cplx v = cs.G(fam_q.lift_col(n), fam_p.lift_col(m));
            if (nb_p > 0)
              v += (cs.G.block(fam_q.lift_col(n), fam_p.bubble_col0(m), 1, nb_p) *
                    corr[m])(0, 0);
            if (!petrov_galerkin && nb_q > 0) {
              const VecC& cq = cs.corrections[ia][n];
              v += (cq.adjoint() *
                    cs.G.block(fam_q.bubble_col0(n), fam_p.lift_col(m), nb_q, 1))(0, 0);
              if (nb_p > 0)
                v += (cq.adjoint() *
                      cs.G.block(fam_q.bubble_col0(n), fam_p.bubble_col0(m), nb_q, nb_p) *
                      corr[m])(0, 0);
            }
            trips.emplace_back(row, pp.coeff_offset + m, v);
          }
        }
      }

      // Right-hand side: test functions against the source minus the
      // inhomogeneity particular solution.
      for (int n = 0; n < pq.n_modes; ++n) {
        const int row = pq.coeff_offset + n;
        const int nb_q = fam_q.n_bubbles(n);
        Cplx r(0.0, 0.0);
        if (cs.f_top.size() > 0)
          r += proj.V_top.col(fam_q.lift_col(n)).cast<Cplx>().dot(cs.f_top);
        if (proj.n_inhom > 0 && cs.inhom_coeffs.size() > 0)
          r -= (cs.G.block(fam_q.lift_col(n), proj.inhom_col0, 1, proj.n_inhom) *
                cs.inhom_coeffs)(0, 0);
        if (!petrov_galerkin && nb_q > 0) {
          const VecC& cq = cs.corrections[ia][n];
          if (cs.f_top.size() > 0)
            r += (cq.adjoint() *
                  proj.V_top.middleCols(fam_q.bubble_col0(n), nb_q).transpose().cast<Cplx>() *
                  cs.f_top)(0, 0);
          if (proj.n_inhom > 0 && cs.inhom_coeffs.size() > 0)
            r -= (cq.adjoint() *
                  cs.G.block(fam_q.bubble_col0(n), proj.inhom_col0, nb_q, proj.n_inhom) *
                  cs.inhom_coeffs)(0, 0);
        }
        sch.rhs[row] += r;
      }
    }
  }

  sch.S.resize(D, D);
  sch.S.setFromTriplets(trips.begin(), trips.end());
  return sch;
}

struct PRRBCSolution {
  VecC coeffs;  // port-mode coefficients ++ bubble coefficients
  double omega = 0.0;
  double schur_residual = 0.0;
  double cond_estimate = 0.0;
  bool near_resonance = false;
};

namespace detail {

/// One-norm condition estimate of the factorized Schur complement (two-sweep
/// Hager-style lower bound); used only to flag near-resonant parameters.
inline double schur_condition_estimate(const SpMatC& S, const Eigen::SparseLU<SpMatC>& lu) {
  const int n = static_cast<int>(S.rows());
  if (n == 0) return 0.0;
  double norm1 = 0.0;
  for (int j = 0; j < n; ++j) {
    double col = 0.0;
    for (SpMatC::InnerIterator it(S, j); it; ++it) col += std::abs(it.value());
    norm1 = std::max(norm1, col);
  }
  VecC x = VecC::Constant(n, Cplx(1.0 / n, 0.0));
  double inv_norm = 0.0;
  for (int sweep = 0; sweep < 2; ++sweep) {
    VecC y = lu.solve(x);
    inv_norm = std::max(inv_norm, y.template lpNorm<1>() / x.template lpNorm<1>());
    int jmax = 0;
    y.cwiseAbs().maxCoeff(&jmax);
    x = VecC::Zero(n);
    x[jmax] = 1.0;
  }
  return norm1 * inv_norm;
}

}  // namespace detail

/// Assemble and solve the Schur system for one (mu, omega); the full
/// coefficient vector recovers the bubble blocks from the port solution.
inline PRRBCSolution solve_prrbc(const SystemModel& sys, const GlobalMu& mu, double omega,
                                 bool petrov_galerkin = true) {
  SchurSystem sch = assemble_schur(sys, mu, omega, petrov_galerkin);
  PRRBCSolution sol;
  sol.omega = omega;
  sol.coeffs = VecC::Zero(sys.n_coeffs);

  VecC U;
  if (sys.n_port_coeffs > 0) {
    Eigen::SparseLU<SpMatC> lu(sch.S);
    if (lu.info() != Eigen::Success)
      throw FactorizationError("solve_prrbc: Schur factorization failed (resonance?)");
    U = lu.solve(sch.rhs);
    const double rn = sch.rhs.norm();
    sol.schur_residual = rn > 0 ? (sch.S * U - sch.rhs).norm() / rn : 0.0;
    sol.cond_estimate = detail::schur_condition_estimate(sch.S, lu);
    sol.near_resonance = sol.cond_estimate > 1e12;
    sol.coeffs.head(sys.n_port_coeffs) = U;
  }
  for (int c = 0; c < sys.n_components(); ++c) {
    const ComponentSolution& cs = sch.comps[c];
    if (cs.near_singular) sol.near_resonance = true;
    const auto& atts = sys.attachments[c];
    for (size_t ia = 0; ia < atts.size(); ++ia) {
      const SystemPort& sp = sys.ports[atts[ia].port_index];
      for (int m = 0; m < sp.n_modes; ++m)
        if (atts[ia].nb(m) > 0)
          sol.coeffs.segment(atts[ia].coeff_of(m), atts[ia].nb(m)) +=
              cs.corrections[ia][m] * sol.coeffs[sp.coeff_offset + m];
    }
    if (sys.inhom_offset[c] >= 0 && cs.inhom_coeffs.size() > 0)
      sol.coeffs.segment(sys.inhom_offset[c], cs.inhom_coeffs.size()) = cs.inhom_coeffs;
  }
  return sol;
}

/// FE representation of a PR-RBC coefficient vector: one sparse mat-vec.
inline VecC reconstruct_fe(const SystemModel& sys, const VecC& coeffs) {
  if (coeffs.size() != sys.n_coeffs)
    throw std::invalid_argument("reconstruct_fe: coefficient length mismatch");
  return sys.Z.cast<Cplx>() * coeffs;
}

}  // namespace elrom
