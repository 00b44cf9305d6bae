// Scratch diagnostic: PR-RBC error vs best-approximation error in the
// PR-RBC space, per grid frequency, on a small chain.

#include <Eigen/SparseCholesky>
#include <iostream>

#include "../tests/test_support.hpp"
#include "elrom/online.hpp"

using namespace elrom;
using namespace elrom::testing;

int main() {
  auto lib = desk_library();
  SystemModel sys = mini_bridge_system(lib);
  GlobalMu mu = nominal_mu(sys, {3});

  // Best approximation in span(Z) in the H1 inner product.
  SpMat ZtXZ_s;
  {
    Mat Zd = Mat(sys.Z);
    Mat G = Zd.transpose() * sys.h1 * Zd;
    ZtXZ_s = G.sparseView();
  }
  Eigen::SimplicialLDLT<SpMat> gram(ZtXZ_s);
  std::cout << "gram info " << gram.info() << " n_coeffs " << sys.n_coeffs << " ndofs "
            << sys.n_dofs() << "\n";

  for (int j : {1, 3, 7, 17, 29, 40}) {
    const double omega = lib->grid.omegas[j];
    PRRBCSolution sol = solve_prrbc(sys, mu, omega);
    VecC u = reconstruct_fe(sys, sol.coeffs);
    VecC ref = monolithic_frequency_solve(sys, mu, omega);
    const double err = h1_relative_error(sys, u, ref);

    // Projection of ref onto span(Z).
    VecC rhs = sys.Z.cast<Cplx>().transpose() * (sys.h1.cast<Cplx>() * ref);
    VecC c = gram.solve(rhs.real()).cast<Cplx>() +
             Cplx(0, 1) * gram.solve(rhs.imag()).cast<Cplx>();
    VecC proj = sys.Z.cast<Cplx>() * c;
    const double best = h1_relative_error(sys, proj, ref);

    // Residual orthogonality probe: test functions are the port columns of Z.
    SpMatC Ahat = assemble_global_frequency(sys, mu, omega);
    Vec fhat = assemble_global_frequency_load(sys, mu);
    VecC resid = Ahat * u - fhat.cast<Cplx>();
    VecC probe = sys.Z.leftCols(sys.n_port_coeffs).cast<Cplx>().transpose() * resid;
    const double fn = (sys.Z.leftCols(sys.n_port_coeffs).cast<Cplx>().transpose() *
                       fhat.cast<Cplx>())
                          .norm();

    // Full Galerkin over the entire PR-RBC coefficient space.
    MatC ZAZ = sys.Z.cast<Cplx>().transpose() * (Ahat * sys.Z.cast<Cplx>());
    VecC Zf = sys.Z.cast<Cplx>().transpose() * fhat.cast<Cplx>();
    VecC cg = Eigen::FullPivLU<MatC>(ZAZ).solve(Zf);
    const double err_gal = h1_relative_error(sys, VecC(sys.Z.cast<Cplx>() * cg), ref);

    std::cout << "omega " << omega << "  err " << err << "  best " << best << "  galerkin "
              << err_gal << "  probe " << probe.norm() / std::max(fn, 1.0) << "\n";
  }
  return 0;
}
