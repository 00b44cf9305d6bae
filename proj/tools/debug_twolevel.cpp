// Scratch diagnostic: decompose the reference-parameter time-domain error
// into basis-representation error vs marching/projection error.

#include <iostream>

#include "elrom/bench.hpp"
#include "elrom/elrom.hpp"
#include "elrom/io.hpp"

using namespace elrom;

int main(int argc, char** argv) {
  BenchmarkSpec spec;
  spec.library.resolution = 1;
  spec.library.seed = 20240901;
  spec.two_level.seed = 424242;
  if (argc > 1) spec.library.c_under = std::atoi(argv[1]);
  if (argc > 2) spec.library.c_over = std::atoi(argv[2]);
  if (argc > 3) spec.two_level.eps_greedy = std::atof(argv[3]);
  if (argc > 4) spec.two_level.seed = std::strtoull(argv[4], nullptr, 10);

  auto lib = std::make_shared<TrainedLibrary>(train_library(spec.library));
  SystemModel sys = instantiate_system(bridge_layout(*lib), lib);
  SpMat Q = bridge_qoi_matrix(sys);
  GlobalMu mu = bridge_mu_example(spec, sys);

  TwoLevelConfig cfg;
  cfg.eps_greedy = spec.two_level.eps_greedy;
  cfg.seed = spec.two_level.seed;
  cfg.t_final = spec.t_final();
  TwoLevelResult two = run_two_level(sys, mu, lib->grid, cfg, Q);
  std::cout << "n_omega " << lib->grid.n() << "  N = " << two.greedy.size()
            << "  N_t = " << two.n_t << "\n";

  const FunctionSpace& space = sys.global.space;
  SpMat M = restrict_free(assemble_global_mass(sys), space);
  SpMat A = restrict_free(assemble_global_stiffness(sys, mu), space);
  SpMat C = restrict_free(assemble_global_damping(sys, mu), space);
  std::vector<LoadTerm> loads;
  for (auto& t : assemble_global_loads(sys, mu))
    loads.push_back({restrict_free(t.f_x, space), t.signature});
  MarchOptions opts;
  opts.store_derivatives = false;
  TimeHistory truth =
      newmark_march(M, C, A, loads, NewmarkConfig::uniform(cfg.t_final, two.n_t), opts);

  const SpMat X = restrict_free(sys.h1, space);
  const MatC B = restrict_free(two.rom.basis, space);  // X-orthonormal columns
  const SpMatC Xc = X.cast<Cplx>();
  MatC XB = Xc * B;

  Vec norms(two.n_t + 1);
  for (int j = 0; j <= two.n_t; ++j) {
    Vec u = truth.u.col(j);
    norms[j] = std::sqrt(std::max(u.dot(X * u), 0.0));
  }
  const double avg_norm = norms.tail(two.n_t).mean();

  double max_err = 0.0, max_best = 0.0;
  int argmax_j = 0;
  for (int j = 0; j <= two.n_t; j += 5) {
    VecC u_truth = truth.u.col(j).cast<Cplx>();
    VecC coeff = XB.adjoint() * u_truth;
    VecC proj = B * coeff;
    const VecC lack = u_truth - proj;
    const double best = std::sqrt(std::abs(lack.dot(Xc * lack)));
    const Vec rom_u = (B * two.history.u.col(j)).real();
    const Vec diff = rom_u - truth.u.col(j);
    const double err = std::sqrt(std::max(diff.dot(X * diff), 0.0));
    if (err / avg_norm > max_err) argmax_j = j;
    max_err = std::max(max_err, err / avg_norm);
    max_best = std::max(max_best, best / avg_norm);
  }
  std::cout << "max relerr " << max_err << " at node " << argmax_j << " (t/T = "
            << double(argmax_j) / two.n_t << ")\n";
  std::cout << "max basis representation error " << max_best << "\n";

  // Error profile in coarse time bins.
  for (int bin = 0; bin < 8; ++bin) {
    double e = 0;
    for (int j = bin * two.n_t / 8; j < (bin + 1) * two.n_t / 8; j += 5) {
      const Vec rom_u = (B * two.history.u.col(j)).real();
      const Vec diff = rom_u - truth.u.col(j);
      e = std::max(e, std::sqrt(std::max(diff.dot(X * diff), 0.0)) / avg_norm);
    }
    std::cout << "  bin " << bin << " relerr " << e << "\n";
  }

  // Sensor traces for spectral analysis of the discrepancy.
  {
    std::vector<int> qrows = {0, 1, 2};
    SpMat Qf = gather_matrix(Q, qrows, space.free_dofs);
    CsvWriter csv("/tmp/qoi_traces.csv", {"t", "truth1", "rom1", "truth2", "rom2"});
    for (int j = 0; j <= two.n_t; ++j) {
      Vec qt = Qf * truth.u.col(j);
      Vec qr = Qf * (B * two.history.u.col(j)).real();
      csv.row({truth.time_at(j), qt[0], qr[0], qt[1], qr[1]});
    }
  }
  return 0;
}
