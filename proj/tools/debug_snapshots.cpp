// Scratch diagnostic: PR-RBC snapshot error vs monolithic FE at every grid
// frequency for the reference parameter.

#include <iostream>

#include "elrom/bench.hpp"
#include "elrom/elrom.hpp"

using namespace elrom;

int main() {
  BenchmarkSpec spec;
  spec.library.seed = 20240901;
  auto lib = std::make_shared<TrainedLibrary>(train_library(spec.library));
  SystemModel sys = instantiate_system(bridge_layout(*lib), lib);
  GlobalMu mu = bridge_mu_example(spec, sys);
  const SpMatC Xc = sys.h1.cast<Cplx>();

  SnapshotSet snaps = level1_snapshots(sys, mu, lib->grid);
  for (int j = 0; j < lib->grid.n(); ++j) {
    SpMatC A_free = restrict_free(assemble_global_frequency(sys, mu, lib->grid.omegas[j]),
                                  sys.global.space);
    VecC f_free =
        restrict_free(assemble_global_frequency_load(sys, mu), sys.global.space).cast<Cplx>();
    VecC ref = expand_free(solve_frequency_fe(A_free, f_free), sys.global.space);
    const VecC d = snaps.fe.col(j) - ref;
    const double err = std::sqrt(std::abs(d.dot(Xc * d)));
    const double nrm = std::sqrt(std::abs(ref.dot(Xc * ref)));
    std::cout << "omega " << lib->grid.omegas[j] << "  |u| " << nrm << "  relerr "
              << err / nrm << "\n";
  }
  return 0;
}
