// Scratch diagnostic: Level-1 snapshot norm spread at the reference
// parameter for candidate desk meshes (grid-resonance collision detector).

#include <iostream>

#include "elrom/bench.hpp"
#include "elrom/elrom.hpp"

using namespace elrom;

int main() {
  struct Cand {
    int ny, nx;
    double rel;
  };
  for (const Cand cand : {Cand{4, 6, 1.5}, {4, 6, 2.0}, {4, 6, 1.25}, {4, 6, 0.75},
                          {3, 5, 2.0}, {4, 5, 1.5}, {4, 5, 2.0}, {3, 6, 2.0}}) {
    BenchmarkSpec spec;
    spec.library.ny_cells = cand.ny;
    spec.library.nx_cells_half_l = cand.nx;
    spec.library.stem_height_rel = cand.rel;
    spec.library.seed = 20240901;
    auto lib = std::make_shared<TrainedLibrary>(train_library(spec.library));
    SystemModel sys = instantiate_system(bridge_layout(*lib), lib);
    GlobalMu mu = bridge_mu_example(spec, sys);
    SnapshotSet snaps = level1_snapshots(sys, mu, lib->grid);
    const SpMatC Xc = sys.h1.cast<Cplx>();
    Vec norms(lib->grid.n());
    for (int j = 0; j < lib->grid.n(); ++j)
      norms[j] = std::sqrt(std::abs(snaps.fe.col(j).dot(Xc * snaps.fe.col(j))));
    Vec sorted = norms;
    std::sort(sorted.data(), sorted.data() + sorted.size());
    const double median = sorted[sorted.size() / 2];
    int argmax = 0;
    norms.maxCoeff(&argmax);
    std::cout << "ny=" << cand.ny << " nx=" << cand.nx << " rel=" << cand.rel << "  N_h=" << sys.n_dofs()
              << "  max/median=" << norms.maxCoeff() / median << "  argmax omega="
              << lib->grid.omegas[argmax] << "  max=" << norms.maxCoeff() << "\n";
  }
  return 0;
}
