// Command-line driver: offline training, monolithic FE solves, PR-RBC
// frequency solves, the full two-level pipeline and the bridge benchmark.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "elrom/elrom.hpp"

namespace {

using namespace elrom;

GlobalMu load_mu(const std::string& path, const BenchmarkSpec& spec, const SystemModel& sys) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mu file " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.contains("example") && j.at("example").get<bool>()) return bridge_mu_example(spec, sys);
  if (j.contains("random_seed")) {
    std::mt19937_64 rng(j.at("random_seed").get<std::uint64_t>());
    return sample_bridge_mu(spec, sys, rng);
  }
  GlobalMu mu;
  mu.components.resize(sys.n_components());
  const auto& comps = j.at("components");
  if (static_cast<int>(comps.size()) != sys.n_components())
    throw std::invalid_argument("mu file: expected " + std::to_string(sys.n_components()) +
                                " component entries");
  for (int c = 0; c < sys.n_components(); ++c) {
    const auto& e = comps[c];
    ComponentParams& p = mu.components[c];
    p.E = e.at("E").get<double>();
    p.alpha_ray = e.at("alpha_ray").get<double>();
    p.beta_ray = e.at("beta_ray").get<double>();
    if (e.contains("load")) {
      const auto& l = e.at("load");
      p.load.active = l.value("active", true);
      p.load.F = l.at("F").get<double>();
      p.load.sigma_t = l.at("sigma_t").get<double>();
      p.load.x_c = l.at("x_c").get<double>();
      p.load.sigma_x = l.at("sigma_x").get<double>();
      p.load.c_friction = l.at("c_friction").get<double>();
    }
  }
  return mu;
}

SystemLayout load_layout(const std::string& path, const TrainedLibrary& lib) {
  if (path.empty()) return bridge_layout(lib);
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open layout file " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  SystemLayout layout;
  for (const auto& c : j.at("components"))
    layout.components.push_back(
        {c.at("archetype").get<int>(), c.value("dx", 0.0), c.value("dy", 0.0)});
  for (const auto& conn : j.at("connections"))
    layout.connections.push_back({conn.at(0).get<int>(), conn.at(1).get<std::string>(),
                                  conn.at(2).get<int>(), conn.at(3).get<std::string>()});
  layout.allow_partial_connectivity = j.value("allow_partial_connectivity", false);
  return layout;
}

TrainedLibrary obtain_library(const std::string& lib_file, const BenchmarkSpec& spec) {
  if (!lib_file.empty() && std::filesystem::exists(lib_file)) return load_library(lib_file);
  TrainedLibrary lib = train_library(spec.library);
  if (!lib_file.empty()) save_library(lib, lib_file);
  return lib;
}

void write_solution_csv(const std::string& path, const SystemModel& sys, const VecC& u) {
  CsvWriter csv(path, {"node", "x", "y", "re_ux", "im_ux", "re_uy", "im_uy"});
  for (int n = 0; n < sys.global.space.n_nodes; ++n)
    csv.row({static_cast<double>(n), sys.global.space.node_coords(n, 0),
             sys.global.space.node_coords(n, 1), u[2 * n].real(), u[2 * n].imag(),
             u[2 * n + 1].real(), u[2 * n + 1].imag()});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Component-based model order reduction for 2D time-domain elastodynamics"};
  app.require_subcommand(1);

  std::string spec_file, lib_file, mu_file, layout_file, out_path = "out";
  double omega = 0.0;
  int port_size = 0, bubble_size = 0, inhom_size = 0;
  std::uint64_t seed_override = 0;
  double eps_greedy = 0.0, eps_dt = 0.0;
  std::string mode_str = "both";
  bool galerkin = false, march = false, export_matrices = false;
  int nt = 0;
  std::string snapshot_times;

  auto* train = app.add_subcommand("offline-train", "Train the PR-RBC component library");
  train->add_option("--library", spec_file, "benchmark/library spec (JSON, empty = defaults)");
  train->add_option("--out", out_path, "output library file")->required();
  train->add_option("--port-size", port_size, "override every reference-port space size");
  train->add_option("--bubble-size", bubble_size, "override the lifting bubble size");
  train->add_option("--inhom-size", inhom_size, "override the inhomogeneity bubble size");
  train->add_option("--seed", seed_override, "override the training seed");

  auto* fe = app.add_subcommand("solve-fe", "Monolithic FE solve (frequency or time domain)");
  fe->add_option("--spec", spec_file, "benchmark spec (JSON)");
  fe->add_option("--library", lib_file, "trained library file (trains if absent)");
  fe->add_option("--layout", layout_file, "system layout (JSON, default bridge)");
  fe->add_option("--mu", mu_file, "global parameter file")->required();
  fe->add_option("--omega", omega, "angular frequency [rad/s]");
  fe->add_flag("--march", march, "time-domain Newmark march instead of a frequency solve");
  fe->add_option("--nt", nt, "number of time steps for --march");
  fe->add_flag("--export-matrices", export_matrices, "write M/C/A/H1 in Matrix Market format");
  fe->add_option("--out", out_path, "output prefix");

  auto* prrbc = app.add_subcommand("solve-prrbc", "PR-RBC frequency-domain solve");
  prrbc->add_option("--spec", spec_file, "benchmark spec (JSON)");
  prrbc->add_option("--library", lib_file, "trained library file (trains if absent)");
  prrbc->add_option("--system", layout_file, "system layout (JSON, default bridge)");
  prrbc->add_option("--mu", mu_file, "global parameter file")->required();
  prrbc->add_option("--omega", omega, "angular frequency [rad/s]")->required();
  prrbc->add_flag("--galerkin", galerkin, "Galerkin projection instead of Petrov-Galerkin");
  prrbc->add_flag("--export-matrices", export_matrices, "write Schur and Z in Matrix Market format");
  prrbc->add_option("--out", out_path, "output prefix");

  auto* two = app.add_subcommand("solve-two-level", "Two-level reduction and time marching");
  two->add_option("--spec", spec_file, "benchmark spec (JSON)");
  two->add_option("--library", lib_file, "trained library file (trains if absent)");
  two->add_option("--system", layout_file, "system layout (JSON, default bridge)");
  two->add_option("--mu", mu_file, "global parameter file")->required();
  two->add_option("--eps", eps_greedy, "Strong Greedy tolerance");
  two->add_option("--eps-dt", eps_dt, "Richardson indicator threshold");
  two->add_option("--seed", seed_override, "greedy first-pick seed");
  two->add_option("--snapshot-times", snapshot_times,
                  "comma-separated times for full-field CSV snapshots");
  two->add_option("--out", out_path, "output directory");

  auto* bench = app.add_subcommand("bench", "Bridge benchmark over the sampled parameters");
  bench->add_option("--spec", spec_file, "benchmark spec (JSON)");
  bench->add_option("--library", lib_file, "trained library file (trains and caches if absent)");
  bench->add_option("--mode", mode_str, "two-level | truth | both")->capture_default_str();
  bench->add_option("--out", out_path, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    BenchmarkSpec spec =
        spec_file.empty() ? BenchmarkSpec{} : parse_bench_spec(spec_file);

    if (train->parsed()) {
      if (port_size > 0) spec.library.port_space_sizes = {port_size, port_size, port_size};
      if (bubble_size > 0) spec.library.lifting_bubble_size = bubble_size;
      if (inhom_size > 0) spec.library.inhomogeneity_bubble_size = inhom_size;
      if (seed_override != 0) spec.library.seed = seed_override;
      TrainedLibrary lib = train_library(spec.library);
      save_library(lib, out_path);
      std::cout << "trained library in " << lib.meta.wall_seconds << " s";
      if (lib.meta.skipped_samples > 0)
        std::cout << " (skipped " << lib.meta.skipped_samples << " singular samples)";
      std::cout << "\nport space sizes:";
      for (const auto& ps : lib.port_spaces) std::cout << " " << ps.size();
      std::cout << "\nwrote " << out_path << "\n";
      return 0;
    }

    auto lib = std::make_shared<TrainedLibrary>(obtain_library(lib_file, spec));
    SystemModel sys = instantiate_system(load_layout(layout_file, *lib), lib);

    if (bench->parsed()) {
      const BenchMode mode = bench_mode_from_string(mode_str);
      std::vector<RunReport> reports = run_bridge_benchmark(spec, sys, mode);
      bool any_failure = false;
      for (const auto& report : reports) {
        emit_plot_data(report, out_path, spec.t_final());
        any_failure |= !report.converged;
        std::cout << report.label << ": N = " << report.n_basis << ", N_t = " << report.n_t;
        if (report.has_truth && report.speedup > 0)
          std::cout << ", max rel err = " << report.max_relerr_avg_norm
                    << ", speedup = " << report.speedup;
        std::cout << (report.converged ? "" : "  [convergence failure]") << "\n";
      }
      return any_failure ? 3 : 0;
    }

    GlobalMu mu = load_mu(mu_file, spec, sys);

    if (fe->parsed()) {
      const FunctionSpace& space = sys.global.space;
      if (export_matrices) {
        write_matrix_market(out_path + "_mass.mtx", assemble_global_mass(sys));
        write_matrix_market(out_path + "_damping.mtx", assemble_global_damping(sys, mu));
        write_matrix_market(out_path + "_stiffness.mtx", assemble_global_stiffness(sys, mu));
        write_matrix_market(out_path + "_h1.mtx", sys.h1);
      }
      if (!march) {
        SpMatC A_free = restrict_free(assemble_global_frequency(sys, mu, omega), space);
        VecC f_free = restrict_free(assemble_global_frequency_load(sys, mu), space).cast<Cplx>();
        double residual = 0.0;
        VecC u = expand_free(solve_frequency_fe(A_free, f_free, &residual), space);
        write_solution_csv(out_path + "_solution.csv", sys, u);
        std::cout << "frequency solve at omega = " << omega << ", residual " << residual << "\n";
      } else {
        const int steps = nt > 0 ? nt : spec.truth_nt;
        std::vector<LoadTerm> loads;
        for (auto& term : assemble_global_loads(sys, mu))
          loads.push_back({restrict_free(term.f_x, space), term.signature});
        MarchOptions opts;
        opts.store_derivatives = false;
        TimeHistory hist = newmark_march(
            restrict_free(assemble_global_mass(sys), space),
            restrict_free(assemble_global_damping(sys, mu), space),
            restrict_free(assemble_global_stiffness(sys, mu), space), loads,
            NewmarkConfig::uniform(spec.t_final(), steps), opts);
        SpMat Q = bridge_qoi_matrix(sys);
        std::vector<int> qrows(Q.rows());
        for (size_t i = 0; i < qrows.size(); ++i) qrows[i] = static_cast<int>(i);
        SpMat Q_free = gather_matrix(Q, qrows, space.free_dofs);
        std::vector<std::string> header = {"t"};
        for (int q = 0; q < Q.rows(); ++q) header.push_back("q" + std::to_string(q + 1));
        CsvWriter csv(out_path + "_qoi.csv", header);
        for (int j = 0; j <= steps; ++j) {
          Vec qv = Q_free * hist.u.col(j);
          std::vector<double> row = {hist.time_at(j)};
          for (int q = 0; q < qv.size(); ++q) row.push_back(qv[q]);
          csv.row(row);
        }
        std::cout << "marched " << steps << " steps to t = " << spec.t_final() << "\n";
      }
      return 0;
    }

    if (prrbc->parsed()) {
      PRRBCSolution sol = solve_prrbc(sys, mu, omega, !galerkin);
      VecC u = reconstruct_fe(sys, sol.coeffs);
      write_solution_csv(out_path + "_solution.csv", sys, u);
      if (export_matrices) {
        SchurSystem sch = assemble_schur(sys, mu, omega, !galerkin);
        write_matrix_market(out_path + "_schur.mtx", sch.S);
        write_matrix_market(out_path + "_z.mtx", sys.Z);
      }
      std::cout << "schur residual " << sol.schur_residual << ", condition estimate "
                << sol.cond_estimate << (sol.near_resonance ? " (near resonance)" : "") << "\n";
      return sol.near_resonance ? 2 : 0;
    }

    if (two->parsed()) {
      TwoLevelConfig cfg;
      cfg.eps_greedy = eps_greedy > 0 ? eps_greedy : spec.two_level.eps_greedy;
      cfg.eps_dt = eps_dt > 0 ? eps_dt : spec.two_level.eps_dt;
      cfg.seed = seed_override != 0 ? seed_override : spec.two_level.seed;
      cfg.m_cap = spec.two_level.m_cap;
      cfg.t_final = spec.t_final();
      cfg.nt_start = spec.two_level.nt_start;
      cfg.nt_cap = spec.two_level.nt_cap;
      cfg.n_threads = spec.two_level.n_threads;
      const SpMat Q = bridge_qoi_matrix(sys);
      TwoLevelResult result = run_two_level(sys, mu, lib->grid, cfg, Q);

      RunReport report;
      report.label = "run";
      report.n_basis = result.greedy.size();
      report.n_t = result.n_t;
      report.converged = result.converged;
      report.near_resonance = result.near_resonance;
      report.greedy_trace = result.greedy.trace;
      report.greedy_picks = result.greedy.picked;
      report.richardson = result.richardson;
      report.cost = result.cost;
      if (result.greedy.size() > 0) report.qoi = qoi_extract(result.rom, result.history);
      emit_plot_data(report, out_path, cfg.t_final);

      if (!snapshot_times.empty() && result.greedy.size() > 0) {
        std::stringstream ss(snapshot_times);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
          const double t = std::stod(tok);
          const int j = std::clamp(static_cast<int>(std::llround(t / (cfg.t_final / result.n_t))),
                                   0, result.n_t);
          VecC field = result.rom.basis * result.history.u.col(j);
          write_solution_csv(out_path + "/field_t" + tok + ".csv", sys, field);
        }
      }
      std::cout << "N = " << report.n_basis << ", N_t = " << report.n_t
                << (report.converged ? "" : " (Richardson cap exceeded)") << "\n";
      return report.converged ? 0 : 3;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
