#pragma once

// The bridge benchmark: configuration parsing with the acrylic-bridge
// defaults, the reference global parameter and the random parameter sampler,
// end-to-end two-level vs monolithic-FE runs, and plot-data emission.

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "elrom/io.hpp"
#include "elrom/library_io.hpp"
#include "elrom/system.hpp"
#include "elrom/twolevel.hpp"

namespace elrom {

struct TwoLevelSettings {
  double eps_greedy = 1e-5;
  int m_cap = 0;  // 0: n_omega
  double eps_dt = 1e-3;
  int nt_start = 1000;
  int nt_cap = 4000;
  std::uint64_t seed = 1;
  int n_threads = 0;
};

struct SamplerSettings {
  int n_random_mu = 10;
  std::uint64_t seed = 7;
};

struct BenchmarkSpec {
  LibraryConfig library;
  TwoLevelSettings two_level;
  SamplerSettings sampling;
  double t_final_in_T_ref = 800.0;
  int truth_nt = 2000;  // marching steps for mode=truth runs

  double t_final() const { return t_final_in_T_ref * library.t_ref(); }

  void validate() const {
    library.validate();
    if (two_level.eps_greedy <= 0 || two_level.eps_dt <= 0)
      throw std::invalid_argument("BenchmarkSpec: tolerances must be positive");
    if (two_level.nt_start < 2 || two_level.nt_cap < two_level.nt_start)
      throw std::invalid_argument("BenchmarkSpec: invalid time-step bounds");
    if (t_final_in_T_ref <= 0)
      throw std::invalid_argument("BenchmarkSpec: t_final must be positive");
    if (sampling.n_random_mu < 0)
      throw std::invalid_argument("BenchmarkSpec: n_random_mu must be >= 0");
  }
};

inline void to_json(nlohmann::json& j, const TwoLevelSettings& s) {
  j = nlohmann::json{{"eps_greedy", s.eps_greedy}, {"m_cap", s.m_cap},
                     {"eps_dt", s.eps_dt},         {"nt_start", s.nt_start},
                     {"nt_cap", s.nt_cap},         {"seed", s.seed},
                     {"n_threads", s.n_threads}};
}
inline void to_json(nlohmann::json& j, const SamplerSettings& s) {
  j = nlohmann::json{{"n_random_mu", s.n_random_mu}, {"seed", s.seed}};
}
inline void to_json(nlohmann::json& j, const BenchmarkSpec& s) {
  j = nlohmann::json{{"library", s.library},
                     {"two_level", s.two_level},
                     {"sampling", s.sampling},
                     {"time", {{"t_final_in_T_ref", s.t_final_in_T_ref}, {"truth_nt", s.truth_nt}}}};
}

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& input, const nlohmann::json& reference,
                                const std::string& path) {
  if (!input.is_object()) return;
  for (const auto& [key, value] : input.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    if (!reference.contains(key))
      throw std::invalid_argument("parse_bench_spec: unknown key '" + here + "'");
    if (value.is_object()) reject_unknown_keys(value, reference.at(key), here);
  }
}

template <class T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

}  // namespace detail

/// Parse a benchmark spec; absent keys keep their benchmark defaults, unknown
/// keys are rejected with their field path, and the invariants are validated.
inline BenchmarkSpec parse_bench_spec_json(const nlohmann::json& j) {
  BenchmarkSpec spec;
  nlohmann::json reference;
  to_json(reference, spec);
  detail::reject_unknown_keys(j, reference, "");

  if (j.contains("library")) {
    nlohmann::json merged;
    to_json(merged, spec.library);
    merged.update(j.at("library"));
    spec.library = merged.get<LibraryConfig>();
  }
  if (j.contains("two_level")) {
    const auto& t = j.at("two_level");
    detail::maybe(t, "eps_greedy", spec.two_level.eps_greedy);
    detail::maybe(t, "m_cap", spec.two_level.m_cap);
    detail::maybe(t, "eps_dt", spec.two_level.eps_dt);
    detail::maybe(t, "nt_start", spec.two_level.nt_start);
    detail::maybe(t, "nt_cap", spec.two_level.nt_cap);
    detail::maybe(t, "seed", spec.two_level.seed);
    detail::maybe(t, "n_threads", spec.two_level.n_threads);
  }
  if (j.contains("sampling")) {
    detail::maybe(j.at("sampling"), "n_random_mu", spec.sampling.n_random_mu);
    detail::maybe(j.at("sampling"), "seed", spec.sampling.seed);
  }
  if (j.contains("time")) {
    detail::maybe(j.at("time"), "t_final_in_T_ref", spec.t_final_in_T_ref);
    detail::maybe(j.at("time"), "truth_nt", spec.truth_nt);
  }
  spec.validate();
  return spec;
}

inline BenchmarkSpec parse_bench_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("parse_bench_spec: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  nlohmann::json j = nlohmann::json::object();
  if (!text.empty() && text.find_first_not_of(" \t\r\n") != std::string::npos)
    j = nlohmann::json::parse(text);
  return parse_bench_spec_json(j);
}

inline std::string emit_bench_spec(const BenchmarkSpec& spec) {
  nlohmann::json j;
  to_json(j, spec);
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Global parameters for the bridge.

/// Reference parameter: nominal modulus everywhere, Rayleigh damping at half
/// its maximum, and three loads centered on the loaded beams with the
/// benchmark's per-load width/amplitude/time-scale/friction table.
inline GlobalMu bridge_mu_example(const BenchmarkSpec& spec, const SystemModel& sys) {
  const LibraryConfig& lib = spec.library;
  GlobalMu mu;
  mu.components.resize(sys.n_components());
  for (auto& p : mu.components) {
    p.E = lib.E_nominal;
    p.alpha_ray = 0.5 * lib.alpha_ray_max;
    p.beta_ray = 0.5 * lib.beta_ray_max;
    p.load.active = false;
  }
  struct Row {
    int comp;
    double sigma_x, F_rel, sigma_t_rel, c_friction;
  };
  const Row rows[] = {{3, 0.02, -20.0, 0.75, 0.7},
                      {7, 0.03, -15.0, 1.0, 0.6},
                      {11, 0.04, -10.0, 1.25, 0.5}};
  for (const Row& r : rows) {
    if (r.comp >= sys.n_components() || !sys.archetype_of(r.comp).has_inhomogeneity) continue;
    LoadParams& load = mu.components[r.comp].load;
    load.active = true;
    load.F = r.F_rel * lib.f_scale();
    load.sigma_t = r.sigma_t_rel * lib.sigma_t_ref();
    load.sigma_x = r.sigma_x;
    load.x_c = 0.5 * lib.L;
    load.c_friction = r.c_friction;
  }
  return mu;
}

/// Random global parameter: per-component material from the training boxes,
/// a non-empty subset of the loaded beams active, and load parameters from
/// their boxes (sigma_t uniform in the configured band).
inline GlobalMu sample_bridge_mu(const BenchmarkSpec& spec, const SystemModel& sys,
                                 std::mt19937_64& rng) {
  GlobalMu mu;
  mu.components.resize(sys.n_components());
  std::vector<int> loaded;
  for (int c = 0; c < sys.n_components(); ++c) {
    const ArchetypeComponent& arch = sys.archetype_of(c);
    LocalSample s = sample_local(arch.box, rng);
    mu.components[c].E = s.E;
    mu.components[c].alpha_ray = s.alpha;
    mu.components[c].beta_ray = s.beta;
    mu.components[c].load.active = false;
    if (arch.has_inhomogeneity) loaded.push_back(c);
  }
  if (!loaded.empty()) {
    // Uniform over the 2^k - 1 non-empty presence combinations.
    std::uniform_int_distribution<int> combo(1, (1 << loaded.size()) - 1);
    const int mask = combo(rng);
    for (size_t i = 0; i < loaded.size(); ++i) {
      const ArchetypeComponent& arch = sys.archetype_of(loaded[i]);
      LoadParams load = sample_load(arch.box.load, rng);
      load.active = (mask >> i) & 1;
      mu.components[loaded[i]].load = load;
    }
  }
  return mu;
}

/// Output matrix: vertical displacement sensed at the deck-top center of
/// every loaded-archetype instance.
inline SpMat bridge_qoi_matrix(const SystemModel& sys) {
  std::vector<int> sensors;
  for (int c = 0; c < sys.n_components(); ++c) {
    const ArchetypeComponent& arch = sys.archetype_of(c);
    if (!arch.has_inhomogeneity) continue;
    const int node = find_global_node(sys, sys.layout.components[c].dx + 0.5 * arch.width,
                                      arch.height);
    sensors.push_back(2 * node + 1);
  }
  SpMat Q(static_cast<int>(sensors.size()), sys.n_dofs());
  for (size_t i = 0; i < sensors.size(); ++i)
    Q.insert(static_cast<int>(i), sensors[i]) = 1.0;
  return Q;
}

// ---------------------------------------------------------------------------
// Benchmark runs.

enum class BenchMode { two_level, truth, both };

inline BenchMode bench_mode_from_string(const std::string& s) {
  if (s == "two-level") return BenchMode::two_level;
  if (s == "truth") return BenchMode::truth;
  if (s == "both") return BenchMode::both;
  throw std::invalid_argument("bench mode must be two-level, truth or both");
}

struct RunReport {
  std::string label;
  int n_basis = 0;
  int n_t = 0;
  bool converged = true;
  bool near_resonance = false;
  std::vector<double> greedy_trace;
  std::vector<int> greedy_picks;
  std::vector<RichardsonStep> richardson;
  CostReport cost;
  // Truth comparison (mode = both).
  bool has_truth = false;
  double truth_wall = 0.0;
  double speedup = 0.0;
  double max_relerr_avg_norm = 0.0;  // time-averaged-truth-norm normalization
  double max_relerr_max_norm = 0.0;  // max-truth-norm normalization
  std::vector<double> relerr_avg_norm;  // per time node
  std::vector<double> relerr_max_norm;
  Mat qoi;  // N_q x (n_t + 1)
};

inline nlohmann::json run_report_json(const RunReport& r) {
  nlohmann::json j;
  j["label"] = r.label;
  j["n_basis"] = r.n_basis;
  j["n_t"] = r.n_t;
  j["converged"] = r.converged;
  j["near_resonance"] = r.near_resonance;
  j["greedy_trace"] = r.greedy_trace;
  j["greedy_picks"] = r.greedy_picks;
  nlohmann::json rich = nlohmann::json::array();
  for (const auto& s : r.richardson)
    rich.push_back({{"n_t", s.n_t}, {"delta", s.delta}, {"epsilon", s.epsilon}});
  j["richardson"] = rich;
  j["cost"] = {{"wall_level1", r.cost.wall_level1},
               {"wall_greedy", r.cost.wall_greedy},
               {"wall_projection", r.cost.wall_projection},
               {"wall_marching", r.cost.wall_marching},
               {"ops_level1", r.cost.ops_level1},
               {"ops_greedy_projection", r.cost.ops_greedy_projection},
               {"ops_marching", r.cost.ops_marching},
               {"kappa", r.cost.kappa},
               {"schur_dim", r.cost.schur_dim}};
  if (r.has_truth) {
    j["truth_wall"] = r.truth_wall;
    j["speedup"] = r.speedup;
    j["max_relerr_avg_norm"] = r.max_relerr_avg_norm;
    j["max_relerr_max_norm"] = r.max_relerr_max_norm;
  }
  return j;
}

/// One benchmark run for a single global parameter.
inline RunReport run_bridge_case(const BenchmarkSpec& spec, const SystemModel& sys,
                                 const GlobalMu& mu, const SpMat& Q, BenchMode mode,
                                 const std::string& label) {
  RunReport report;
  report.label = label;

  TwoLevelConfig cfg;
  cfg.eps_greedy = spec.two_level.eps_greedy;
  cfg.m_cap = spec.two_level.m_cap;
  cfg.seed = spec.two_level.seed;
  cfg.t_final = spec.t_final();
  cfg.nt_start = spec.two_level.nt_start;
  cfg.nt_cap = spec.two_level.nt_cap;
  cfg.eps_dt = spec.two_level.eps_dt;
  cfg.n_threads = spec.two_level.n_threads;

  TwoLevelResult two;
  if (mode != BenchMode::truth) {
    two = run_two_level(sys, mu, sys.lib->grid, cfg, Q);
    report.n_basis = two.greedy.size();
    report.n_t = two.n_t;
    report.converged = two.converged;
    report.near_resonance = two.near_resonance;
    report.greedy_trace = two.greedy.trace;
    report.greedy_picks = two.greedy.picked;
    report.richardson = two.richardson;
    report.cost = two.cost;
    if (two.greedy.size() > 0) report.qoi = qoi_extract(two.rom, two.history);
  }

  if (mode != BenchMode::two_level) {
    const int n_t = mode == BenchMode::both ? report.n_t : spec.truth_nt;
    const auto t0 = std::chrono::steady_clock::now();
    SpMat M = assemble_global_mass(sys);
    SpMat A = assemble_global_stiffness(sys, mu);
    SpMat C = assemble_global_damping(sys, mu);
    std::vector<LoadTerm> loads = assemble_global_loads(sys, mu);
    const FunctionSpace& space = sys.global.space;
    std::vector<LoadTerm> loads_free;
    for (const auto& term : loads)
      loads_free.push_back({restrict_free(term.f_x, space), term.signature});
    MarchOptions opts;
    opts.store_derivatives = false;
    TimeHistory truth = newmark_march(restrict_free(M, space), restrict_free(C, space),
                                      restrict_free(A, space), loads_free,
                                      NewmarkConfig::uniform(spec.t_final(), n_t), opts);
    report.truth_wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.has_truth = true;
    if (mode == BenchMode::truth) {
      report.n_t = n_t;
      SpMat Q_free = gather_matrix(Q, [&] {
        std::vector<int> rows(Q.rows());
        for (size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<int>(i);
        return rows;
      }(), space.free_dofs);
      report.qoi.resize(Q.rows(), n_t + 1);
      for (int j = 0; j <= n_t; ++j) report.qoi.col(j) = Q_free * truth.u.col(j);
    }

    if (mode == BenchMode::both && report.n_basis > 0) {
      // Relative error trajectory in the H1 norm, normalized by the
      // time-averaged truth norm (and, for reference, by its maximum).
      const SpMat X_free = restrict_free(sys.h1, space);
      const int nt = report.n_t;
      Vec truth_norms(nt + 1);
      for (int j = 0; j <= nt; ++j) {
        const Vec u = truth.u.col(j);
        truth_norms[j] = std::sqrt(std::max(u.dot(X_free * u), 0.0));
      }
      const double avg_norm = truth_norms.tail(nt).mean();
      const double max_norm = truth_norms.maxCoeff();

      const MatC basis_free = restrict_free(two.rom.basis, space);
      report.relerr_avg_norm.resize(nt + 1);
      report.relerr_max_norm.resize(nt + 1);
      for (int j = 0; j <= nt; ++j) {
        const Vec rom_u = (basis_free * two.history.u.col(j)).real();
        const Vec diff = rom_u - Vec(truth.u.col(j));
        const double err = std::sqrt(std::max(diff.dot(X_free * diff), 0.0));
        report.relerr_avg_norm[j] = avg_norm > 0 ? err / avg_norm : err;
        report.relerr_max_norm[j] = max_norm > 0 ? err / max_norm : err;
      }
      report.max_relerr_avg_norm =
          *std::max_element(report.relerr_avg_norm.begin(), report.relerr_avg_norm.end());
      report.max_relerr_max_norm =
          *std::max_element(report.relerr_max_norm.begin(), report.relerr_max_norm.end());
      report.speedup = report.truth_wall / std::max(report.cost.total_wall(), 1e-12);
    }
  }
  return report;
}

/// Full benchmark: the reference parameter plus the sampled ones.
inline std::vector<RunReport> run_bridge_benchmark(const BenchmarkSpec& spec,
                                                   const SystemModel& sys, BenchMode mode) {
  spec.validate();
  const SpMat Q = bridge_qoi_matrix(sys);
  std::vector<RunReport> reports;
  reports.push_back(
      run_bridge_case(spec, sys, bridge_mu_example(spec, sys), Q, mode, "example"));
  std::mt19937_64 rng(spec.sampling.seed);
  for (int i = 0; i < spec.sampling.n_random_mu; ++i) {
    GlobalMu mu = sample_bridge_mu(spec, sys, rng);
    reports.push_back(
        run_bridge_case(spec, sys, mu, Q, mode, "rand_" + std::to_string(i)));
  }
  return reports;
}

/// CSV series for the standard plots: greedy convergence, Richardson
/// indicator vs N_t, relative error vs time, and the QoI trajectories.
inline void emit_plot_data(const RunReport& report, const std::string& out_dir,
                           double t_final) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string prefix = out_dir + "/" + report.label + "_";

  {
    CsvWriter csv(prefix + "greedy_trace.csv", {"i", "e_i"});
    for (size_t i = 0; i < report.greedy_trace.size(); ++i)
      csv.row({static_cast<double>(i + 2), report.greedy_trace[i]});
  }
  {
    CsvWriter csv(prefix + "richardson.csv", {"n_t", "delta_dt", "epsilon_dt"});
    for (const auto& s : report.richardson)
      csv.row({static_cast<double>(s.n_t), s.delta, s.epsilon});
  }
  if (!report.relerr_avg_norm.empty()) {
    CsvWriter csv(prefix + "relerr.csv", {"t", "relerr_avg_norm", "relerr_max_norm"});
    const double dt = t_final / report.n_t;
    for (size_t j = 0; j < report.relerr_avg_norm.size(); ++j)
      csv.row({j * dt, report.relerr_avg_norm[j], report.relerr_max_norm[j]});
  }
  if (report.qoi.size() > 0) {
    std::vector<std::string> header = {"t"};
    for (int q = 0; q < report.qoi.rows(); ++q) header.push_back("q" + std::to_string(q + 1));
    CsvWriter csv(prefix + "qoi.csv", header);
    const double dt = t_final / report.n_t;
    for (int j = 0; j < report.qoi.cols(); ++j) {
      std::vector<double> row = {j * dt};
      for (int q = 0; q < report.qoi.rows(); ++q) row.push_back(report.qoi(q, j));
      csv.row(row);
    }
  }
  {
    std::ofstream out(prefix + "report.json");
    out << run_report_json(report).dump(2) << "\n";
  }
}

}  // namespace elrom
