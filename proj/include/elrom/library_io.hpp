#pragma once

// Versioned trained-library container: a JSON manifest (config, structure,
// array directory with content hashes) followed by raw little-endian double
// blobs. FE-level structures are rebuilt deterministically from the config on
// load; trained arrays round-trip bit exactly.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "elrom/offline.hpp"

namespace elrom {

inline void to_json(nlohmann::json& j, const LibraryConfig& c) {
  j = nlohmann::json{{"L", c.L},
                     {"H", c.H},
                     {"stem_height_rel", c.stem_height_rel},
                     {"resolution", c.resolution},
                     {"ny_cells", c.ny_cells},
                     {"nx_cells_half_l", c.nx_cells_half_l},
                     {"degree", c.degree},
                     {"rho", c.rho},
                     {"E_nominal", c.E_nominal},
                     {"nu", c.nu},
                     {"alpha_ray_max", c.alpha_ray_max},
                     {"beta_ray_max", c.beta_ray_max},
                     {"E_rel_min", c.E_rel_min},
                     {"E_rel_max", c.E_rel_max},
                     {"damping_floor_rel", c.damping_floor_rel},
                     {"F_rel_min", c.F_rel_min},
                     {"F_rel_max", c.F_rel_max},
                     {"sigma_x_min", c.sigma_x_min},
                     {"sigma_x_max", c.sigma_x_max},
                     {"x_c_min", c.x_c_min},
                     {"x_c_max", c.x_c_max},
                     {"c_friction_min", c.c_friction_min},
                     {"c_friction_max", c.c_friction_max},
                     {"sigma_t_rel_min", c.sigma_t_rel_min},
                     {"sigma_t_rel_max", c.sigma_t_rel_max},
                     {"sigma_t_ref_in_T_ref", c.sigma_t_ref_in_T_ref},
                     {"c_under", c.c_under},
                     {"c_over", c.c_over},
                     {"port_space_sizes", c.port_space_sizes},
                     {"lifting_bubble_size", c.lifting_bubble_size},
                     {"inhomogeneity_bubble_size", c.inhomogeneity_bubble_size},
                     {"port_oversampling", c.port_oversampling},
                     {"bubble_oversampling", c.bubble_oversampling},
                     {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, LibraryConfig& c) {
  c = LibraryConfig{};
  j.at("L").get_to(c.L);
  j.at("H").get_to(c.H);
  j.at("stem_height_rel").get_to(c.stem_height_rel);
  j.at("resolution").get_to(c.resolution);
  j.at("ny_cells").get_to(c.ny_cells);
  j.at("nx_cells_half_l").get_to(c.nx_cells_half_l);
  j.at("degree").get_to(c.degree);
  j.at("rho").get_to(c.rho);
  j.at("E_nominal").get_to(c.E_nominal);
  j.at("nu").get_to(c.nu);
  j.at("alpha_ray_max").get_to(c.alpha_ray_max);
  j.at("beta_ray_max").get_to(c.beta_ray_max);
  j.at("E_rel_min").get_to(c.E_rel_min);
  j.at("E_rel_max").get_to(c.E_rel_max);
  j.at("damping_floor_rel").get_to(c.damping_floor_rel);
  j.at("F_rel_min").get_to(c.F_rel_min);
  j.at("F_rel_max").get_to(c.F_rel_max);
  j.at("sigma_x_min").get_to(c.sigma_x_min);
  j.at("sigma_x_max").get_to(c.sigma_x_max);
  j.at("x_c_min").get_to(c.x_c_min);
  j.at("x_c_max").get_to(c.x_c_max);
  j.at("c_friction_min").get_to(c.c_friction_min);
  j.at("c_friction_max").get_to(c.c_friction_max);
  j.at("sigma_t_rel_min").get_to(c.sigma_t_rel_min);
  j.at("sigma_t_rel_max").get_to(c.sigma_t_rel_max);
  j.at("sigma_t_ref_in_T_ref").get_to(c.sigma_t_ref_in_T_ref);
  j.at("c_under").get_to(c.c_under);
  j.at("c_over").get_to(c.c_over);
  j.at("port_space_sizes").get_to(c.port_space_sizes);
  j.at("lifting_bubble_size").get_to(c.lifting_bubble_size);
  j.at("inhomogeneity_bubble_size").get_to(c.inhomogeneity_bubble_size);
  j.at("port_oversampling").get_to(c.port_oversampling);
  j.at("bubble_oversampling").get_to(c.bubble_oversampling);
  j.at("seed").get_to(c.seed);
}

namespace detail {

inline std::uint64_t fnv1a(const char* data, size_t n) {
  std::uint64_t h = 1469598103934665603ull;
  for (size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 1099511628211ull;
  }
  return h;
}

struct ArrayWriter {
  std::vector<double> blob;
  nlohmann::json directory = nlohmann::json::array();

  void add(const std::string& name, const Mat& m) {
    nlohmann::json entry;
    entry["name"] = name;
    entry["rows"] = m.rows();
    entry["cols"] = m.cols();
    entry["offset"] = blob.size();
    const size_t n = static_cast<size_t>(m.rows()) * m.cols();
    blob.resize(blob.size() + n);
    if (n > 0) std::memcpy(blob.data() + entry["offset"].get<size_t>(), m.data(), n * sizeof(double));
    entry["fnv1a"] = fnv1a(reinterpret_cast<const char*>(m.data()), n * sizeof(double));
    directory.push_back(entry);
  }
  void add(const std::string& name, const Vec& v) { add(name, Mat(v)); }
};

struct ArrayReader {
  std::vector<double> blob;
  std::map<std::string, nlohmann::json> directory;

  Mat get(const std::string& name) const {
    auto it = directory.find(name);
    if (it == directory.end()) throw CorruptFileError("library file: missing array " + name);
    const auto& e = it->second;
    const size_t rows = e.at("rows").get<size_t>(), cols = e.at("cols").get<size_t>();
    const size_t off = e.at("offset").get<size_t>(), n = rows * cols;
    if (off + n > blob.size()) throw CorruptFileError("library file: array out of bounds");
    Mat m(rows, cols);
    if (n > 0) std::memcpy(m.data(), blob.data() + off, n * sizeof(double));
    if (fnv1a(reinterpret_cast<const char*>(m.data()), n * sizeof(double)) !=
        e.at("fnv1a").get<std::uint64_t>())
      throw CorruptFileError("library file: checksum mismatch for " + name);
    return m;
  }
  Vec get_vec(const std::string& name) const { return Vec(get(name)); }
};

inline std::string family_prefix(const FamilyKey& key) {
  return "fam_rp" + std::to_string(std::get<0>(key)) + "_a" + std::to_string(std::get<1>(key)) +
         "_" + std::get<2>(key);
}

constexpr char kLibraryMagic[9] = "ELROMLB\n";
constexpr std::uint32_t kLibraryVersion = 1;

}  // namespace detail

inline void save_library(const TrainedLibrary& lib, const std::string& path) {
  detail::ArrayWriter w;
  for (size_t p = 0; p < lib.ports.size(); ++p) {
    const std::string prefix = "port" + std::to_string(lib.ports[p].id);
    w.add(prefix + "_modes", lib.port_spaces[p].modes);
    w.add(prefix + "_spectrum", lib.port_spaces[p].spectrum);
  }
  for (const auto& [key, fam] : lib.liftings) {
    const std::string prefix = detail::family_prefix(key);
    w.add(prefix + "_lift", fam.liftings);
    for (size_t m = 0; m < fam.bubbles.size(); ++m) {
      w.add(prefix + "_bubbles" + std::to_string(m), fam.bubbles[m].modes);
      w.add(prefix + "_eigs" + std::to_string(m), fam.bubbles[m].eigenvalues);
    }
  }
  for (const auto& [arch_id, bubble] : lib.inhom) {
    w.add("inhom" + std::to_string(arch_id) + "_modes", bubble.modes);
    w.add("inhom" + std::to_string(arch_id) + "_eigs", bubble.eigenvalues);
  }

  nlohmann::json manifest;
  manifest["config"] = lib.config;
  manifest["meta"] = {{"wall_seconds", lib.meta.wall_seconds},
                      {"skipped_samples", lib.meta.skipped_samples},
                      {"max_factorized_dim", lib.meta.max_factorized_dim},
                      {"max_component_dofs", lib.meta.max_component_dofs},
                      {"max_bicomponent_dofs", lib.meta.max_bicomponent_dofs}};
  manifest["ports"] = nlohmann::json::array();
  for (size_t p = 0; p < lib.ports.size(); ++p)
    manifest["ports"].push_back({{"id", lib.ports[p].id},
                                 {"arch_a", lib.ports[p].arch_a},
                                 {"arch_b", lib.ports[p].arch_b},
                                 {"n_port_dofs", lib.ports[p].n_port_dofs},
                                 {"target_size", lib.ports[p].target_size},
                                 {"includes_inhom", lib.port_spaces[p].includes_inhomogeneity_modes}});
  manifest["arrays"] = w.directory;

  const std::string mstr = manifest.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_library: cannot open " + path);
  out.write(detail::kLibraryMagic, 8);
  const std::uint32_t version = detail::kLibraryVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const std::uint64_t msize = mstr.size();
  out.write(reinterpret_cast<const char*>(&msize), sizeof(msize));
  out.write(mstr.data(), static_cast<std::streamsize>(mstr.size()));
  out.write(reinterpret_cast<const char*>(w.blob.data()),
            static_cast<std::streamsize>(w.blob.size() * sizeof(double)));
  if (!out) throw std::runtime_error("save_library: write failed for " + path);
}

inline TrainedLibrary load_library(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptFileError("load_library: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, detail::kLibraryMagic, 8) != 0)
    throw CorruptFileError("load_library: bad magic");
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (!in || version != detail::kLibraryVersion)
    throw CorruptFileError("load_library: unsupported version");
  std::uint64_t msize = 0;
  in.read(reinterpret_cast<char*>(&msize), sizeof(msize));
  if (!in) throw CorruptFileError("load_library: truncated header");
  std::string mstr(msize, '\0');
  in.read(mstr.data(), static_cast<std::streamsize>(msize));
  if (!in) throw CorruptFileError("load_library: truncated manifest");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(mstr);
  } catch (const nlohmann::json::exception&) {
    throw CorruptFileError("load_library: manifest parse error");
  }

  detail::ArrayReader r;
  std::uint64_t blob_doubles = 0;
  for (const auto& e : manifest.at("arrays")) {
    r.directory[e.at("name").get<std::string>()] = e;
    blob_doubles =
        std::max(blob_doubles, e.at("offset").get<std::uint64_t>() +
                                   e.at("rows").get<std::uint64_t>() * e.at("cols").get<std::uint64_t>());
  }
  r.blob.resize(blob_doubles);
  in.read(reinterpret_cast<char*>(r.blob.data()),
          static_cast<std::streamsize>(blob_doubles * sizeof(double)));
  if (!in) throw CorruptFileError("load_library: truncated blob");

  TrainedLibrary lib;
  lib.config = manifest.at("config").get<LibraryConfig>();
  lib.archetypes = make_bridge_archetypes(lib.config);
  lib.ports = make_bridge_reference_ports(lib.archetypes, lib.config);
  lib.grid = build_frequency_grid(lib.config.sigma_t_ref(), lib.config.c_under,
                                  lib.config.c_over);
  const auto& meta = manifest.at("meta");
  lib.meta.wall_seconds = meta.at("wall_seconds").get<double>();
  lib.meta.skipped_samples = meta.at("skipped_samples").get<int>();
  lib.meta.max_factorized_dim = meta.at("max_factorized_dim").get<int>();
  lib.meta.max_component_dofs = meta.at("max_component_dofs").get<int>();
  lib.meta.max_bicomponent_dofs = meta.at("max_bicomponent_dofs").get<int>();

  lib.port_spaces.resize(lib.ports.size());
  for (size_t p = 0; p < lib.ports.size(); ++p) {
    const std::string prefix = "port" + std::to_string(lib.ports[p].id);
    lib.port_spaces[p].modes = r.get(prefix + "_modes");
    lib.port_spaces[p].spectrum = r.get_vec(prefix + "_spectrum");
    lib.port_spaces[p].includes_inhomogeneity_modes =
        manifest.at("ports")[p].at("includes_inhom").get<bool>();
  }
  for (const auto& rp : lib.ports)
    for (int arch_id : {rp.arch_a, rp.arch_b})
      for (const std::string side : {"left", "right"}) {
        FamilyKey key{rp.id, arch_id, side};
        const std::string prefix = detail::family_prefix(key);
        LiftingFamily fam;
        fam.rp_id = rp.id;
        fam.archetype_id = arch_id;
        fam.side = side;
        fam.liftings = r.get(prefix + "_lift");
        for (int m = 0; m < fam.liftings.cols(); ++m) {
          BubbleSpace b;
          b.kind = BubbleSpace::Kind::lifting;
          b.archetype_id = arch_id;
          b.modes = r.get(prefix + "_bubbles" + std::to_string(m));
          b.eigenvalues = r.get_vec(prefix + "_eigs" + std::to_string(m));
          fam.bubbles.push_back(std::move(b));
        }
        lib.liftings[key] = std::move(fam);
      }
  for (const auto& arch : lib.archetypes)
    if (arch.has_inhomogeneity) {
      BubbleSpace b;
      b.kind = BubbleSpace::Kind::inhomogeneity;
      b.archetype_id = arch.id;
      b.modes = r.get("inhom" + std::to_string(arch.id) + "_modes");
      b.eigenvalues = r.get_vec("inhom" + std::to_string(arch.id) + "_eigs");
      lib.inhom[arch.id] = std::move(b);
    }

  precompute_projections(lib);
  return lib;
}

}  // namespace elrom
