#pragma once

// The archetype component library: parameterized reference geometries with
// their FE spaces, local ports, affine operators and training parameter
// boxes, plus the reference ports induced by compatible pairs.
//
// The bridge library has four archetypes:
//   1: 3/2 L x H rectangle, clamped bottom (abutment)
//   2: T-shaped pier: 3/2 L x H flange over a centered L/2 x H stem,
//      clamped stem bottom
//   3: L x H rectangle, free (deck beam)
//   4: L x H rectangle with the Gaussian traction on top (loaded beam)
// Ports are the vertical component ends at deck level ("left"/"right").

#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "elrom/common.hpp"
#include "elrom/fespace.hpp"
#include "elrom/forms.hpp"
#include "elrom/mesh.hpp"

namespace elrom {

enum class GeometryKind { rect_dirichlet, tee, rect_free, rect_loaded };

struct LoadBox {
  double F_min = 0, F_max = 0;  // [Pa/s]
  double sigma_t_min = 0, sigma_t_max = 0;
  double x_c_min = 0, x_c_max = 0;
  double sigma_x_min = 0, sigma_x_max = 0;
  double c_friction_min = 0, c_friction_max = 0;
};

/// Local training ranges. Damping is sampled on (floor_rel*max, max] to keep
/// the half-open ranges of the damped formulation away from exactly zero.
struct ParameterBox {
  double E_min = 0, E_max = 0;
  double alpha_max = 0, beta_max = 0;
  double damping_floor_rel = 1e-3;
  bool has_load = false;
  LoadBox load;
};

struct ArchetypeComponent {
  int id = 0;  // 1-based, matching the library numbering
  GeometryKind kind = GeometryKind::rect_free;
  std::string name;

  std::shared_ptr<const Mesh> mesh;
  FunctionSpace space;
  std::map<std::string, PortDescriptor> ports;  // by side tag
  // Ports connected in every feasible assembly of the library. Reduced
  // spaces carry zero trace there; other ports are free boundaries unless
  // they are the trained side itself.
  std::set<std::string> always_connected;
  std::set<std::string> dirichlet_tags;

  AffineOperator ops;  // terms {unit-density mass, unit-modulus stiffness}
  SpMat h1;
  double nu = 0.0, rho = 0.0;

  ParameterBox box;
  bool has_inhomogeneity = false;
  std::string load_tag = "top";
  double width = 0.0, height = 0.0;

  const SpMat& mass_term() const { return ops.terms[0]; }
  const SpMat& stiffness_term() const { return ops.terms[1]; }
};

/// A reference port joins one compatible archetype pair (component-pairwise
/// training); every global connection between instances of that pair reuses
/// its trained port space.
struct ReferencePort {
  int id = 0;       // 1-based
  int arch_a = 0;   // trained orientation: a on the left ...
  int arch_b = 0;   // ... b on the right
  int n_port_dofs = 0;
  int target_size = 0;
};

/// Library-level configuration. Geometry, material and parameter ranges
/// default to the acrylic bridge benchmark; `resolution` scales the base mesh
/// (0.5 m wide, H/3 tall cells).
struct LibraryConfig {
  double L = 5.0;
  double H = 1.0;
  double stem_height_rel = 1.5;   // pier stem height in units of H
  double flange_width_rel = 1.5;  // pier flange width in units of L
  int resolution = 1;             // multiplies both mesh densities
  int ny_cells = 4;               // cells across the height H
  int nx_cells_half_l = 6;        // cells per L/2 of width (stem width unit)
  int degree = 2;

  double rho = 1180.0;
  double E_nominal = 2.755e9;
  double nu = 0.35;
  double alpha_ray_max = 5.3785e-4;
  double beta_ray_max = 1.0634e-4;

  double E_rel_min = 0.75, E_rel_max = 1.25;
  double damping_floor_rel = 1e-3;
  double F_rel_min = -20.0, F_rel_max = -10.0;  // in units of E_nominal / T_ref
  double sigma_x_min = 0.02, sigma_x_max = 0.04;
  double x_c_min = 2.46, x_c_max = 2.54;
  double c_friction_min = 0.5, c_friction_max = 0.7;
  double sigma_t_rel_min = 0.75, sigma_t_rel_max = 1.25;

  double sigma_t_ref_in_T_ref = 16.0;
  int c_under = 10, c_over = 4;

  std::vector<int> port_space_sizes = {10, 12, 10};  // reference ports 1..3
  int lifting_bubble_size = 6;
  int inhomogeneity_bubble_size = 10;
  int port_oversampling = 5;    // samples = oversampling * target size
  int bubble_oversampling = 5;
  std::uint64_t seed = 20240901;

  /// Transverse wave time scale T_ref = H / c_t, c_t = sqrt(E/(2 rho (1+nu))).
  double t_ref() const {
    return H / std::sqrt(E_nominal / (2.0 * rho * (1.0 + nu)));
  }
  double sigma_t_ref() const { return sigma_t_ref_in_T_ref * t_ref(); }
  double f_scale() const { return E_nominal / t_ref(); }

  void validate() const {
    if (L <= 0 || H <= 0) throw std::invalid_argument("LibraryConfig: L, H must be positive");
    if (resolution < 1) throw std::invalid_argument("LibraryConfig: resolution must be >= 1");
    if (ny_cells < 1 || nx_cells_half_l < 1)
      throw std::invalid_argument("LibraryConfig: mesh densities must be >= 1");
    if (nu <= 0 || nu >= 0.5) throw std::invalid_argument("LibraryConfig: nu must be in (0, 0.5)");
    if (E_nominal <= 0 || rho <= 0)
      throw std::invalid_argument("LibraryConfig: E, rho must be positive");
    if (alpha_ray_max <= 0 || beta_ray_max <= 0)
      throw std::invalid_argument("LibraryConfig: damping maxima must be positive");
    if (sigma_x_min <= 0 || sigma_t_rel_min <= 0)
      throw std::invalid_argument("LibraryConfig: load widths must be positive");
    if (port_space_sizes.size() != 3)
      throw std::invalid_argument("LibraryConfig: need 3 reference port sizes");
    if (c_under < 1 || c_over < 1)
      throw std::invalid_argument("LibraryConfig: grid factors must be >= 1");
  }
};

namespace detail {

inline ArchetypeComponent finish_archetype(ArchetypeComponent arch,
                                           const LibraryConfig& cfg,
                                           const std::vector<std::string>& port_sides) {
  arch.space = build_function_space(arch.mesh, cfg.degree, arch.dirichlet_tags);
  for (const auto& side : port_sides)
    arch.ports.emplace(side, extract_port_dofs(arch.space, side));
  arch.ops = build_affine_component_operators(arch.space, cfg.nu);
  arch.h1 = assemble_h1_norm(arch.space);
  arch.nu = cfg.nu;
  arch.rho = cfg.rho;
  arch.box.E_min = cfg.E_rel_min * cfg.E_nominal;
  arch.box.E_max = cfg.E_rel_max * cfg.E_nominal;
  arch.box.alpha_max = cfg.alpha_ray_max;
  arch.box.beta_max = cfg.beta_ray_max;
  arch.box.damping_floor_rel = cfg.damping_floor_rel;
  return arch;
}

}  // namespace detail

/// Build the four bridge archetypes at the configured resolution.
inline std::vector<ArchetypeComponent> make_bridge_archetypes(const LibraryConfig& cfg) {
  cfg.validate();
  const int r = cfg.resolution;
  const int ny = cfg.ny_cells * r;
  const double wide = 1.5 * cfg.L, stem = 0.5 * cfg.L;
  const int nx_wide = 3 * cfg.nx_cells_half_l * r;  // flange spans three stem widths
  const int nx_beam = 2 * cfg.nx_cells_half_l * r;

  std::vector<ArchetypeComponent> archs;

  {
    ArchetypeComponent a;
    a.id = 1;
    a.kind = GeometryKind::rect_dirichlet;
    a.name = "abutment";
    a.mesh = std::make_shared<Mesh>(build_rectangle_mesh(wide, cfg.H, nx_wide, ny));
    a.dirichlet_tags = {"bottom"};
    a.width = wide;
    a.height = cfg.H;
    // Bridge ends: exactly one port in use, the other edge stays free.
    archs.push_back(detail::finish_archetype(std::move(a), cfg, {"left", "right"}));
  }
  {
    ArchetypeComponent a;
    a.id = 2;
    a.kind = GeometryKind::tee;
    a.name = "pier";
    a.mesh = std::make_shared<Mesh>(
        build_tee_mesh(wide, cfg.H, stem, cfg.stem_height_rel * cfg.H, nx_wide, ny));
    a.dirichlet_tags = {"stem_bottom"};
    a.always_connected = {"left", "right"};
    a.width = wide;
    a.height = cfg.H;
    archs.push_back(detail::finish_archetype(std::move(a), cfg, {"left", "right"}));
  }
  {
    ArchetypeComponent a;
    a.id = 3;
    a.kind = GeometryKind::rect_free;
    a.name = "beam";
    a.mesh = std::make_shared<Mesh>(build_rectangle_mesh(cfg.L, cfg.H, nx_beam, ny));
    a.always_connected = {"left", "right"};
    a.width = cfg.L;
    a.height = cfg.H;
    archs.push_back(detail::finish_archetype(std::move(a), cfg, {"left", "right"}));
  }
  {
    ArchetypeComponent a;
    a.id = 4;
    a.kind = GeometryKind::rect_loaded;
    a.name = "loaded_beam";
    a.mesh = std::make_shared<Mesh>(build_rectangle_mesh(cfg.L, cfg.H, nx_beam, ny));
    a.always_connected = {"left", "right"};
    a.width = cfg.L;
    a.height = cfg.H;
    a.has_inhomogeneity = true;
    a = detail::finish_archetype(std::move(a), cfg, {"left", "right"});
    a.box.has_load = true;
    a.box.load.F_min = cfg.F_rel_min * cfg.f_scale();
    a.box.load.F_max = cfg.F_rel_max * cfg.f_scale();
    a.box.load.sigma_t_min = cfg.sigma_t_rel_min * cfg.sigma_t_ref();
    a.box.load.sigma_t_max = cfg.sigma_t_rel_max * cfg.sigma_t_ref();
    a.box.load.x_c_min = cfg.x_c_min;
    a.box.load.x_c_max = cfg.x_c_max;
    a.box.load.sigma_x_min = cfg.sigma_x_min;
    a.box.load.sigma_x_max = cfg.sigma_x_max;
    a.box.load.c_friction_min = cfg.c_friction_min;
    a.box.load.c_friction_max = cfg.c_friction_max;
    archs.push_back(std::move(a));
  }
  return archs;
}

/// Reference ports of the bridge library: 1 = abutment|pier, 2 = beam|loaded
/// beam, 3 = pier|beam, trained left-to-right in that order.
inline std::vector<ReferencePort> make_bridge_reference_ports(
    const std::vector<ArchetypeComponent>& archs, const LibraryConfig& cfg) {
  auto port_dofs = [&](int arch_id) {
    return archs[arch_id - 1].ports.at("right").n_dofs();
  };
  std::vector<ReferencePort> ports(3);
  ports[0] = {1, 1, 2, port_dofs(1), cfg.port_space_sizes[0]};
  ports[1] = {2, 3, 4, port_dofs(3), cfg.port_space_sizes[1]};
  ports[2] = {3, 2, 3, port_dofs(2), cfg.port_space_sizes[2]};
  for (const auto& p : ports)
    if (p.target_size > p.n_port_dofs)
      throw std::invalid_argument(
          "make_bridge_reference_ports: port space size exceeds trace dimension; "
          "increase the mesh resolution");
  return ports;
}

// ---------------------------------------------------------------------------
// Parameter sampling.

struct LocalSample {
  double E = 0, alpha = 0, beta = 0;
};

inline LocalSample sample_local(const ParameterBox& box, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uE(box.E_min, box.E_max);
  std::uniform_real_distribution<double> ua(box.damping_floor_rel * box.alpha_max, box.alpha_max);
  std::uniform_real_distribution<double> ub(box.damping_floor_rel * box.beta_max, box.beta_max);
  return {uE(rng), ua(rng), ub(rng)};
}

inline LoadParams sample_load(const LoadBox& box, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uF(box.F_min, box.F_max);
  std::uniform_real_distribution<double> ut(box.sigma_t_min, box.sigma_t_max);
  std::uniform_real_distribution<double> ux(box.x_c_min, box.x_c_max);
  std::uniform_real_distribution<double> us(box.sigma_x_min, box.sigma_x_max);
  std::uniform_real_distribution<double> uc(box.c_friction_min, box.c_friction_max);
  LoadParams load;
  load.F = uF(rng);
  load.sigma_t = ut(rng);
  load.x_c = ux(rng);
  load.sigma_x = us(rng);
  load.c_friction = uc(rng);
  load.active = true;
  return load;
}

}  // namespace elrom
