#pragma once

// The angular-frequency sampling grid shared by the offline training and the
// Level-1 online sweep: omega in {0, dw, ..., w_max} with dw = 1/(c_under *
// sigma_t_ref) and w_max = c_over / sigma_t_ref.

#include "elrom/common.hpp"
#include "elrom/forms.hpp"

namespace elrom {

struct FrequencyGrid {
  double sigma_t_ref = 0.0;
  int c_under = 0, c_over = 0;
  double d_omega = 0.0, omega_max = 0.0;
  Vec omegas;

  int n() const { return static_cast<int>(omegas.size()); }
};

inline FrequencyGrid build_frequency_grid(double sigma_t_ref, int c_under, int c_over) {
  if (sigma_t_ref <= 0)
    throw std::invalid_argument("build_frequency_grid: sigma_t_ref must be positive");
  if (c_under < 1 || c_over < 1)
    throw std::invalid_argument("build_frequency_grid: counts must be >= 1");
  FrequencyGrid g;
  g.sigma_t_ref = sigma_t_ref;
  g.c_under = c_under;
  g.c_over = c_over;
  g.d_omega = 1.0 / (c_under * sigma_t_ref);
  g.omega_max = static_cast<double>(c_over) / sigma_t_ref;
  const int n = c_under * c_over + 1;
  g.omegas.resize(n);
  for (int j = 0; j < n; ++j) g.omegas[j] = j * g.d_omega;
  return g;
}

/// Spectral tail of the load signature at the grid cutoff:
/// |f_t_hat(omega_max; sigma_t)| / max_w |f_t_hat(w; sigma_t)|. For
/// f_t = t exp(-t/sigma_t) this equals 1 / (1 + (omega_max sigma_t)^2).
inline double spectral_coverage(const FrequencyGrid& grid, double sigma_t) {
  TimeSignature sig{sigma_t};
  const double peak = std::abs(sig.transform(0.0));
  return std::abs(sig.transform(grid.omega_max)) / peak;
}

}  // namespace elrom
