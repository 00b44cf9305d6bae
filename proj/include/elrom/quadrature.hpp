#pragma once

// Fixed quadrature rules: a degree-4 6-point triangle rule (exact for P2 mass
// and stiffness integrands) and 4-point Gauss-Legendre on edges (degree 7).

#include <array>
#include <cmath>

#include "elrom/common.hpp"

namespace elrom {

struct TriQuadPoint {
  double l0, l1, l2;  // barycentric
  double w;           // weight, sums to 1/2 over the rule (reference area)
};

inline const std::array<TriQuadPoint, 6>& triangle_rule_deg4() {
  static const double a1 = 0.445948490915965, w1 = 0.223381589678011 / 2.0;
  static const double a2 = 0.091576213509771, w2 = 0.109951743655322 / 2.0;
  static const std::array<TriQuadPoint, 6> rule = {{
      {1 - 2 * a1, a1, a1, w1},
      {a1, 1 - 2 * a1, a1, w1},
      {a1, a1, 1 - 2 * a1, w1},
      {1 - 2 * a2, a2, a2, w2},
      {a2, 1 - 2 * a2, a2, w2},
      {a2, a2, 1 - 2 * a2, w2},
  }};
  return rule;
}

struct EdgeQuadPoint {
  double t;  // parameter in [0,1]
  double w;  // weight, sums to 1
};

inline const std::array<EdgeQuadPoint, 4>& edge_rule_gauss4() {
  static const double x1 = 0.339981043584856, w1 = 0.652145154862546 / 2.0;
  static const double x2 = 0.861136311594053, w2 = 0.347854845137454 / 2.0;
  static const std::array<EdgeQuadPoint, 4> rule = {{
      {0.5 * (1 - x2), w2},
      {0.5 * (1 - x1), w1},
      {0.5 * (1 + x1), w1},
      {0.5 * (1 + x2), w2},
  }};
  return rule;
}

/// P1/P2 shape values at barycentric (l0,l1,l2), element node order
/// v0 v1 v2 [m01 m12 m20].
inline void shape_values(int degree, double l0, double l1, double l2, double* N) {
  if (degree == 1) {
    N[0] = l0; N[1] = l1; N[2] = l2;
    return;
  }
  N[0] = l0 * (2 * l0 - 1);
  N[1] = l1 * (2 * l1 - 1);
  N[2] = l2 * (2 * l2 - 1);
  N[3] = 4 * l0 * l1;
  N[4] = 4 * l1 * l2;
  N[5] = 4 * l2 * l0;
}

/// Barycentric-gradient coefficients: dN[a] expressed as g0*dl0 + g1*dl1 + g2*dl2.
inline void shape_grad_coeffs(int degree, double l0, double l1, double l2, double (*g)[3]) {
  if (degree == 1) {
    for (int a = 0; a < 3; ++a)
      for (int k = 0; k < 3; ++k) g[a][k] = (a == k) ? 1.0 : 0.0;
    return;
  }
  for (int a = 0; a < 6; ++a)
    for (int k = 0; k < 3; ++k) g[a][k] = 0.0;
  g[0][0] = 4 * l0 - 1;
  g[1][1] = 4 * l1 - 1;
  g[2][2] = 4 * l2 - 1;
  g[3][0] = 4 * l1; g[3][1] = 4 * l0;
  g[4][1] = 4 * l2; g[4][2] = 4 * l1;
  g[5][2] = 4 * l0; g[5][0] = 4 * l2;
}

/// 1D trace of the P2/P1 basis along an edge param t in [0,1], node order
/// v0 v1 [mid].
inline void edge_shape_values(int degree, double t, double* S) {
  if (degree == 1) {
    S[0] = 1 - t; S[1] = t;
    return;
  }
  S[0] = (1 - t) * (1 - 2 * t);
  S[1] = t * (2 * t - 1);
  S[2] = 4 * t * (1 - t);
}

}  // namespace elrom
