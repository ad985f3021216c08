#pragma once

#include <array>

namespace twistdn {

// Symmetric Gauss rules on the reference triangle, in barycentric
// coordinates. Weights sum to 1 (multiply by the triangle area).
struct TriQuadPoint {
  double l0, l1, l2, w;
};

// Degree-2 rule (edge midpoints): exact for quadratics.
inline const std::array<TriQuadPoint, 3>& tri_quadrature_deg2() {
  static const std::array<TriQuadPoint, 3> pts = {{
      {0.5, 0.5, 0.0, 1.0 / 3.0},
      {0.0, 0.5, 0.5, 1.0 / 3.0},
      {0.5, 0.0, 0.5, 1.0 / 3.0},
  }};
  return pts;
}

// Degree-4 rule (Dunavant, 6 points, positive weights).
inline const std::array<TriQuadPoint, 6>& tri_quadrature_deg4() {
  constexpr double a1 = 0.445948490915965;
  constexpr double w1 = 0.223381589678011;
  constexpr double a2 = 0.091576213509771;
  constexpr double w2 = 0.109951743655322;
  static const std::array<TriQuadPoint, 6> pts = {{
      {a1, a1, 1.0 - 2.0 * a1, w1},
      {a1, 1.0 - 2.0 * a1, a1, w1},
      {1.0 - 2.0 * a1, a1, a1, w1},
      {a2, a2, 1.0 - 2.0 * a2, w2},
      {a2, 1.0 - 2.0 * a2, a2, w2},
      {1.0 - 2.0 * a2, a2, a2, w2},
  }};
  return pts;
}

}  // namespace twistdn
