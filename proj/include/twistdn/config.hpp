#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "twistdn/dn.hpp"
#include "twistdn/geometry.hpp"

namespace twistdn {

// Flat key=value run configuration. A saved config re-runs bit-for-bit:
// every knob that influences the numerics lives here, and all solvers and
// seeds are deterministic.
struct RunConfig {
  std::string section = "unit_disc";  // unit_disc | ellipse | rectangle | polygon
  double ellipse_rx = 0.5, ellipse_ry = 0.5;
  double rect_width = 1.0, rect_height = 0.6;
  std::vector<double> polygon_xy;

  double target_h = 0.05;
  int K = 6;
  double a = 0.3;
  double xi = 0.0;
  std::string variant = "standard";  // standard | bullet | reduced
  bool export_family = false;        // also write the xi-family JSON from `dn`
  std::vector<double> a_values = {-0.4, -0.2, 0.2, 0.4};
  double close_pair_gap = 1e-3;

  double xi_half_width = 6.0;
  double xi_step = 0.5;
  double sigma_g = 1.0;

  double noise = 0.0;
  std::uint64_t seed = 1234;
  double search_lo = -0.6, search_hi = 0.6;
  std::string mode = "family";  // family | reduced

  std::string out_dir = "out";
  int threads = 0;

  // Parses "key = value" lines ('#' comments allowed). Unknown keys are
  // rejected.
  static RunConfig from_file(const std::string& path);
  void apply_override(const std::string& key_eq_value);
  // Canonical serialization with sorted keys and full precision.
  std::string canonical_text() const;

  CrossSection make_section() const;
  XiGrid make_grid() const { return {xi_half_width, xi_step}; }
};

}  // namespace twistdn
