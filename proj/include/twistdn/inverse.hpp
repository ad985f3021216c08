#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twistdn/dn.hpp"

namespace twistdn {

// DN data used as the inversion input. Carries the forward-model context
// (mesh, basis, profile, grid) so that misfits are computed with identical
// discretization on both sides. Noise is entrywise Gaussian, reproducible
// from the stored seed; with noise = 0 the data equals the forward output
// bit-for-bit.
struct Measurement {
  enum class Kind { family, reduced };

  Kind kind = Kind::family;
  DnFamily family;
  DnMatrix reduced;
  double noise = 0.0;
  std::uint64_t seed = 0;

  const Mesh* mesh = nullptr;
  BoundaryBasis basis;
  double sigma_g = 1.0;
  XiGrid grid;
};

Measurement make_family_measurement(const Mesh& mesh,
                                    const BoundaryBasis& basis, double sigma_g,
                                    const XiGrid& grid, double a_true,
                                    double noise, std::uint64_t seed,
                                    int threads = 0);

Measurement make_reduced_measurement(const Mesh& mesh,
                                     const BoundaryBasis& basis, double a_true,
                                     double noise, std::uint64_t seed);

// Forward simulations keyed by the exact twist-rate value; shared between
// scans and seeds on one mesh/basis/grid.
struct ForwardCache {
  std::map<double, DnFamily> families;
  std::map<double, DnMatrix> reduced;
};

// Operator-norm discrepancy between the measurement and the forward
// simulation at rate a (family norm for family data, weighted singular value
// for reduced data). Throws std::domain_error outside the coercive range.
double misfit(const Measurement& measurement, double a,
              ForwardCache* cache = nullptr, int threads = 0);

enum class RecoveryMode { family, reduced };

struct RecoveryResult {
  double a_hat = 0.0;
  bool sign_ambiguous = false;       // reduced data cannot see the sign of a
  bool multi_minimum_warning = false;
  std::vector<std::array<double, 2>> misfit_curve;  // (a, misfit), sorted
  double bracket_lo = 0.0, bracket_hi = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

// True when the scan values have a strict interior local minimum away from
// the best sample, i.e. bracketing the best sample is unreliable.
bool scan_has_secondary_minimum(const std::vector<double>& misfits,
                                int best_index);

// Coarse 21-point scan over the search interval followed by golden-section
// refinement to bracket width 1e-4. In reduced mode the scan runs over
// nonnegative rates and the sign-ambiguity flag is set. A non-unimodal scan
// returns the best scan point with a warning instead of refining.
RecoveryResult recover_rate(const Measurement& measurement, double search_lo,
                            double search_hi, RecoveryMode mode,
                            ForwardCache* cache = nullptr, int threads = 0);

struct StabilityPair {
  double a1 = 0.0, a2 = 0.0;
  double family_diff_norm = 0.0;
  double reduced_diff_norm = 0.0;
  double ratio = 0.0;  // |a1 - a2| / family_diff_norm
  bool reduced_le_family = false;
};

struct StabilityReport {
  std::vector<StabilityPair> pairs;
  double C_hat = 0.0;  // max ratio: empirical Lipschitz constant
  double mesh_h = 0.0;
  int K = 0;
  double sigma_g = 1.0;
};

// Empirical Lipschitz-stability constant |a1 - a2| <= C ||L1 - L2|| over the
// given rate pairs (equal pairs skipped). Each pair also records the
// reduced-map difference norm and whether it is dominated by the family
// norm.
StabilityReport stability_experiment(
    const std::vector<std::pair<double, double>>& pairs, const Mesh& mesh,
    const BoundaryBasis& basis, double sigma_g, const XiGrid& grid,
    int threads = 0);

struct ApproximationRow {
  double a = 0.0;
  double diff_norm = 0.0;  // || standard - surrogate || family norm
  std::optional<double> ratio;  // diff_norm / |a - 1|, absent at a == 1
};

struct ApproximationTable {
  std::vector<ApproximationRow> rows;
  double C_approx = 0.0;  // max ratio over rows with a != 1
  double mesh_h = 0.0;
  int K = 0;
  double sigma_g = 1.0;
};

// Compares the standard family with the degree-one surrogate family over
// rates near 1. Requires a > 0, a delta < 1 and delta < 1 (so the surrogate
// system is coercive): run it on a scaled section.
ApproximationTable approximation_experiment(const std::vector<double>& a_values,
                                            const Mesh& mesh,
                                            const BoundaryBasis& basis,
                                            double sigma_g, const XiGrid& grid,
                                            int threads = 0);

std::string recovery_to_json(const RecoveryResult& r);
std::string misfit_curve_csv(const RecoveryResult& r);
std::string stability_to_json(const StabilityReport& r);
std::string stability_ratio_csv(const StabilityReport& r);
std::string approximation_to_json(const ApproximationTable& t);
std::string approximation_csv(const ApproximationTable& t);

}  // namespace twistdn
