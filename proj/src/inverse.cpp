#include "twistdn/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "twistdn/util.hpp"

namespace twistdn {

namespace {

void add_noise(Eigen::MatrixXcd& m, double eta, Rng& rng) {
  for (int j = 0; j < m.cols(); ++j)
    for (int i = 0; i < m.rows(); ++i)
      m(i, j) += eta * Complex(rng.normal(), rng.normal());
}

double admissible_check(const Mesh& mesh, double a) {
  const double delta = mesh.max_vertex_radius();
  const double margin = 1.0 - a * a * delta * delta;
  if (margin <= 0.0)
    throw std::domain_error("rate " + std::to_string(a) +
                            " outside the coercive range |a| delta < 1");
  return margin;
}

const DnFamily& forward_family(const Measurement& meas, double a,
                               ForwardCache& cache, int threads) {
  auto it = cache.families.find(a);
  if (it != cache.families.end()) return it->second;
  auto [ins, ok] = cache.families.emplace(
      a, dn_3d_synthesize(*meas.mesh, a, meas.basis, meas.sigma_g, meas.grid,
                          DnVariant::standard, threads));
  return ins->second;
}

const DnMatrix& forward_reduced(const Measurement& meas, double a,
                                ForwardCache& cache) {
  auto it = cache.reduced.find(a);
  if (it != cache.reduced.end()) return it->second;
  auto [ins, ok] =
      cache.reduced.emplace(a, dn_reduced_matrix(*meas.mesh, a, meas.basis));
  return ins->second;
}

}  // namespace

Measurement make_family_measurement(const Mesh& mesh,
                                    const BoundaryBasis& basis, double sigma_g,
                                    const XiGrid& grid, double a_true,
                                    double noise, std::uint64_t seed,
                                    int threads) {
  Measurement meas;
  meas.kind = Measurement::Kind::family;
  meas.mesh = &mesh;
  meas.basis = basis;
  meas.sigma_g = sigma_g;
  meas.grid = grid;
  meas.noise = noise;
  meas.seed = seed;
  meas.family = dn_3d_synthesize(mesh, a_true, basis, sigma_g, grid,
                                 DnVariant::standard, threads);
  if (noise > 0.0) {
    Rng rng(seed);
    for (auto& m : meas.family.matrices) add_noise(m, noise, rng);
  }
  return meas;
}

Measurement make_reduced_measurement(const Mesh& mesh,
                                     const BoundaryBasis& basis, double a_true,
                                     double noise, std::uint64_t seed) {
  Measurement meas;
  meas.kind = Measurement::Kind::reduced;
  meas.mesh = &mesh;
  meas.basis = basis;
  meas.noise = noise;
  meas.seed = seed;
  meas.reduced = dn_reduced_matrix(mesh, a_true, basis);
  if (noise > 0.0) {
    Rng rng(seed);
    add_noise(meas.reduced.coeffs, noise, rng);
  }
  return meas;
}

double misfit(const Measurement& meas, double a, ForwardCache* cache,
              int threads) {
  admissible_check(*meas.mesh, a);
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  if (meas.kind == Measurement::Kind::family) {
    const DnFamily& fwd = forward_family(meas, a, c, threads);
    return family_operator_norm(family_difference(meas.family, fwd));
  }
  const DnMatrix& fwd = forward_reduced(meas, a, c);
  return operator_norm(Eigen::MatrixXcd(meas.reduced.coeffs - fwd.coeffs));
}

bool scan_has_secondary_minimum(const std::vector<double>& misfits,
                                int best_index) {
  for (int i = 1; i + 1 < static_cast<int>(misfits.size()); ++i) {
    if (i == best_index) continue;
    if (misfits[i] < misfits[i - 1] - 1e-14 &&
        misfits[i] < misfits[i + 1] - 1e-14)
      return true;
  }
  return false;
}

RecoveryResult recover_rate(const Measurement& meas, double search_lo,
                            double search_hi, RecoveryMode mode,
                            ForwardCache* cache, int threads) {
  if ((mode == RecoveryMode::family) !=
      (meas.kind == Measurement::Kind::family))
    throw std::invalid_argument("recover_rate: mode does not match the measurement kind");
  double lo = search_lo, hi = search_hi;
  if (mode == RecoveryMode::reduced) lo = std::max(0.0, lo);
  if (!(lo < hi))
    throw std::invalid_argument("recover_rate: empty search interval");
  admissible_check(*meas.mesh, lo);
  admissible_check(*meas.mesh, hi);

  RecoveryResult res;
  res.sign_ambiguous = false;
  ForwardCache local_cache;
  ForwardCache* c = cache ? cache : &local_cache;
  int evals = 0;
  auto f = [&](double a) {
    ++evals;
    const double v = misfit(meas, a, c, threads);
    res.misfit_curve.push_back({a, v});
    return v;
  };

  constexpr int kScan = 21;
  std::array<double, kScan> xs{}, ms{};
  for (int i = 0; i < kScan; ++i) {
    xs[i] = lo + (hi - lo) * i / (kScan - 1);
    ms[i] = f(xs[i]);
  }
  int best = 0;
  for (int i = 1; i < kScan; ++i)
    if (ms[i] < ms[best]) best = i;

  res.multi_minimum_warning = scan_has_secondary_minimum(
      std::vector<double>(ms.begin(), ms.end()), best);

  double blo = xs[std::max(0, best - 1)];
  double bhi = xs[std::min(kScan - 1, best + 1)];
  res.bracket_lo = blo;
  res.bracket_hi = bhi;

  double a_hat = xs[best];
  double m_hat = ms[best];

  if (!res.multi_minimum_warning) {
    // Golden-section refinement to bracket width 1e-4.
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = bhi - gr * (bhi - blo);
    double x2 = blo + gr * (bhi - blo);
    double f1 = f(x1), f2 = f(x2);
    while (bhi - blo > 1e-4) {
      if (f1 <= f2) {
        bhi = x2;
        x2 = x1;
        f2 = f1;
        x1 = bhi - gr * (bhi - blo);
        f1 = f(x1);
      } else {
        blo = x1;
        x1 = x2;
        f1 = f2;
        x2 = blo + gr * (bhi - blo);
        f2 = f(x2);
      }
    }
    res.bracket_lo = blo;
    res.bracket_hi = bhi;
    a_hat = 0.5 * (blo + bhi);
    m_hat = f(a_hat);
    // The returned rate is the best evaluated sample.
    for (const auto& p : res.misfit_curve) {
      if (p[1] < m_hat) {
        a_hat = p[0];
        m_hat = p[1];
      }
    }
  }

  res.a_hat = a_hat;
  res.residual = m_hat;
  res.iterations = evals;
  if (mode == RecoveryMode::reduced)
    res.sign_ambiguous = std::abs(a_hat) > 1e-3;
  std::sort(res.misfit_curve.begin(), res.misfit_curve.end(),
            [](const auto& x, const auto& y) { return x[0] < y[0]; });
  res.misfit_curve.erase(
      std::unique(res.misfit_curve.begin(), res.misfit_curve.end(),
                  [](const auto& x, const auto& y) { return x[0] == y[0]; }),
      res.misfit_curve.end());
  return res;
}

StabilityReport stability_experiment(
    const std::vector<std::pair<double, double>>& pairs, const Mesh& mesh,
    const BoundaryBasis& basis, double sigma_g, const XiGrid& grid,
    int threads) {
  StabilityReport report;
  report.mesh_h = mesh.h;
  report.K = basis.K;
  report.sigma_g = sigma_g;

  std::map<double, DnFamily> families;
  std::map<double, DnMatrix> reduced;
  auto family_at = [&](double a) -> const DnFamily& {
    auto it = families.find(a);
    if (it == families.end())
      it = families
               .emplace(a, dn_3d_synthesize(mesh, a, basis, sigma_g, grid,
                                            DnVariant::standard, threads))
               .first;
    return it->second;
  };
  auto reduced_at = [&](double a) -> const DnMatrix& {
    auto it = reduced.find(a);
    if (it == reduced.end())
      it = reduced.emplace(a, dn_reduced_matrix(mesh, a, basis)).first;
    return it->second;
  };

  for (const auto& [a1, a2] : pairs) {
    if (a1 == a2) continue;  // 0/0 ratio carries no information
    StabilityPair row;
    row.a1 = a1;
    row.a2 = a2;
    row.family_diff_norm =
        family_operator_norm(family_difference(family_at(a1), family_at(a2)));
    row.reduced_diff_norm = operator_norm(
        Eigen::MatrixXcd(reduced_at(a1).coeffs - reduced_at(a2).coeffs));
    row.ratio = std::abs(a1 - a2) / row.family_diff_norm;
    row.reduced_le_family =
        row.reduced_diff_norm <= row.family_diff_norm * (1.0 + 1e-9) + 1e-12;
    report.C_hat = std::max(report.C_hat, row.ratio);
    report.pairs.push_back(row);
  }
  return report;
}

ApproximationTable approximation_experiment(const std::vector<double>& a_values,
                                            const Mesh& mesh,
                                            const BoundaryBasis& basis,
                                            double sigma_g, const XiGrid& grid,
                                            int threads) {
  const double delta = mesh.max_vertex_radius();
  ApproximationTable table;
  table.mesh_h = mesh.h;
  table.K = basis.K;
  table.sigma_g = sigma_g;
  for (double a : a_values) {
    if (!(a > 0.0) || !(a * delta < 1.0) || !(delta < 1.0))
      throw std::domain_error(
          "approximation experiment: rate " + std::to_string(a) +
          " inadmissible (needs a > 0, a delta < 1 and delta < 1; delta = " +
          std::to_string(delta) + ")");
    const DnFamily standard = dn_3d_synthesize(mesh, a, basis, sigma_g, grid,
                                               DnVariant::standard, threads);
    const DnFamily surrogate = dn_3d_synthesize(mesh, a, basis, sigma_g, grid,
                                                DnVariant::bullet, threads);
    ApproximationRow row;
    row.a = a;
    row.diff_norm = family_operator_norm(family_difference(standard, surrogate));
    if (std::abs(a - 1.0) > 1e-12) {
      row.ratio = row.diff_norm / std::abs(a - 1.0);
      table.C_approx = std::max(table.C_approx, *row.ratio);
    }
    table.rows.push_back(row);
  }
  return table;
}

std::string recovery_to_json(const RecoveryResult& r) {
  nlohmann::json j;
  j["a_hat"] = r.a_hat;
  j["sign_ambiguous"] = r.sign_ambiguous;
  j["multi_minimum_warning"] = r.multi_minimum_warning;
  j["bracket"] = {r.bracket_lo, r.bracket_hi};
  j["iterations"] = r.iterations;
  j["residual"] = r.residual;
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& p : r.misfit_curve) curve.push_back({p[0], p[1]});
  j["misfit_curve"] = std::move(curve);
  return j.dump(2) + "\n";
}

std::string misfit_curve_csv(const RecoveryResult& r) {
  std::ostringstream out;
  out.precision(17);
  out << "a,misfit\n";
  for (const auto& p : r.misfit_curve) out << p[0] << "," << p[1] << "\n";
  return out.str();
}

std::string stability_to_json(const StabilityReport& r) {
  nlohmann::json j;
  j["C_hat"] = r.C_hat;
  j["mesh_h"] = r.mesh_h;
  j["K"] = r.K;
  j["sigma_g"] = r.sigma_g;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& p : r.pairs) {
    rows.push_back({{"a1", p.a1},
                    {"a2", p.a2},
                    {"family_diff_norm", p.family_diff_norm},
                    {"reduced_diff_norm", p.reduced_diff_norm},
                    {"ratio", p.ratio},
                    {"reduced_le_family", p.reduced_le_family}});
  }
  j["pairs"] = std::move(rows);
  return j.dump(2) + "\n";
}

std::string stability_ratio_csv(const StabilityReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "a1,a2,family_diff_norm,reduced_diff_norm,ratio\n";
  for (const auto& p : r.pairs)
    out << p.a1 << "," << p.a2 << "," << p.family_diff_norm << ","
        << p.reduced_diff_norm << "," << p.ratio << "\n";
  return out.str();
}

std::string approximation_to_json(const ApproximationTable& t) {
  nlohmann::json j;
  j["C_approx"] = t.C_approx;
  j["mesh_h"] = t.mesh_h;
  j["K"] = t.K;
  j["sigma_g"] = t.sigma_g;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : t.rows) {
    nlohmann::json r = {{"a", row.a}, {"diff_norm", row.diff_norm}};
    if (row.ratio)
      r["ratio"] = *row.ratio;
    else
      r["ratio"] = nullptr;
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

std::string approximation_csv(const ApproximationTable& t) {
  std::ostringstream out;
  out.precision(17);
  out << "a,diff_norm,ratio\n";
  for (const auto& row : t.rows) {
    out << row.a << "," << row.diff_norm << ",";
    if (row.ratio) out << *row.ratio;
    out << "\n";
  }
  return out.str();
}

}  // namespace twistdn
