// Acceptance suite: runs every gate criterion at its stated tolerance and
// prints one pass/fail line per criterion. Exit code is the number of
// failures.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "twistdn/bessel.hpp"
#include "twistdn/conductivity.hpp"
#include "twistdn/dn.hpp"
#include "twistdn/inverse.hpp"
#include "twistdn/util.hpp"
#include "twistdn/verify.hpp"

using namespace twistdn;

namespace {

int g_failures = 0;

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  }
};

void report(int id, const std::string& name, bool pass, const std::string& detail,
            double seconds) {
  if (!pass) ++g_failures;
  std::printf("[%s] criterion %d (%s): %s  [%.1fs]\n", pass ? "PASS" : "FAIL",
              id, name.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
}

std::vector<double> g_hermitian_residuals;

void record(const DnMatrix& m) {
  g_hermitian_residuals.push_back(m.hermitian_residual());
}

// ---------------------------------------------------------------------------

void criterion1_algebra() {
  Timer timer;
  Rng rng(1001);
  double worst_form = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const Eigen::Vector2d x(2 * rng.uniform() - 1, 2 * rng.uniform() - 1);
    const double t = 4 * rng.uniform() - 2;
    const Eigen::Vector3d z(rng.normal(), rng.normal(), rng.normal());
    const double lhs = z.dot(eval_A0(x, t) * z);
    const double w = z.z() + t * (x.x() * z.y() - x.y() * z.x());
    const double rhs = z.x() * z.x() + z.y() * z.y() + w * w;
    worst_form =
        std::max(worst_form, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
  }

  double worst_dt = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Eigen::Vector2d x(3 * rng.uniform() - 1.5, 3 * rng.uniform() - 1.5);
    const double t = 4 * rng.uniform() - 2;
    Eigen::Vector3d formula = dtA_eigenvalues(x, t);
    std::sort(formula.data(), formula.data() + 3);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(eval_dtA0(x, t));
    worst_dt =
        std::max(worst_dt, (es.eigenvalues() - formula).cwiseAbs().maxCoeff());
  }

  double worst_da = 0.0;
  const double eps = 1e-6;
  for (int i = 0; i < 2000; ++i) {
    const Eigen::Vector2d x(3 * rng.uniform() - 1.5, 3 * rng.uniform() - 1.5);
    const double a = 2 * rng.uniform() - 1;
    const Eigen::Matrix2d fd =
        (eval_Atilde(x, a + eps) - eval_Atilde(x, a - eps)) / (2 * eps);
    Eigen::Vector2d formula = daAtilde_eigenvalues(x, a);
    std::sort(formula.data(), formula.data() + 2);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(fd);
    worst_da =
        std::max(worst_da, (es.eigenvalues() - formula).cwiseAbs().maxCoeff());
  }

  const bool pass = worst_form <= 1e-14 && worst_dt <= 1e-10 && worst_da <= 1e-8;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "form residual %.2e (1e-14), dtA spectrum %.2e (1e-10), "
                "daAtilde spectrum %.2e (1e-8)",
                worst_form, worst_dt, worst_da);
  report(1, "algebraic ground truth", pass, buf, timer.seconds());
}

void criterion2_oracle_convergence(const Mesh& disc_h, const Mesh& disc_h2) {
  Timer timer;
  const int K = 8;
  const std::vector<double> rates = {0.0, 0.3};
  const std::vector<double> freqs = {0.0, 0.5, 1.0, 2.0};

  bool pass = true;
  double worst_err = 0.0, worst_order = 1e9;
  for (double a : rates) {
    for (double xi : freqs) {
      double err_h = 0.0, err_h2 = 0.0;
      for (const Mesh* mesh : {&disc_h, &disc_h2}) {
        const BoundaryBasis basis = BoundaryBasis::from_mesh(*mesh, K);
        const DnMatrix m = dn_mode_matrix(*mesh, a, xi, basis);
        record(m);
        double err = 0.0;
        for (int k = -K; k <= K; ++k) {
          const double exact = disc_dn_eigenvalue(a, xi, k);
          err = std::max(err, std::abs(m.entry(k, k).real() - exact) /
                                  std::max(1.0, std::abs(exact)));
        }
        (mesh == &disc_h ? err_h : err_h2) = err;
      }
      worst_err = std::max(worst_err, err_h);
      const double order = std::log2(err_h / err_h2);
      worst_order = std::min(worst_order, order);
      if (err_h > 1e-3 || order < 1.0) pass = false;
    }
  }
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "max rel error %.2e at h=%.3g (tol 1e-3), min order %.2f (>= 1)",
                worst_err, disc_h.h, worst_order);
  report(2, "oracle convergence", pass, buf, timer.seconds());
}

void criterion3_operator_identities(const Mesh& disc_h) {
  Timer timer;
  const BoundaryBasis basis = BoundaryBasis::from_mesh(disc_h, 6);
  for (auto [a, xi] : {std::pair{0.35, 1.2}, {-0.2, 0.6}}) {
    record(dn_mode_matrix(disc_h, a, xi, basis));
  }
  record(dn_reduced_matrix(disc_h, 0.4, basis));
  double worst_sym = 0.0;
  for (double r : g_hermitian_residuals) worst_sym = std::max(worst_sym, r);

  double worst_diff = 0.0;
  const Mesh small = build_mesh(CrossSection::unit_disc(), 0.05);
  const BoundaryBasis sbasis = BoundaryBasis::from_mesh(small, 6);
  const std::vector<std::array<double, 3>> samples = {
      {0.2, 0.4, 1.0}, {0.0, 0.3, 0.5}, {-0.3, 0.3, 2.0}};
  int sample_id = 0;
  for (const auto& s : samples) {
    worst_diff = std::max(
        worst_diff, dn_difference_identity_check(small, s[0], s[1], s[2], sbasis,
                                                 20, 5000 + sample_id++));
  }

  const bool pass = worst_sym <= 1e-8 && worst_diff <= 1e-8;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "self-adjointness residual %.2e over %zu matrices (1e-8), "
                "difference identity %.2e over 60 pairs (1e-8)",
                worst_sym, g_hermitian_residuals.size(), worst_diff);
  report(3, "operator identities", pass, buf, timer.seconds());
}

void criterion4_k0_blindness(const Mesh& disc_h) {
  Timer timer;
  const BoundaryBasis basis = BoundaryBasis::from_mesh(disc_h, 2);
  double worst = 0.0;
  Complex ref;
  bool first = true;
  for (double a : {-0.4, -0.2, 0.0, 0.2, 0.4}) {
    const DnMatrix m = dn_mode_matrix(disc_h, a, 1.0, basis);
    record(m);
    if (first) {
      ref = m.entry(0, 0);
      first = false;
    } else {
      worst = std::max(worst, std::abs(m.entry(0, 0) - ref));
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "max k=0 drift %.2e over rates (tol 1e-6)",
                worst);
  report(4, "k=0 blindness", worst <= 1e-6, buf, timer.seconds());
}

void criterion5_reduced_parity(const Mesh& disc_h) {
  Timer timer;
  const BoundaryBasis basis = BoundaryBasis::from_mesh(disc_h, 6);
  const DnMatrix plus = dn_reduced_matrix(disc_h, 0.35, basis);
  const DnMatrix minus = dn_reduced_matrix(disc_h, -0.35, basis);
  record(plus);
  const bool bitwise = plus.coeffs == minus.coeffs;

  const Mesh coarse = build_mesh(CrossSection::unit_disc(), 0.1);
  const BoundaryBasis cbasis = BoundaryBasis::from_mesh(coarse, 4);
  const Measurement meas = make_reduced_measurement(coarse, cbasis, 0.3, 0.0, 1);
  ForwardCache cache;
  const RecoveryResult rec =
      recover_rate(meas, -0.6, 0.6, RecoveryMode::reduced, &cache);

  const bool pass = bitwise && rec.sign_ambiguous && rec.a_hat >= 0.0 &&
                    std::abs(rec.a_hat - 0.3) <= 1e-3;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "reduced(+a) %s reduced(-a), reduced recovery a_hat=%.5f "
                "ambiguity=%d",
                bitwise ? "==" : "!=", rec.a_hat, int(rec.sign_ambiguous));
  report(5, "reduced-map parity", pass, buf, timer.seconds());
}

void criterion6_surrogate(const Mesh& half_disc) {
  Timer timer;
  const BoundaryBasis basis = BoundaryBasis::from_mesh(half_disc, 6);

  const DnMatrix b1 = dn_bullet_mode_matrix(half_disc, 1.0, 0.8, basis);
  const DnMatrix b2 = dn_bullet_mode_matrix(half_disc, 2.0, 0.8, basis);
  record(b1);
  record(b2);
  const double scaling =
      (b2.coeffs - 2.0 * b1.coeffs).norm() / std::max(b2.coeffs.norm(), 1e-300);

  const DnMatrix s1 = dn_mode_matrix(half_disc, 1.0, 0.8, basis);
  const double match =
      (b1.coeffs - s1.coeffs).norm() / std::max(s1.coeffs.norm(), 1e-300);

  const XiGrid grid{6.0, 0.5};
  const ApproximationTable table = approximation_experiment(
      {0.8, 0.9, 0.95, 1.05, 1.1, 1.2}, half_disc, basis, 1.0, grid);
  double rmin = 1e300, rmax = 0.0;
  bool finite = true;
  for (const auto& row : table.rows) {
    if (!row.ratio) continue;
    if (!std::isfinite(*row.ratio)) finite = false;
    rmin = std::min(rmin, *row.ratio);
    rmax = std::max(rmax, *row.ratio);
  }
  const double variation = (rmax - rmin) / rmax;

  const bool pass = scaling <= 1e-12 && match <= 1e-9 && finite &&
                    variation < 0.25;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "homogeneity %.2e (1e-12), rate-1 match %.2e (1e-9), ratio in "
                "[%.4g, %.4g], variation %.1f%% (< 25%%)",
                scaling, match, rmin, rmax, 100.0 * variation);
  report(6, "surrogate map checks", pass, buf, timer.seconds());
}

void criterion7_stability() {
  Timer timer;
  const XiGrid grid{6.0, 0.5};
  std::vector<std::pair<double, double>> pairs;
  std::vector<double> rates;
  for (int i = -4; i <= 4; ++i) rates.push_back(0.1 * i);
  for (size_t i = 0; i < rates.size(); ++i)
    for (size_t j = i + 1; j < rates.size(); ++j)
      pairs.emplace_back(rates[i], rates[j]);
  for (double a : rates) pairs.emplace_back(a, a + 1e-3);

  double c_hat[2];
  bool all_finite = true, all_dominated = true;
  int m = 0;
  for (double h : {0.05, 0.025}) {
    const Mesh mesh = build_mesh(CrossSection::unit_disc(), h);
    const BoundaryBasis basis = BoundaryBasis::from_mesh(mesh, 6);
    const StabilityReport report_h =
        stability_experiment(pairs, mesh, basis, 1.0, grid);
    c_hat[m++] = report_h.C_hat;
    for (const auto& row : report_h.pairs) {
      if (!std::isfinite(row.ratio) || row.ratio <= 0.0) all_finite = false;
      if (!row.reduced_le_family) all_dominated = false;
    }
  }
  const double drift = std::abs(c_hat[1] - c_hat[0]) / c_hat[0];
  const bool pass = all_finite && all_dominated && drift < 0.10;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "C_hat %.4g -> %.4g, drift %.1f%% (< 10%%), ratios finite: %s, "
                "reduced <= family: %s",
                c_hat[0], c_hat[1], 100.0 * drift, all_finite ? "yes" : "NO",
                all_dominated ? "yes" : "NO");
  report(7, "Lipschitz stability", pass, buf, timer.seconds());
}

void criterion8_inversion() {
  Timer timer;
  const Mesh mesh = build_mesh(CrossSection::unit_disc(), 0.05);
  const BoundaryBasis basis = BoundaryBasis::from_mesh(mesh, 6);
  const XiGrid grid{6.0, 0.5};

  ForwardCache cache;
  const Measurement clean =
      make_family_measurement(mesh, basis, 1.0, grid, 0.3, 0.0, 1);
  const RecoveryResult rec =
      recover_rate(clean, -0.6, 0.6, RecoveryMode::family, &cache);
  const double clean_err = std::abs(rec.a_hat - 0.3);

  double worst_noisy = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Measurement noisy =
        make_family_measurement(mesh, basis, 1.0, grid, 0.3, 1e-3, seed);
    const RecoveryResult nrec =
        recover_rate(noisy, -0.6, 0.6, RecoveryMode::family, &cache);
    worst_noisy = std::max(worst_noisy, std::abs(nrec.a_hat - 0.3));
  }

  const bool pass = clean_err <= 1e-3 && worst_noisy <= 1e-2;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "noiseless |a_hat - a*| = %.2e (1e-3), worst over 5 noisy "
                "seeds %.2e (1e-2)",
                clean_err, worst_noisy);
  report(8, "end-to-end inversion", pass, buf, timer.seconds());
}

void criterion9_pullback() {
  Timer timer;
  const Mesh coarse = build_mesh(CrossSection::unit_disc(), 0.1);
  const Mesh fine = build_mesh(CrossSection::unit_disc(), 0.05);

  std::vector<QuadraticPolynomial> basis;
  auto linear = [](int i) {
    QuadraticPolynomial v;
    v.b(i) = 1.0;
    return v;
  };
  auto product = [](int i, int j) {
    QuadraticPolynomial v;
    v.Q(i, j) = v.Q(j, i) = 0.5;
    return v;
  };
  auto saddle = [](int i, int j) {
    QuadraticPolynomial v;
    v.Q(i, i) = 1.0;
    v.Q(j, j) = -1.0;
    return v;
  };
  for (int i = 0; i < 3; ++i) basis.push_back(linear(i));
  basis.push_back(product(0, 1));
  basis.push_back(product(0, 2));
  basis.push_back(product(1, 2));
  basis.push_back(saddle(0, 1));
  basis.push_back(saddle(1, 2));

  bool pass = true;
  double worst_factor = 1e300;
  for (double a : {-0.5, 0.25, 0.5}) {
    for (const auto& v : basis) {
      const double rc = harmonic_pullback_residual({a, 0.2}, coarse, v, 0.6);
      const double rf = harmonic_pullback_residual({a, 0.2}, fine, v, 0.6);
      if (rc <= 1e-12) {
        if (rf > 1e-12) pass = false;
        continue;
      }
      const double factor = rc / rf;
      worst_factor = std::min(worst_factor, factor);
      if (factor < 1.8) pass = false;
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "min decay factor %.2f per h halving (>= 1.8, order >= 1)",
                worst_factor);
  report(9, "pullback consistency", pass, buf, timer.seconds());
}

void criterion10_determinism() {
  Timer timer;
  const RunConfig cfg;
  const std::string r1 = verify_report_to_json(run_verify(cfg));
  const std::string r2 = verify_report_to_json(run_verify(cfg));
  bool all_pass = run_verify(cfg).all_pass;
  const bool pass = (r1 == r2) && all_pass && !r1.empty();
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "two verify runs byte-identical: %s (%zu bytes), checks pass: %s",
                r1 == r2 ? "yes" : "NO", r1.size(), all_pass ? "yes" : "NO");
  report(10, "determinism", pass, buf, timer.seconds());
}

}  // namespace

int main() {
  Timer total;
  std::printf("acceptance suite\n");

  criterion1_algebra();

  const Mesh disc_h = build_mesh(CrossSection::unit_disc(), 0.02);
  const Mesh disc_h2 = build_mesh(CrossSection::unit_disc(), 0.01);
  criterion2_oracle_convergence(disc_h, disc_h2);
  criterion3_operator_identities(disc_h);
  criterion4_k0_blindness(disc_h);
  criterion5_reduced_parity(disc_h);

  const Mesh half_disc = build_mesh(CrossSection::ellipse(0.5, 0.5), 0.05);
  criterion6_surrogate(half_disc);
  criterion7_stability();
  criterion8_inversion();
  criterion9_pullback();
  criterion10_determinism();

  std::printf("%d criterion(s) failed  [total %.1fs]\n", g_failures,
              total.seconds());
  return g_failures;
}
