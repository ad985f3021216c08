#include "twistdn/verify.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "twistdn/bessel.hpp"
#include "twistdn/conductivity.hpp"
#include "twistdn/fem.hpp"
#include "twistdn/inverse.hpp"
#include "twistdn/util.hpp"

namespace twistdn {

namespace {

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(12);
  o << v;
  return o.str();
}

CheckResult check(const std::string& name, bool pass, const std::string& detail) {
  return {name, pass, detail};
}

CheckResult quadratic_form_check() {
  Rng rng(101);
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const Eigen::Vector2d x(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0);
    const double t = 4.0 * rng.uniform() - 2.0;
    const Eigen::Vector3d z(rng.normal(), rng.normal(), rng.normal());
    const double lhs = z.dot(eval_A0(x, t) * z);
    const double w = z.z() + t * (x.x() * z.y() - x.y() * z.x());
    const double rhs = z.x() * z.x() + z.y() * z.y() + w * w;
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
  }
  return check("quadratic_form_factorization", worst <= 1e-14,
               "max residual " + fmt(worst) + " over 1e5 samples (tol 1e-14)");
}

CheckResult dtA_spectrum_check() {
  Rng rng(102);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Eigen::Vector2d x(3.0 * rng.uniform() - 1.5, 3.0 * rng.uniform() - 1.5);
    const double t = 4.0 * rng.uniform() - 2.0;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(eval_dtA0(x, t));
    Eigen::Vector3d formula = dtA_eigenvalues(x, t);
    std::sort(formula.data(), formula.data() + 3);
    worst = std::max(worst, (es.eigenvalues() - formula).cwiseAbs().maxCoeff());
  }
  return check("dtA_eigenvalue_formulas", worst <= 1e-10,
               "max deviation " + fmt(worst) + " from numerical spectra (tol 1e-10)");
}

CheckResult daAtilde_spectrum_check() {
  Rng rng(103);
  double worst = 0.0;
  const double eps = 1e-6;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector2d x(3.0 * rng.uniform() - 1.5, 3.0 * rng.uniform() - 1.5);
    const double a = 2.0 * rng.uniform() - 1.0;
    const Eigen::Matrix2d fd =
        (eval_Atilde(x, a + eps) - eval_Atilde(x, a - eps)) / (2.0 * eps);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(fd);
    Eigen::Vector2d formula = daAtilde_eigenvalues(x, a);
    std::sort(formula.data(), formula.data() + 2);
    worst = std::max(worst, (es.eigenvalues() - formula).cwiseAbs().maxCoeff());
  }
  return check("daAtilde_spectrum", worst <= 1e-8,
               "max deviation " + fmt(worst) + " from finite differences (tol 1e-8)");
}

CheckResult mesh_check(const RunConfig& cfg) {
  const Mesh mesh = build_mesh(cfg.make_section(), cfg.target_h);
  const std::string err = validate_mesh(mesh);
  if (!err.empty()) return check("mesh_invariants", false, err);
  const bool hbound = mesh.h <= 1.5 * cfg.target_h;
  return check("mesh_invariants", hbound,
               std::to_string(mesh.num_triangles()) + " triangles, h = " +
                   fmt(mesh.h) + " (target " + fmt(cfg.target_h) + ")");
}

CheckResult coercivity_check(const Mesh& mesh, double a) {
  ModeSystem sys(mesh, a, 1.0);
  const double delta = mesh.max_vertex_radius();
  const double margin = 1.0 - a * a * delta * delta;
  const auto flags = mesh.boundary_flags();
  std::vector<int> interior;
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (!flags[v]) interior.push_back(v);

  Rng rng(104);
  double worst = 1e300;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXcd z = Eigen::VectorXcd::Zero(mesh.num_vertices());
    for (int v : interior) z(v) = Complex(rng.normal(), rng.normal());
    const Complex energy = sys.energy_pairing(z, z);
    const Eigen::VectorXcd zbar = z.conjugate();
    const Complex semi = z.transpose() * (sys.plain_stiffness() * zbar);
    worst = std::min(worst, energy.real() - margin * semi.real());
  }
  return check("discrete_coercivity", worst >= -1e-9,
               "min(energy - margin*seminorm^2) = " + fmt(worst) +
                   " with margin " + fmt(margin));
}

CheckResult pullback_check() {
  const CrossSection disc = CrossSection::unit_disc();
  const Mesh coarse = build_mesh(disc, 0.2);
  const Mesh fine = build_mesh(disc, 0.1);
  QuadraticPolynomial v;  // y1^2 - y2^2
  v.Q(0, 0) = 1.0;
  v.Q(1, 1) = -1.0;
  const TwistMap tm{0.3, 0.0};
  const double rc = harmonic_pullback_residual(tm, coarse, v, 0.4);
  const double rf = harmonic_pullback_residual(tm, fine, v, 0.4);
  const double factor = rc / rf;
  return check("harmonic_pullback_decay", factor >= 1.8,
               "residual " + fmt(rc) + " -> " + fmt(rf) + ", factor " + fmt(factor));
}

CheckResult oracle_check(const Mesh& mesh, const BoundaryBasis& basis) {
  const DnMatrix m = dn_mode_matrix(mesh, 0.3, 0.7, basis);
  double worst = 0.0;
  for (int k = -std::min(4, basis.K); k <= std::min(4, basis.K); ++k) {
    const double exact = disc_dn_eigenvalue(0.3, 0.7, k);
    const double got = m.entry(k, k).real();
    worst = std::max(worst, std::abs(got - exact) / std::max(1.0, std::abs(exact)));
  }
  return check("disc_oracle_agreement", worst <= 2e-2,
               "max relative deviation " + fmt(worst) + " at h = " + fmt(mesh.h) +
                   " (smoke tolerance 2e-2)");
}

CheckResult dn_symmetry_check(const Mesh& mesh, const BoundaryBasis& basis,
                              double a) {
  const DnMatrix m1 = dn_mode_matrix(mesh, a, 0.9, basis);
  const DnMatrix m0 = dn_reduced_matrix(mesh, a, basis);
  const double r = std::max(m1.hermitian_residual(), m0.hermitian_residual());
  return check("dn_self_adjointness", r <= 1e-8,
               "max Hermitian residual " + fmt(r) + " (tol 1e-8)");
}

CheckResult reduced_parity_check(const Mesh& mesh, const BoundaryBasis& basis,
                                 double a) {
  const DnMatrix p = dn_reduced_matrix(mesh, a, basis);
  const DnMatrix n = dn_reduced_matrix(mesh, -a, basis);
  const bool same = p.coeffs == n.coeffs;
  return check("reduced_parity_bitwise", same,
               same ? "reduced maps at +-a are bit-identical"
                    : "reduced maps at +-a differ");
}

CheckResult k0_blindness_check(const Mesh& mesh, const BoundaryBasis& basis) {
  double worst = 0.0;
  Complex ref = 0.0;
  bool first = true;
  for (double a : {-0.4, -0.2, 0.0, 0.2, 0.4}) {
    const DnMatrix m = dn_mode_matrix(mesh, a, 1.0, basis);
    const Complex d0 = m.entry(0, 0);
    if (first) {
      ref = d0;
      first = false;
    } else {
      worst = std::max(worst, std::abs(d0 - ref));
    }
  }
  return check("k0_blindness", worst <= 1e-6,
               "max k=0 drift over rates " + fmt(worst) + " (tol 1e-6)");
}

CheckResult bullet_checks() {
  const Mesh half = build_mesh(CrossSection::ellipse(0.5, 0.5), 0.05);
  const BoundaryBasis basis = BoundaryBasis::from_mesh(half, 4);
  const DnMatrix b1 = dn_bullet_mode_matrix(half, 1.0, 0.8, basis);
  const DnMatrix b2 = dn_bullet_mode_matrix(half, 2.0, 0.8, basis);
  const DnMatrix s1 = dn_mode_matrix(half, 1.0, 0.8, basis);
  const double scaling =
      (b2.coeffs - 2.0 * b1.coeffs).norm() / std::max(b2.coeffs.norm(), 1e-300);
  const double match =
      (b1.coeffs - s1.coeffs).norm() / std::max(s1.coeffs.norm(), 1e-300);
  const bool pass = scaling <= 1e-12 && match <= 1e-9;
  return check("bullet_scaling_and_match", pass,
               "homogeneity residual " + fmt(scaling) + " (tol 1e-12), t=1 match " +
                   fmt(match) + " (tol 1e-9)");
}

CheckResult difference_identity_check_smoke(const Mesh& mesh,
                                            const BoundaryBasis& basis) {
  const double r = dn_difference_identity_check(mesh, 0.2, 0.4, 1.0, basis, 5, 42);
  return check("difference_identity", r <= 1e-8,
               "max relative residual " + fmt(r) + " over 5 pairs (tol 1e-8)");
}

CheckResult synthesis_check(const Mesh& mesh, const BoundaryBasis& basis,
                            const RunConfig& cfg) {
  const DnFamily fam = dn_3d_synthesize(mesh, cfg.a, basis, cfg.sigma_g,
                                        cfg.make_grid(), DnVariant::standard,
                                        cfg.threads);
  const DnMatrix red = dn_reduced_matrix(mesh, cfg.a, basis);
  const int z = fam.zero_index();
  const double ghat0 = fam.ghat[z];
  const double slice = (fam.matrices[z] * ghat0 - red.coeffs).norm() /
                       std::max(red.coeffs.norm(), 1e-300);
  const bool pass = slice <= 1e-9 && ghat0 == 1.0;
  return check("synthesis_zero_slice", pass,
               "ghat(0) = " + fmt(ghat0) + ", zero-slice deviation " + fmt(slice) +
                   " (tol 1e-9)");
}

CheckResult inversion_smoke(const RunConfig& cfg) {
  const Mesh mesh = build_mesh(CrossSection::unit_disc(), 0.1);
  const BoundaryBasis basis = BoundaryBasis::from_mesh(mesh, 4);
  const XiGrid grid{6.0, 0.5};
  const Measurement meas =
      make_family_measurement(mesh, basis, 1.0, grid, 0.3, 0.0, 7, cfg.threads);
  ForwardCache cache;
  const RecoveryResult rec =
      recover_rate(meas, -0.6, 0.6, RecoveryMode::family, &cache, cfg.threads);
  const double err = std::abs(rec.a_hat - 0.3);
  return check("end_to_end_inversion", err <= 5e-3,
               "recovered " + fmt(rec.a_hat) + " for true rate 0.3 (tol 5e-3)");
}

}  // namespace

VerifyReport run_verify(const RunConfig& cfg) {
  VerifyReport report;
  auto add = [&](CheckResult r) {
    report.all_pass = report.all_pass && r.pass;
    report.checks.push_back(std::move(r));
  };

  add(quadratic_form_check());
  add(dtA_spectrum_check());
  add(daAtilde_spectrum_check());
  add(mesh_check(cfg));

  const Mesh disc = build_mesh(CrossSection::unit_disc(), 0.05);
  const BoundaryBasis basis = BoundaryBasis::from_mesh(disc, std::min(cfg.K, 6));

  add(coercivity_check(disc, 0.5));
  add(pullback_check());
  add(oracle_check(disc, basis));
  add(dn_symmetry_check(disc, basis, 0.3));
  add(reduced_parity_check(disc, basis, 0.4));
  add(k0_blindness_check(disc, basis));
  add(bullet_checks());
  add(difference_identity_check_smoke(disc, basis));
  add(synthesis_check(disc, basis, cfg));
  add(inversion_smoke(cfg));
  return report;
}

std::string verify_report_to_json(const VerifyReport& report) {
  nlohmann::json j;
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : report.checks)
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  j["checks"] = std::move(checks);
  j["all_pass"] = report.all_pass;
  return j.dump(2) + "\n";
}

}  // namespace twistdn
