#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "twistdn/conductivity.hpp"

using namespace twistdn;

TEST_CASE("A0 matches the displayed matrix") {
  CHECK((eval_A0({0.7, -0.4}, 0.0) - Eigen::Matrix3d::Identity()).norm() == 0.0);

  Eigen::Matrix3d expected;
  expected << 1, 0, 0, 0, 2, 1, 0, 1, 1;
  CHECK((eval_A0({1.0, 0.0}, 1.0) - expected).norm() == 0.0);
}

TEST_CASE("quadratic form factorization") {
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Eigen::Vector2d x(dist(gen), dist(gen));
    const double t = dist(gen);
    const Eigen::Vector3d z(dist(gen), dist(gen), dist(gen));
    const double lhs = z.dot(eval_A0(x, t) * z);
    const double w = z.z() + t * (x.x() * z.y() - x.y() * z.x());
    const double rhs = z.x() * z.x() + z.y() * z.y() + w * w;
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
  }
  CHECK(worst <= 1e-14);
}

TEST_CASE("Atilde structure") {
  CHECK((eval_Atilde({0.3, 0.9}, 0.0) - Eigen::Matrix2d::Identity()).norm() == 0.0);

  Eigen::Matrix2d expected;
  expected << 1, 0, 0, 5;
  CHECK((eval_Atilde({1.0, 0.0}, 2.0) - expected).norm() == 0.0);

  std::mt19937 gen(12);
  std::uniform_real_distribution<double> dist(-1.5, 1.5);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Vector2d x(dist(gen), dist(gen));
    const double a = dist(gen);
    const Eigen::Matrix2d At = eval_Atilde(x, a);
    // determinant of the rank-one update
    CHECK(At.determinant() ==
          doctest::Approx(1.0 + a * a * x.squaredNorm()).epsilon(1e-13));
    // upper-left block of the full matrix
    CHECK((At - eval_A0(x, a).topLeftCorner<2, 2>()).norm() == 0.0);
    // spectrum {1, 1 + a^2 |x|^2}
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(At);
    CHECK(es.eigenvalues()(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(es.eigenvalues()(1) ==
          doctest::Approx(1.0 + a * a * x.squaredNorm()).epsilon(1e-12));
  }
}

TEST_CASE("Abullet is linear in t") {
  const Eigen::Vector2d x(0.4, -0.8);
  CHECK((eval_Abullet(x, 1.0) - eval_A0(x, 1.0)).norm() == 0.0);
  CHECK(eval_Abullet(x, 0.0).norm() == 0.0);
  const Eigen::Matrix3d quotient =
      (eval_Abullet(x, 1.7) - eval_Abullet(x, 0.3)) / 1.4;
  CHECK((quotient - eval_A0(x, 1.0)).norm() <= 1e-13);
}

TEST_CASE("dtA spectrum formulas and the negative eigenvalue") {
  CHECK(dtA_eigenvalues({0.0, 0.0}, 3.0).norm() == 0.0);
  CHECK((dtA_eigenvalues({1.0, 0.0}, 0.0) - Eigen::Vector3d(0, -1, 1)).norm() ==
        0.0);

  std::mt19937 gen(13);
  std::uniform_real_distribution<double> dist(-1.5, 1.5);
  for (int i = 0; i < 500; ++i) {
    Eigen::Vector2d x(dist(gen), dist(gen));
    if (x.norm() < 1e-3) x << 0.5, 0.5;
    const double t = dist(gen);
    Eigen::Vector3d formula = dtA_eigenvalues(x, t);
    CHECK(formula(1) < 0.0);  // monotonicity obstruction
    std::sort(formula.data(), formula.data() + 3);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(eval_dtA0(x, t));
    CHECK((es.eigenvalues() - formula).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("daAtilde spectrum against finite differences") {
  CHECK(daAtilde_eigenvalues({0.6, -0.1}, 0.0).norm() == 0.0);
  CHECK((daAtilde_eigenvalues({1.0, 0.0}, 1.0) - Eigen::Vector2d(0, 2)).norm() ==
        0.0);

  std::mt19937 gen(14);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const double eps = 1e-6;
  for (int i = 0; i < 200; ++i) {
    const Eigen::Vector2d x(dist(gen), dist(gen));
    const double a = dist(gen);
    const Eigen::Matrix2d fd =
        (eval_Atilde(x, a + eps) - eval_Atilde(x, a - eps)) / (2 * eps);
    Eigen::Vector2d formula = daAtilde_eigenvalues(x, a);
    std::sort(formula.data(), formula.data() + 2);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(fd);
    CHECK((es.eigenvalues() - formula).cwiseAbs().maxCoeff() <= 1e-8);
    // x' spans the zero eigenspace of dAtilde/da = 2a x'perp x'perp^T
    const Eigen::Matrix2d exact =
        2.0 * a * Eigen::Vector2d(-x.y(), x.x()) *
        Eigen::Vector2d(-x.y(), x.x()).transpose();
    CHECK((exact * x).norm() <= 1e-13 * std::max(1.0, exact.norm()));
  }
}

TEST_CASE("ellipticity bound over the disc") {
  const Mesh mesh = build_mesh(CrossSection::unit_disc(), 0.1);
  CHECK(ellipticity_bounds(mesh, 0.0, 0.0) == doctest::Approx(1.0).epsilon(1e-14));

  const double lambda = ellipticity_bounds(mesh, -1.0, 1.0);
  // closed form at m = 1: 1 + (1 + sqrt(5))/2
  CHECK(lambda == doctest::Approx(1.0 + 0.5 * (1.0 + std::sqrt(5.0))).epsilon(1e-12));

  // sandwich on random samples drawn inside the disc
  std::mt19937 gen(15);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  int tested = 0;
  while (tested < 10000) {
    const Eigen::Vector2d x(dist(gen), dist(gen));
    if (x.norm() > 1.0) continue;
    ++tested;
    const double t = dist(gen);
    const Eigen::Vector3d z(dist(gen), dist(gen), dist(gen));
    const double q = z.dot(eval_A0(x, t) * z);
    CHECK(q >= z.squaredNorm() / lambda - 1e-12);
    CHECK(q <= lambda * z.squaredNorm() + 1e-12);
  }

  // nondecreasing in the range
  CHECK(ellipticity_bounds(mesh, -0.5, 0.5) <= lambda);
  CHECK(ellipticity_bounds(mesh, -1.0, 1.0) <=
        ellipticity_bounds(mesh, -2.0, 2.0));
}

TEST_CASE("coercivity margin") {
  const CrossSection disc = CrossSection::unit_disc();
  CHECK(coercivity_constant(disc, 0.5) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(coercivity_constant(disc, 0.0) == 1.0);
  CHECK(coercivity_constant(disc, 1.0) == doctest::Approx(0.0));
  CHECK(coercivity_constant(CrossSection::ellipse(0.5, 0.5), 1.2) ==
        doctest::Approx(1.0 - 0.36).epsilon(1e-15));
}
