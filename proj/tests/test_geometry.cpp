#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <random>

#include "twistdn/geometry.hpp"

using namespace twistdn;

namespace {

double boundary_distance(const CrossSection& s, const Eigen::Vector2d& p) {
  switch (s.kind) {
    case CrossSection::Kind::UnitDisc:
      return std::abs(p.norm() - 1.0);
    case CrossSection::Kind::Ellipse: {
      const double u = p.x() / s.semi_axes.x(), v = p.y() / s.semi_axes.y();
      return std::abs(std::hypot(u, v) - 1.0);
    }
    case CrossSection::Kind::Rectangle: {
      const double dx = std::abs(p.x()) - 0.5 * s.width;
      const double dy = std::abs(p.y()) - 0.5 * s.height;
      return std::abs(std::max(dx, dy));
    }
    default:
      return 0.0;
  }
}

QuadraticPolynomial linear(double bx, double by, double bz) {
  QuadraticPolynomial v;
  v.b << bx, by, bz;
  return v;
}

QuadraticPolynomial product(int i, int j) {
  QuadraticPolynomial v;
  v.Q(i, j) += 0.5;
  v.Q(j, i) += 0.5;
  return v;
}

QuadraticPolynomial saddle(int i, int j) {
  QuadraticPolynomial v;
  v.Q(i, i) = 1.0;
  v.Q(j, j) = -1.0;
  return v;
}

}  // namespace

TEST_CASE("mesh invariants hold across shapes and resolutions") {
  struct Case {
    CrossSection section;
    double h;
  };
  const std::vector<Case> cases = {
      {CrossSection::unit_disc(), 0.3},
      {CrossSection::unit_disc(), 0.12},
      {CrossSection::ellipse(0.5, 0.5), 0.1},
      {CrossSection::ellipse(1.2, 0.7), 0.2},
      {CrossSection::rectangle(2.0, 1.0), 0.2},
      {CrossSection::polygon({{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.2}, {-0.4, -0.9}}),
       0.2},
      // nonconvex L-shape with a vertex on the (0,1)-(1,0) diagonal
      {CrossSection::polygon({{0.0, 0.0},
                              {1.0, 0.0},
                              {1.0, 0.5},
                              {0.5, 0.5},
                              {0.5, 1.0},
                              {0.0, 1.0}}),
       0.15},
  };
  for (const auto& c : cases) {
    CAPTURE(c.h);
    const Mesh mesh = build_mesh(c.section, c.h);
    CHECK(validate_mesh(mesh).empty());
    CHECK(mesh.h <= 1.5 * c.h);
    CHECK(mesh.perimeter > 0.0);
    if (c.section.kind != CrossSection::Kind::Polygon) {
      for (int v : mesh.boundary_loop) {
        const Eigen::Vector2d p = mesh.vertices.row(v).transpose();
        CHECK(boundary_distance(c.section, p) <= 1e-12);
      }
    }
  }
}

TEST_CASE("disc mesh radius and refinement factor") {
  const Mesh coarse = build_mesh(CrossSection::unit_disc(), 0.1);
  const Mesh fine = build_mesh(CrossSection::unit_disc(), 0.05);
  CHECK(coarse.max_vertex_radius() <= 1.0 + 1e-12);
  CHECK(CrossSection::unit_disc().delta() == 1.0);
  const double growth =
      double(fine.num_triangles()) / double(coarse.num_triangles());
  CHECK(growth >= 3.2);
  CHECK(growth <= 4.8);
}

TEST_CASE("rectangle delta is the corner radius") {
  const CrossSection rect = CrossSection::rectangle(2.0, 1.0);
  CHECK(rect.delta() == doctest::Approx(std::sqrt(1.0 + 0.25)).epsilon(1e-15));
  const Mesh mesh = build_mesh(rect, 0.2);
  CHECK(mesh.max_vertex_radius() == doctest::Approx(rect.delta()).epsilon(1e-13));
}

TEST_CASE("degenerate polygons are rejected") {
  CHECK_THROWS_AS(
      build_mesh(CrossSection::polygon({{0, 0}, {1, 0}, {2, 0}}), 0.1),
      std::invalid_argument);
  CHECK_THROWS_AS(build_mesh(CrossSection::polygon(
                                 {{0, 0}, {1, 1}, {1, 0}, {0, 1}}),
                             0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_mesh(CrossSection::unit_disc(), 0.0),
                  std::invalid_argument);
}

TEST_CASE("rotation matrices") {
  CHECK((rotation(0.0) - Eigen::Matrix2d::Identity()).norm() == 0.0);
  const Eigen::Vector2d e1(1.0, 0.0);
  CHECK((rotation(M_PI / 2) * e1 - Eigen::Vector2d(0.0, 1.0)).norm() <= 1e-15);
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> dist(-10.0, 10.0);
  for (int i = 0; i < 50; ++i) {
    const double xi = dist(gen);
    const Eigen::Matrix2d R = rotation(xi);
    CHECK((R * rotation(-xi) - Eigen::Matrix2d::Identity()).norm() <= 1e-15);
    CHECK(std::abs(R.determinant() - 1.0) <= 1e-15);
  }
}

TEST_CASE("twist and straighten maps are mutually inverse") {
  const TwistMap id{0.0, 0.0};
  const Eigen::Vector3d p(0.3, -0.7, 2.0);
  CHECK((twist_map(id, p) - p).norm() == 0.0);

  const TwistMap tm{1.0, 0.0};
  const Eigen::Vector3d x(1.0, 0.0, M_PI / 2);
  const Eigen::Vector3d y = twist_map(tm, x);
  CHECK((y - Eigen::Vector3d(0.0, 1.0, M_PI / 2)).norm() <= 1e-15);

  std::mt19937 gen(7);
  std::uniform_real_distribution<double> dist(-5.0, 5.0);
  double worst = 0.0;
  const TwistMap tw{0.83, -1.4};
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d q(dist(gen), dist(gen), dist(gen));
    worst = std::max(worst, (straighten_map(tw, twist_map(tw, q)) - q).norm());
    CHECK(twist_map(tw, q).z() == q.z());
  }
  CHECK(worst <= 1e-13);
}

TEST_CASE("mesh text format round trip") {
  const Mesh mesh = build_mesh(CrossSection::ellipse(1.1, 0.6), 0.25);
  const std::string path =
      (std::filesystem::temp_directory_path() / "twistdn_mesh_rt.txt").string();
  save_mesh(mesh, path);
  const Mesh loaded = load_mesh(path);
  CHECK(loaded.vertices == mesh.vertices);
  CHECK(loaded.triangles == mesh.triangles);
  CHECK(loaded.boundary_loop == mesh.boundary_loop);
  CHECK(loaded.perimeter == doctest::Approx(mesh.perimeter).epsilon(1e-15));
  CHECK(loaded.h == doctest::Approx(mesh.h).epsilon(1e-15));
  std::filesystem::remove(path);
}

TEST_CASE("straight linear pullback has machine-zero residual") {
  const Mesh mesh = build_mesh(CrossSection::unit_disc(), 0.1);
  const TwistMap tm{0.0, 0.0};
  CHECK(harmonic_pullback_residual(tm, mesh, linear(1, 0, 0), 0.0) <= 1e-12);
}

TEST_CASE("non-harmonic polynomials are rejected") {
  const Mesh mesh = build_mesh(CrossSection::unit_disc(), 0.3);
  QuadraticPolynomial bad;
  bad.Q(0, 0) = 1.0;  // y1^2, Laplacian 2
  CHECK_THROWS_AS(harmonic_pullback_residual({0.2, 0.0}, mesh, bad, 0.0),
                  std::invalid_argument);
}

TEST_CASE("pullback residual decays at first order for quadratic harmonics") {
  const Mesh coarse = build_mesh(CrossSection::unit_disc(), 0.1);
  const Mesh fine = build_mesh(CrossSection::unit_disc(), 0.05);
  struct Case {
    QuadraticPolynomial v;
    double a;
  };
  const std::vector<Case> cases = {
      {product(0, 2), 0.3},   // y1 y3
      {saddle(0, 1), 0.2},    // y1^2 - y2^2
  };
  for (const auto& c : cases) {
    const double rc = harmonic_pullback_residual({c.a, 0.1}, coarse, c.v, 0.4);
    const double rf = harmonic_pullback_residual({c.a, 0.1}, fine, c.v, 0.4);
    CAPTURE(rc);
    CAPTURE(rf);
    CHECK(rc / rf >= 1.8);
  }
}

TEST_CASE("pullback decay for the full degree-2 harmonic basis at a = 0.5") {
  const Mesh coarse = build_mesh(CrossSection::unit_disc(), 0.1);
  const Mesh fine = build_mesh(CrossSection::unit_disc(), 0.05);
  std::vector<QuadraticPolynomial> basis = {
      linear(1, 0, 0), linear(0, 1, 0), linear(0, 0, 1),
      product(0, 1),   product(0, 2),   product(1, 2),
      saddle(0, 1),    saddle(1, 2)};
  for (size_t i = 0; i < basis.size(); ++i) {
    CAPTURE(i);
    REQUIRE(basis[i].is_harmonic());
    const double rc = harmonic_pullback_residual({0.5, -0.3}, coarse, basis[i], 0.7);
    const double rf = harmonic_pullback_residual({0.5, -0.3}, fine, basis[i], 0.7);
    if (rc <= 1e-12) {
      CHECK(rf <= 1e-12);
    } else {
      CHECK(rc / rf >= 1.8);
    }
  }
}
