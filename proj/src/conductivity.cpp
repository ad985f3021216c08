#include "twistdn/conductivity.hpp"

#include <cmath>
#include <stdexcept>

namespace twistdn {

Eigen::Matrix3d eval_A0(const Eigen::Vector2d& xp, double t) {
  const double x1 = xp.x(), x2 = xp.y();
  const double t2 = t * t;
  Eigen::Matrix3d A;
  A << 1.0 + x2 * x2 * t2, -x2 * x1 * t2, -x2 * t,
      -x2 * x1 * t2, 1.0 + x1 * x1 * t2, x1 * t,
      -x2 * t, x1 * t, 1.0;
  return A;
}

Eigen::Matrix3d eval_dtA0(const Eigen::Vector2d& xp, double t) {
  const double x1 = xp.x(), x2 = xp.y();
  Eigen::Matrix3d D;
  D << 2.0 * x2 * x2 * t, -2.0 * x2 * x1 * t, -x2,
      -2.0 * x2 * x1 * t, 2.0 * x1 * x1 * t, x1,
      -x2, x1, 0.0;
  return D;
}

Eigen::Matrix2d eval_Atilde(const Eigen::Vector2d& xp, double a) {
  const double x1 = xp.x(), x2 = xp.y();
  const double a2 = a * a;
  Eigen::Matrix2d A;
  A << 1.0 + x2 * x2 * a2, -x2 * x1 * a2,
      -x2 * x1 * a2, 1.0 + x1 * x1 * a2;
  return A;
}

Eigen::Matrix3d eval_Abullet(const Eigen::Vector2d& xp, double t) {
  return t * eval_A0(xp, 1.0);
}

Eigen::Vector3d dtA_eigenvalues(const Eigen::Vector2d& xp, double t) {
  const double r2 = xp.squaredNorm();
  const double s = std::sqrt(r2 * r2 * t * t + r2);
  return {0.0, r2 * t - s, r2 * t + s};
}

Eigen::Vector2d daAtilde_eigenvalues(const Eigen::Vector2d& xp, double a) {
  return {0.0, 2.0 * a * xp.squaredNorm()};
}

double ellipticity_bounds(const Mesh& mesh, double t_min, double t_max) {
  if (!(t_min <= t_max))
    throw std::invalid_argument("ellipticity_bounds: empty t range");
  // A0 = B^T B with B a unit-determinant rank-one update of the identity, so
  // the extreme eigenvalues are 1 + (m^2 +- m sqrt(m^2+4))/2 with
  // m = |t| |x'|, and lambda_min = 1/lambda_max. Both extremes are monotone
  // in m, so the largest sample of |t| |x'| decides the bound.
  double m = 0.0;
  const double tabs = std::max(std::abs(t_min), std::abs(t_max));
  for (int i = 0; i < mesh.num_vertices(); ++i)
    m = std::max(m, tabs * mesh.vertices.row(i).norm());
  return 1.0 + 0.5 * (m * m + m * std::sqrt(m * m + 4.0));
}

double coercivity_constant(double delta, double a) {
  return 1.0 - a * a * delta * delta;
}

double coercivity_constant(const CrossSection& section, double a) {
  return coercivity_constant(section.delta(), a);
}

}  // namespace twistdn
