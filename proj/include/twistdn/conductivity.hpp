#pragma once

#include <Eigen/Core>

#include "twistdn/geometry.hpp"

namespace twistdn {

// Straightened conductivity matrix of the twisted waveguide,
//   A0(x', t) = [ 1 + x2^2 t^2,  -x1 x2 t^2,  -x2 t
//                 -x1 x2 t^2,    1 + x1^2 t^2, x1 t
//                 -x2 t,         x1 t,         1    ].
// Its quadratic form factors as z1^2 + z2^2 + (z3 + t(x2 z1 - x1 z2))^2, so
// it is symmetric positive definite for every (x', t).
Eigen::Matrix3d eval_A0(const Eigen::Vector2d& xp, double t);

// Exact entrywise t-derivative of A0.
Eigen::Matrix3d eval_dtA0(const Eigen::Vector2d& xp, double t);

// Reduced 2x2 matrix of the zero-frequency problem,
// Atilde_a = I + a^2 (x'perp)(x'perp)^T with x'perp = (-x2, x1). Equals the
// upper-left block of A0(x', a); eigenvalues {1, 1 + a^2 |x'|^2}.
Eigen::Matrix2d eval_Atilde(const Eigen::Vector2d& xp, double a);

// Surrogate conductivity linear in t: Abullet(x', t) = t * A0(x', 1).
Eigen::Matrix3d eval_Abullet(const Eigen::Vector2d& xp, double t);

// Closed-form spectrum of dA0/dt at (x', t):
//   { 0,  |x'|^2 t - sqrt(|x'|^4 t^2 + |x'|^2),
//         |x'|^2 t + sqrt(|x'|^4 t^2 + |x'|^2) }.
// The middle eigenvalue is negative for every x' != 0, which is the
// obstruction to monotonicity-based reconstruction for the full matrix.
Eigen::Vector3d dtA_eigenvalues(const Eigen::Vector2d& xp, double t);

// Spectrum {0, 2 a |x'|^2} of dAtilde/da = 2a (x'perp)(x'perp)^T.
Eigen::Vector2d daAtilde_eigenvalues(const Eigen::Vector2d& xp, double a);

// Smallest lambda >= 1 with lambda^{-1}|z|^2 <= A0 z.z <= lambda |z|^2 over
// the mesh vertices and the endpoints of t_range. The extreme eigenvalues of
// A0 are monotone in |x'| |t|, so sampling vertices (which include the
// boundary) is exhaustive up to mesh resolution.
double ellipticity_bounds(const Mesh& mesh, double t_min, double t_max);

// Coercivity margin 1 - a^2 delta^2 of the coupled mode form; positive iff
// |a| < 1/delta.
double coercivity_constant(const CrossSection& section, double a);
double coercivity_constant(double delta, double a);

}  // namespace twistdn
