#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "twistdn/fem.hpp"
#include "twistdn/geometry.hpp"

namespace twistdn {

// Truncated Fourier basis e_k(s) = exp(2 pi i k s / perimeter) in boundary
// arclength, |k| <= K, sampled at the boundary nodes of a mesh.
struct BoundaryBasis {
  int K = 8;
  double perimeter = 0.0;
  std::vector<double> arclengths;        // boundary node arclengths, loop order
  std::vector<double> trapezoid_weights; // closed-curve trapezoid weights

  static BoundaryBasis from_mesh(const Mesh& mesh, int K);

  int size() const { return 2 * K + 1; }
  int index_of(int k) const { return k + K; }
  int mode_of(int idx) const { return idx - K; }
  int num_nodes() const { return static_cast<int>(arclengths.size()); }

  Complex eval(int k, double s) const;
  Eigen::VectorXcd sample(int k) const;  // nodal samples of e_k
  Eigen::MatrixXcd sample_all() const;   // num_nodes x size()

  // Gram matrix under trapezoid quadrature, normalized by the perimeter;
  // close to the identity for quasi-uniform boundary nodes.
  Eigen::MatrixXcd normalized_gram() const;
};

// Weighted-Fourier realization of the H^s boundary norms:
// ||sum c_k e_k||_{H^s}^2 = sum (1+k^2)^s |c_k|^2, s = +-1/2.
struct SobolevWeighting {
  double exponent = 0.5;
  int K = 0;

  static SobolevWeighting half(int K) { return {0.5, K}; }
  static SobolevWeighting minus_half(int K) { return {-0.5, K}; }

  // Per-index l2 weights (1+k^2)^{exponent/2}.
  Eigen::VectorXd l2_weights() const;
  double norm(const Eigen::VectorXcd& coeffs) const;
};

enum class DnVariant { standard, bullet, reduced };

std::string to_string(DnVariant v);

// DN operator on the truncated boundary Fourier basis. Column j holds the
// Fourier coefficients of the weak conormal flux for boundary datum
// e_{j-K}. The coefficients are extracted by the energy pairing against
// lifted basis functions, which makes the matrix Hermitian up to the solver
// residual; for the disc it is diagonal up to discretization error.
struct DnMatrix {
  Eigen::MatrixXcd coeffs;
  double a = 0.0;
  double xi = 0.0;
  DnVariant variant = DnVariant::standard;
  int K = 0;
  double mesh_h = 0.0;
  double perimeter = 0.0;

  int size() const { return 2 * K + 1; }
  Eigen::VectorXcd diagonal() const { return coeffs.diagonal(); }
  Complex entry(int k, int j) const { return coeffs(k + K, j + K); }

  // || M - M^H || / max(||M||, eps): the discrete self-adjointness defect
  // of the DN map under the boundary duality pairing.
  double hermitian_residual() const;
};

// DN matrices of the mode family over a symmetric xi grid, together with
// trapezoid weights and the Fourier transform of the profile g. Represents
// f -> flux of the cylinder problem with data g(x3) f(s).
struct DnFamily {
  double a = 0.0;
  double sigma_g = 1.0;
  int K = 0;
  double mesh_h = 0.0;
  DnVariant variant = DnVariant::standard;
  std::vector<double> xi;
  std::vector<double> weights;
  std::vector<double> ghat;
  std::vector<Eigen::MatrixXcd> matrices;

  int num_points() const { return static_cast<int>(xi.size()); }
  int zero_index() const;  // index of xi == 0
};

// Symmetric uniform grid {i * step : |i| <= round(half_width/step)}.
struct XiGrid {
  double half_width = 8.0;
  double step = 0.25;

  std::vector<double> points() const;
};

DnMatrix dn_mode_matrix(const ModeSystem& system, const BoundaryBasis& basis);
DnMatrix dn_mode_matrix(const Mesh& mesh, double a, double xi,
                        const BoundaryBasis& basis);

// The reduced map (xi = 0); depends on a only through a^2, so it is
// bit-for-bit even in a.
DnMatrix dn_reduced_matrix(const Mesh& mesh, double a,
                           const BoundaryBasis& basis);

// DN map of the surrogate conductivity a * A0(x', 1); homogeneous of degree
// one in a at fixed xi. Requires a > 0 and max |x'| < 1.
DnMatrix dn_bullet_mode_matrix(const Mesh& mesh, double a, double xi,
                               const BoundaryBasis& basis);

// Mode family over the xi grid weighted by ghat(xi) = exp(-sigma_g^2 xi^2/2)
// (unit-mass Gaussian profile). Throws when the grid truncation tail exceeds
// 1e-8 or the step is too coarse for the profile.
DnFamily dn_3d_synthesize(const Mesh& mesh, double a,
                          const BoundaryBasis& basis, double sigma_g,
                          const XiGrid& grid,
                          DnVariant variant = DnVariant::standard,
                          int threads = 0);

// Largest singular value of W_out M W_in^{-1}: the operator norm
// H^{1/2} -> H^{-1/2} in the weighted-Fourier norms.
double operator_norm(const DnMatrix& m);
double operator_norm(const Eigen::MatrixXcd& coeffs);

// sup over real boundary data of unit H^{1/2} norm of the xi-quadrature of
// ghat(xi) ||M(xi) f||_{H^{-1/2}}, by projected subgradient ascent on the
// (2K+1)-sphere with 8 deterministic multistarts.
double family_operator_norm(const DnFamily& fam);

DnMatrix dn_difference(const DnMatrix& x, const DnMatrix& y);
DnFamily family_difference(const DnFamily& x, const DnFamily& y);

// Checks the exact discrete difference identity: for random basis data f, g,
//   <L1 f, g> - <f, L2 g> = u1^T (Q1 - Q2) conj(u2),
// the left side evaluated through the DN matrices and the right side through
// the assembled volume difference form. Returns the max relative discrepancy
// over `num_pairs` seeded draws.
double dn_difference_identity_check(const Mesh& mesh, double a1, double a2,
                                    double xi, const BoundaryBasis& basis,
                                    int num_pairs = 20,
                                    std::uint64_t seed = 2024);

// JSON export: {meta:{a,xi,variant,K,mesh_h}, re:[[..]], im:[[..]]};
// families as member arrays with quadrature weights. CSV export of the
// diagonal entries (k, re, im).
std::string dn_matrix_to_json(const DnMatrix& m);
std::string dn_family_to_json(const DnFamily& fam);
void save_text_atomic(const std::string& text, const std::string& path);
std::string dn_diagonal_csv(const DnMatrix& m);

}  // namespace twistdn
