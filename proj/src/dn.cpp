#include "twistdn/dn.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "twistdn/util.hpp"

namespace twistdn {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
}  // namespace

BoundaryBasis BoundaryBasis::from_mesh(const Mesh& mesh, int K) {
  if (K < 0) throw std::invalid_argument("boundary basis: K must be >= 0");
  const int nb = mesh.num_boundary();
  if (2 * K + 1 > nb)
    throw std::invalid_argument(
        "boundary basis: 2K+1 exceeds the number of boundary nodes");
  BoundaryBasis b;
  b.K = K;
  b.perimeter = mesh.perimeter;
  b.arclengths = mesh.arclength;
  b.trapezoid_weights.resize(nb);
  for (int m = 0; m < nb; ++m) {
    const double s_prev = mesh.arclength[(m + nb - 1) % nb];
    const double s_next = mesh.arclength[(m + 1) % nb];
    const double gap_prev =
        std::fmod(mesh.arclength[m] - s_prev + mesh.perimeter, mesh.perimeter);
    const double gap_next =
        std::fmod(s_next - mesh.arclength[m] + mesh.perimeter, mesh.perimeter);
    b.trapezoid_weights[m] = 0.5 * (gap_prev + gap_next);
  }
  return b;
}

Complex BoundaryBasis::eval(int k, double s) const {
  const double phase = kTwoPi * k * s / perimeter;
  return {std::cos(phase), std::sin(phase)};
}

Eigen::VectorXcd BoundaryBasis::sample(int k) const {
  Eigen::VectorXcd v(num_nodes());
  for (int m = 0; m < num_nodes(); ++m) v(m) = eval(k, arclengths[m]);
  return v;
}

Eigen::MatrixXcd BoundaryBasis::sample_all() const {
  Eigen::MatrixXcd e(num_nodes(), size());
  for (int idx = 0; idx < size(); ++idx) e.col(idx) = sample(mode_of(idx));
  return e;
}

Eigen::MatrixXcd BoundaryBasis::normalized_gram() const {
  const Eigen::MatrixXcd e = sample_all();
  Eigen::VectorXd w(num_nodes());
  for (int m = 0; m < num_nodes(); ++m) w(m) = trapezoid_weights[m];
  return (e.adjoint() * w.asDiagonal() * e) / perimeter;
}

Eigen::VectorXd SobolevWeighting::l2_weights() const {
  Eigen::VectorXd w(2 * K + 1);
  for (int idx = 0; idx < 2 * K + 1; ++idx) {
    const double k = idx - K;
    w(idx) = std::pow(1.0 + k * k, 0.5 * exponent);
  }
  return w;
}

double SobolevWeighting::norm(const Eigen::VectorXcd& coeffs) const {
  if (coeffs.size() != 2 * K + 1)
    throw std::invalid_argument("sobolev norm: coefficient size mismatch");
  return (l2_weights().asDiagonal() * coeffs).norm();
}

std::string to_string(DnVariant v) {
  switch (v) {
    case DnVariant::standard: return "standard";
    case DnVariant::bullet: return "bullet";
    case DnVariant::reduced: return "reduced";
  }
  return "unknown";
}

double DnMatrix::hermitian_residual() const {
  const double denom = std::max(coeffs.norm(), 1e-300);
  return (coeffs - coeffs.adjoint()).norm() / denom;
}

int DnFamily::zero_index() const {
  for (int q = 0; q < num_points(); ++q)
    if (xi[q] == 0.0) return q;
  throw std::runtime_error("dn family: grid does not contain xi = 0");
}

std::vector<double> XiGrid::points() const {
  if (!(step > 0.0) || !(half_width >= 0.0))
    throw std::invalid_argument("xi grid: needs step > 0 and half_width >= 0");
  const int n = static_cast<int>(std::llround(half_width / step));
  std::vector<double> pts;
  pts.reserve(2 * n + 1);
  for (int i = -n; i <= n; ++i) pts.push_back(i * step);
  return pts;
}

DnMatrix dn_mode_matrix(const ModeSystem& system, const BoundaryBasis& basis) {
  const Mesh& mesh = system.mesh();
  if (basis.num_nodes() != mesh.num_boundary() ||
      basis.perimeter != mesh.perimeter)
    throw std::invalid_argument("dn: basis does not match the mesh boundary");

  const Eigen::MatrixXcd data = basis.sample_all();
  const Eigen::MatrixXcd nodal = system.solve_many(data);
  const Eigen::MatrixXcd flux = system.boundary_flux(nodal);

  DnMatrix m;
  m.coeffs = (data.adjoint() * flux) / basis.perimeter;
  m.a = system.a();
  m.xi = system.xi();
  m.variant = system.variant() == ConductivityVariant::bullet
                  ? DnVariant::bullet
                  : (system.xi() == 0.0 ? DnVariant::reduced
                                        : DnVariant::standard);
  m.K = basis.K;
  m.mesh_h = mesh.h;
  m.perimeter = basis.perimeter;
  return m;
}

DnMatrix dn_mode_matrix(const Mesh& mesh, double a, double xi,
                        const BoundaryBasis& basis) {
  ModeSystem system(mesh, a, xi);
  DnMatrix m = dn_mode_matrix(system, basis);
  m.variant = DnVariant::standard;
  return m;
}

DnMatrix dn_reduced_matrix(const Mesh& mesh, double a,
                           const BoundaryBasis& basis) {
  ModeSystem system(mesh, a, 0.0);
  DnMatrix m = dn_mode_matrix(system, basis);
  m.variant = DnVariant::reduced;
  return m;
}

DnMatrix dn_bullet_mode_matrix(const Mesh& mesh, double a, double xi,
                               const BoundaryBasis& basis) {
  ModeSystem system(mesh, a, xi, ConductivityVariant::bullet);
  return dn_mode_matrix(system, basis);
}

DnFamily dn_3d_synthesize(const Mesh& mesh, double a,
                          const BoundaryBasis& basis, double sigma_g,
                          const XiGrid& grid, DnVariant variant, int threads) {
  if (!(sigma_g > 0.0))
    throw std::invalid_argument("synthesize: sigma_g must be positive");
  if (variant == DnVariant::reduced)
    throw std::invalid_argument("synthesize: family variant must be standard or bullet");

  DnFamily fam;
  fam.a = a;
  fam.sigma_g = sigma_g;
  fam.K = basis.K;
  fam.mesh_h = mesh.h;
  fam.variant = variant;
  fam.xi = grid.points();

  // Truncation tail of the profile transform, int_{|xi|>W} ghat over the
  // realized grid extent, must be negligible, and the step must resolve ghat.
  const double realized = fam.xi.back();
  const double tail = 2.0 * std::sqrt(0.5 * kPi) / sigma_g *
                      std::erfc(realized * sigma_g / std::sqrt(2.0));
  if (tail > 1e-8)
    throw std::invalid_argument(
        "synthesize: xi grid too short, profile tail mass " +
        std::to_string(tail) + " exceeds 1e-8");
  if (grid.step > 0.5 / sigma_g)
    throw std::invalid_argument(
        "synthesize: xi step too coarse for the profile width");
  const int np = static_cast<int>(fam.xi.size());
  fam.weights.assign(np, grid.step);
  fam.weights.front() = 0.5 * grid.step;
  fam.weights.back() = 0.5 * grid.step;
  fam.ghat.resize(np);
  for (int q = 0; q < np; ++q)
    fam.ghat[q] = std::exp(-0.5 * sigma_g * sigma_g * fam.xi[q] * fam.xi[q]);

  fam.matrices.assign(np, Eigen::MatrixXcd());
  parallel_for(np, threads, [&](int q) {
    const auto cv = variant == DnVariant::bullet ? ConductivityVariant::bullet
                                                 : ConductivityVariant::standard;
    ModeSystem system(mesh, a, fam.xi[q], cv);
    fam.matrices[q] = dn_mode_matrix(system, basis).coeffs;
  });
  return fam;
}

double operator_norm(const Eigen::MatrixXcd& coeffs) {
  const int n = static_cast<int>(coeffs.rows());
  const int K = (n - 1) / 2;
  const Eigen::VectorXd wout = SobolevWeighting::minus_half(K).l2_weights();
  const Eigen::VectorXd win_inv =
      SobolevWeighting::half(K).l2_weights().cwiseInverse();
  const Eigen::MatrixXcd weighted =
      wout.asDiagonal() * coeffs * win_inv.asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(weighted);
  return svd.singularValues()(0);
}

double operator_norm(const DnMatrix& m) { return operator_norm(m.coeffs); }

namespace {

// Real parameterization of real-valued boundary data: z(0) is the k=0
// coefficient, (z(2k-1), z(2k)) carry mode +-k. Returns the complex
// coefficient map T and the H^{1/2}-orthonormalizing column scales.
void realification(int K, Eigen::MatrixXcd& T, Eigen::VectorXd& scales) {
  const int n = 2 * K + 1;
  T = Eigen::MatrixXcd::Zero(n, n);
  scales.resize(n);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  T(K, 0) = 1.0;
  scales(0) = 1.0;
  for (int k = 1; k <= K; ++k) {
    const double s = std::pow(1.0 + double(k) * k, 0.25);
    T(K + k, 2 * k - 1) = inv_sqrt2;
    T(K + k, 2 * k) = Complex(0.0, inv_sqrt2);
    T(K - k, 2 * k - 1) = inv_sqrt2;
    T(K - k, 2 * k) = Complex(0.0, -inv_sqrt2);
    scales(2 * k - 1) = s;
    scales(2 * k) = s;
  }
}

}  // namespace

double family_operator_norm(const DnFamily& fam) {
  const int K = fam.K;
  const int n = 2 * K + 1;
  Eigen::MatrixXcd T;
  Eigen::VectorXd scales;
  realification(K, T, scales);
  const Eigen::MatrixXcd Tn = T * scales.cwiseInverse().asDiagonal();
  const Eigen::VectorXd wout = SobolevWeighting::minus_half(K).l2_weights();

  // Real 2n x n operators y -> [Re; Im](W_- M_q Tn y) with their quadrature
  // coefficients.
  std::vector<Eigen::MatrixXd> G;
  std::vector<double> c;
  for (int q = 0; q < fam.num_points(); ++q) {
    const double cq = fam.weights[q] * fam.ghat[q];
    if (cq <= 0.0) continue;
    const Eigen::MatrixXcd Cq = wout.asDiagonal() * fam.matrices[q] * Tn;
    Eigen::MatrixXd Gq(2 * n, n);
    Gq.topRows(n) = Cq.real();
    Gq.bottomRows(n) = Cq.imag();
    G.push_back(std::move(Gq));
    c.push_back(cq);
  }
  const int nq = static_cast<int>(G.size());
  if (nq == 0) return 0.0;

  auto objective = [&](const Eigen::VectorXd& y) {
    double J = 0.0;
    for (int q = 0; q < nq; ++q) J += c[q] * (G[q] * y).norm();
    return J;
  };
  auto subgradient = [&](const Eigen::VectorXd& y) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    for (int q = 0; q < nq; ++q) {
      const Eigen::VectorXd v = G[q] * y;
      const double nv = v.norm();
      if (nv > 1e-300) g += (c[q] / nv) * (G[q].transpose() * v);
    }
    return g;
  };

  // Multistart projected subgradient ascent; the objective is convex and
  // 1-homogeneous, so the normalized-gradient step is monotone.
  double best = 0.0;
  for (int start = 0; start < 8; ++start) {
    Eigen::VectorXd y(n);
    if (start == 0) {
      // Deterministic start: top eigenvector of the averaged quadratic form.
      Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
      for (int q = 0; q < nq; ++q) H += c[q] * (G[q].transpose() * G[q]);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
      y = es.eigenvectors().col(n - 1);
    } else {
      Rng rng(9000 + static_cast<std::uint64_t>(start));
      for (int i = 0; i < n; ++i) y(i) = rng.normal();
    }
    y.normalize();
    for (int it = 0; it < 400; ++it) {
      const Eigen::VectorXd g = subgradient(y);
      const double gn = g.norm();
      if (gn <= 1e-300) break;
      Eigen::VectorXd ynew = y + g / gn;
      ynew.normalize();
      if ((ynew - y).norm() < 1e-13) {
        y = ynew;
        break;
      }
      y = ynew;
    }
    best = std::max(best, objective(y));
  }
  return best;
}

DnMatrix dn_difference(const DnMatrix& x, const DnMatrix& y) {
  if (x.K != y.K)
    throw std::invalid_argument("dn difference: basis orders differ");
  DnMatrix d = x;
  d.coeffs = x.coeffs - y.coeffs;
  return d;
}

DnFamily family_difference(const DnFamily& x, const DnFamily& y) {
  if (x.K != y.K || x.xi.size() != y.xi.size() || x.xi != y.xi ||
      x.sigma_g != y.sigma_g)
    throw std::invalid_argument("family difference: grids do not match");
  DnFamily d = x;
  for (int q = 0; q < d.num_points(); ++q) d.matrices[q] -= y.matrices[q];
  return d;
}

double dn_difference_identity_check(const Mesh& mesh, double a1, double a2,
                                    double xi, const BoundaryBasis& basis,
                                    int num_pairs, std::uint64_t seed) {
  ModeSystem s1(mesh, a1, xi), s2(mesh, a2, xi);
  const DnMatrix m1 = dn_mode_matrix(s1, basis);
  const DnMatrix m2 = dn_mode_matrix(s2, basis);
  const Eigen::MatrixXcd e = basis.sample_all();
  const SpMat dK = SpMat(s1.stiffness() - s2.stiffness());
  const double dgamma = s1.gamma() - s2.gamma();
  const double P = basis.perimeter;
  const int n = basis.size();

  Rng rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < num_pairs; ++trial) {
    Eigen::VectorXcd cf(n), cg(n);
    for (int i = 0; i < n; ++i) {
      cf(i) = Complex(rng.normal(), rng.normal());
      cg(i) = Complex(rng.normal(), rng.normal());
    }
    const Eigen::VectorXcd u1 = s1.solve_many(e * cf).col(0);
    const Eigen::VectorXcd u2 = s2.solve_many(e * cg).col(0);

    // <L1 f, g> - <f, L2 g> through the DN matrices.
    const Complex lhs =
        P * (cg.adjoint() * ((m1.coeffs - m2.coeffs.adjoint()) * cf))(0);
    // Volume difference form conj(u2)^T (Q1 - Q2) u1, with u1 in the trial
    // slot (the drift block is antisymmetric, so the order matters).
    const Eigen::VectorXcd u2bar = u2.conjugate();
    const Complex kk = u2bar.transpose() * (dK * u1);
    const Complex ss = u2bar.transpose() * (s1.drift() * u1);
    const Complex rhs = kk - Complex(0.0, dgamma) * ss;

    const double denom =
        std::max({std::abs(lhs), std::abs(rhs), cf.norm() * cg.norm()});
    worst = std::max(worst, std::abs(lhs - rhs) / denom);
  }
  return worst;
}

namespace {

nlohmann::json matrix_parts(const Eigen::MatrixXcd& m) {
  nlohmann::json re = nlohmann::json::array();
  nlohmann::json im = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    nlohmann::json rrow = nlohmann::json::array();
    nlohmann::json irow = nlohmann::json::array();
    for (int j = 0; j < m.cols(); ++j) {
      rrow.push_back(m(i, j).real());
      irow.push_back(m(i, j).imag());
    }
    re.push_back(std::move(rrow));
    im.push_back(std::move(irow));
  }
  return nlohmann::json{{"re", re}, {"im", im}};
}

}  // namespace

std::string dn_matrix_to_json(const DnMatrix& m) {
  nlohmann::json j;
  j["meta"] = {{"a", m.a},
               {"xi", m.xi},
               {"variant", to_string(m.variant)},
               {"K", m.K},
               {"mesh_h", m.mesh_h}};
  const nlohmann::json parts = matrix_parts(m.coeffs);
  j["re"] = parts["re"];
  j["im"] = parts["im"];
  return j.dump(2) + "\n";
}

std::string dn_family_to_json(const DnFamily& fam) {
  nlohmann::json j;
  j["meta"] = {{"a", fam.a},
               {"sigma_g", fam.sigma_g},
               {"variant", to_string(fam.variant)},
               {"K", fam.K},
               {"mesh_h", fam.mesh_h}};
  nlohmann::json members = nlohmann::json::array();
  for (int q = 0; q < fam.num_points(); ++q) {
    nlohmann::json mem = matrix_parts(fam.matrices[q]);
    mem["xi"] = fam.xi[q];
    mem["weight"] = fam.weights[q];
    mem["ghat"] = fam.ghat[q];
    members.push_back(std::move(mem));
  }
  j["members"] = std::move(members);
  return j.dump(2) + "\n";
}

void save_text_atomic(const std::string& text, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + tmp);
    f << text;
  }
  std::filesystem::rename(tmp, path);
}

std::string dn_diagonal_csv(const DnMatrix& m) {
  std::ostringstream out;
  out.precision(17);
  out << "k,re,im\n";
  for (int k = -m.K; k <= m.K; ++k) {
    const Complex d = m.entry(k, k);
    out << k << "," << d.real() << "," << d.imag() << "\n";
  }
  return out.str();
}

}  // namespace twistdn
