#include "twistdn/fem.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "twistdn/conductivity.hpp"
#include "twistdn/quadrature.hpp"

namespace twistdn {

namespace {

struct Blocks {
  SpMat K, L, M, D;  // D is the raw drift; the caller antisymmetrizes.
};

// P1 assembly with the degree-2 rule, which integrates the quadratic
// reduced-conductivity stiffness, the drift and the mass exactly.
Blocks assemble_blocks(const Mesh& mesh, double t_reduced) {
  const int n = mesh.num_vertices();
  std::vector<Eigen::Triplet<double>> tk, tl, tm, td;
  const auto& quad = tri_quadrature_deg2();

  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const int ids[3] = {mesh.triangles(t, 0), mesh.triangles(t, 1),
                        mesh.triangles(t, 2)};
    const Eigen::Vector2d p0 = mesh.vertices.row(ids[0]).transpose();
    const Eigen::Vector2d p1 = mesh.vertices.row(ids[1]).transpose();
    const Eigen::Vector2d p2 = mesh.vertices.row(ids[2]).transpose();
    const double area =
        0.5 * ((p1 - p0).x() * (p2 - p0).y() - (p2 - p0).x() * (p1 - p0).y());
    if (area <= 0.0)
      throw std::runtime_error("assembly: nonpositive triangle area");

    Eigen::Matrix<double, 2, 3> G;
    G.col(0) << (p1.y() - p2.y()), (p2.x() - p1.x());
    G.col(1) << (p2.y() - p0.y()), (p0.x() - p2.x());
    G.col(2) << (p0.y() - p1.y()), (p1.x() - p0.x());
    G /= 2.0 * area;

    Eigen::Matrix2d Abar = Eigen::Matrix2d::Zero();
    Eigen::Matrix<double, 2, 3> xperp_phi = Eigen::Matrix<double, 2, 3>::Zero();
    for (const auto& qp : quad) {
      const Eigen::Vector2d x = qp.l0 * p0 + qp.l1 * p1 + qp.l2 * p2;
      Abar += qp.w * eval_Atilde(x, t_reduced);
      const Eigen::Vector2d xperp(-x.y(), x.x());
      const double lam[3] = {qp.l0, qp.l1, qp.l2};
      for (int m = 0; m < 3; ++m) xperp_phi.col(m) += qp.w * lam[m] * xperp;
    }

    const Eigen::Matrix3d Ke = area * G.transpose() * Abar * G;
    const Eigen::Matrix3d Le = area * G.transpose() * G;
    Eigen::Matrix3d Me;
    Me << 2, 1, 1, 1, 2, 1, 1, 1, 2;
    Me *= area / 12.0;
    Eigen::Matrix3d De;  // De(m,n) = (int x'perp phi_m) . grad phi_n
    for (int m = 0; m < 3; ++m)
      for (int nn = 0; nn < 3; ++nn)
        De(m, nn) = area * xperp_phi.col(m).dot(G.col(nn));

    for (int m = 0; m < 3; ++m)
      for (int nn = 0; nn < 3; ++nn) {
        tk.emplace_back(ids[m], ids[nn], Ke(m, nn));
        tl.emplace_back(ids[m], ids[nn], Le(m, nn));
        tm.emplace_back(ids[m], ids[nn], Me(m, nn));
        td.emplace_back(ids[m], ids[nn], De(m, nn));
      }
  }

  Blocks b;
  b.K.resize(n, n);
  b.L.resize(n, n);
  b.M.resize(n, n);
  b.D.resize(n, n);
  b.K.setFromTriplets(tk.begin(), tk.end());
  b.L.setFromTriplets(tl.begin(), tl.end());
  b.M.setFromTriplets(tm.begin(), tm.end());
  b.D.setFromTriplets(td.begin(), td.end());
  return b;
}

SpMat restrict_matrix(const SpMat& A, const std::vector<int>& row_map,
                      int nrows, const std::vector<int>& col_map, int ncols) {
  std::vector<Eigen::Triplet<double>> trips;
  for (int k = 0; k < A.outerSize(); ++k) {
    for (SpMat::InnerIterator it(A, k); it; ++it) {
      const int r = row_map[it.row()];
      const int c = col_map[it.col()];
      if (r >= 0 && c >= 0) trips.emplace_back(r, c, it.value());
    }
  }
  SpMat out(nrows, ncols);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

}  // namespace

ModeSystem::ModeSystem(const Mesh& mesh, double a, double xi,
                       ConductivityVariant variant)
    : mesh_(&mesh), a_(a), xi_(xi), variant_(variant) {
  const double delta = mesh.max_vertex_radius();
  double t_reduced;
  if (variant == ConductivityVariant::standard) {
    margin_ = 1.0 - a * a * delta * delta;
    if (margin_ <= 0.0)
      throw std::domain_error(
          "mode system: |a| delta >= 1 (margin 1 - a^2 delta^2 = " +
          std::to_string(margin_) + "), the coupled form is no longer "
          "guaranteed coercive; refusing to assemble");
    t_reduced = a;
    alpha_ = 1.0;
    beta_ = xi * xi;
    gamma_ = 2.0 * a * xi;
  } else {
    if (!(a > 0.0))
      throw std::domain_error(
          "bullet mode system: needs a > 0 for positive definiteness");
    margin_ = 1.0 - delta * delta;
    if (margin_ <= 0.0)
      throw std::domain_error(
          "bullet mode system: delta >= 1 (margin 1 - delta^2 = " +
          std::to_string(margin_) +
          "); scale the section so that delta < 1");
    t_reduced = 1.0;
    alpha_ = a;
    beta_ = a * xi * xi;
    gamma_ = 2.0 * a * xi;
  }

  // K stays unscaled (variant scale lives in alpha).
  Blocks blocks = assemble_blocks(mesh, t_reduced);
  K_ = std::move(blocks.K);
  L_ = std::move(blocks.L);
  M_ = std::move(blocks.M);
  SpMat Dt = SpMat(blocks.D.transpose());
  S_ = 0.5 * (blocks.D - Dt);

  const auto flags = mesh.boundary_flags();
  full_to_int_.assign(mesh.num_vertices(), -1);
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (!flags[v]) {
      full_to_int_[v] = static_cast<int>(interior_.size());
      interior_.push_back(v);
    }
  }
  const int ni = num_interior();
  std::vector<int> col_map_boundary(mesh.num_vertices(), -1);
  for (int m = 0; m < mesh.num_boundary(); ++m)
    col_map_boundary[mesh.boundary_loop[m]] = m;

  K_ii_ = restrict_matrix(K_, full_to_int_, ni, full_to_int_, ni);
  M_ii_ = restrict_matrix(M_, full_to_int_, ni, full_to_int_, ni);
  S_ii_ = restrict_matrix(S_, full_to_int_, ni, full_to_int_, ni);
  K_ib_ = restrict_matrix(K_, full_to_int_, ni, col_map_boundary,
                          mesh.num_boundary());
  M_ib_ = restrict_matrix(M_, full_to_int_, ni, col_map_boundary,
                          mesh.num_boundary());
  S_ib_ = restrict_matrix(S_, full_to_int_, ni, col_map_boundary,
                          mesh.num_boundary());

  // Coupled real system [[A, gamma S],[-gamma S, A]], A = alpha K + beta M.
  std::vector<Eigen::Triplet<double>> trips;
  auto add_block = [&](const SpMat& B, double scale, int roff, int coff) {
    if (scale == 0.0) return;
    for (int k = 0; k < B.outerSize(); ++k)
      for (SpMat::InnerIterator it(B, k); it; ++it)
        trips.emplace_back(static_cast<int>(it.row()) + roff,
                           static_cast<int>(it.col()) + coff,
                           scale * it.value());
  };
  add_block(K_ii_, alpha_, 0, 0);
  add_block(M_ii_, beta_, 0, 0);
  add_block(K_ii_, alpha_, ni, ni);
  add_block(M_ii_, beta_, ni, ni);
  add_block(S_ii_, gamma_, 0, ni);
  add_block(S_ii_, -gamma_, ni, 0);
  coupled_.resize(2 * ni, 2 * ni);
  coupled_.setFromTriplets(trips.begin(), trips.end());
  ldlt_.compute(coupled_);
  if (ldlt_.info() != Eigen::Success)
    throw std::runtime_error(
        "mode system: sparse factorization failed (coercivity margin " +
        std::to_string(margin_) + ")");
}

Eigen::MatrixXd ModeSystem::solve_coupled(const Eigen::MatrixXd& rhs) const {
  Eigen::MatrixXd z = ldlt_.solve(rhs);
  // One step of iterative refinement; then verify the relative residual.
  Eigen::MatrixXd r = rhs - coupled_ * z;
  z += ldlt_.solve(r);
  r = rhs - coupled_ * z;
  const double bnorm = rhs.norm();
  if (bnorm > 0.0 && r.norm() > 1e-10 * bnorm)
    throw std::runtime_error(
        "mode solve: relative residual " + std::to_string(r.norm() / bnorm) +
        " exceeds 1e-10; system likely near-singular (coercivity margin " +
        std::to_string(margin_) + ")");
  return z;
}

Eigen::MatrixXcd ModeSystem::solve_many(const Eigen::MatrixXcd& data) const {
  const int nb = mesh_->num_boundary();
  if (data.rows() != nb)
    throw std::invalid_argument("solve_many: data rows must match boundary size");
  if (!data.allFinite())
    throw std::invalid_argument("solve_many: boundary data must be finite");
  const int cols = static_cast<int>(data.cols());
  const int ni = num_interior();

  const Eigen::MatrixXd br = data.real(), bi = data.imag();
  // rhs = -(Q_ib u_b); real part -(alpha K + beta M) br - gamma S bi,
  // imaginary part -(alpha K + beta M) bi + gamma S br. The gamma terms are
  // skipped when zero so that a and -a runs stay bit-identical at xi = 0
  // (gamma = 2 a xi carries the sign of a into a signed zero).
  Eigen::MatrixXd rhs(2 * ni, cols);
  rhs.topRows(ni) = -(alpha_ * (K_ib_ * br) + beta_ * (M_ib_ * br));
  rhs.bottomRows(ni) = -(alpha_ * (K_ib_ * bi) + beta_ * (M_ib_ * bi));
  if (gamma_ != 0.0) {
    rhs.topRows(ni) -= gamma_ * (S_ib_ * bi);
    rhs.bottomRows(ni) += gamma_ * (S_ib_ * br);
  }

  const Eigen::MatrixXd z = solve_coupled(rhs);

  Eigen::MatrixXcd nodal = Eigen::MatrixXcd::Zero(mesh_->num_vertices(), cols);
  for (int c = 0; c < cols; ++c) {
    for (int m = 0; m < nb; ++m) nodal(mesh_->boundary_loop[m], c) = data(m, c);
    for (int i = 0; i < ni; ++i)
      nodal(interior_[i], c) = Complex(z(i, c), z(ni + i, c));
  }
  return nodal;
}

Eigen::MatrixXcd ModeSystem::boundary_flux(const Eigen::MatrixXcd& nodal) const {
  const Eigen::MatrixXd ur = nodal.real(), ui = nodal.imag();
  Eigen::MatrixXd yr = alpha_ * (K_ * ur) + beta_ * (M_ * ur);
  Eigen::MatrixXd yi = alpha_ * (K_ * ui) + beta_ * (M_ * ui);
  if (gamma_ != 0.0) {
    yr += gamma_ * (S_ * ui);
    yi -= gamma_ * (S_ * ur);
  }
  const int nb = mesh_->num_boundary();
  Eigen::MatrixXcd flux(nb, nodal.cols());
  for (int m = 0; m < nb; ++m) {
    const int v = mesh_->boundary_loop[m];
    flux.row(m) = (yr.row(v) + Complex(0, 1) * yi.row(v));
  }
  return flux;
}

Complex ModeSystem::energy_pairing(const Eigen::VectorXcd& u,
                                   const Eigen::VectorXcd& v) const {
  // B(u, conj v) with u in the trial slot and conj(v) in the test slot; the
  // drift block is antisymmetric, so the slot order matters.
  const Eigen::VectorXcd vbar = v.conjugate();
  const Complex kk = vbar.transpose() * (K_ * u);
  const Complex mm = vbar.transpose() * (M_ * u);
  const Complex ss = vbar.transpose() * (S_ * u);
  return alpha_ * kk + beta_ * mm - Complex(0, gamma_) * ss;
}

ModeSystem assemble_mode_system(const Mesh& mesh, double a, double xi) {
  return ModeSystem(mesh, a, xi);
}

ModeSolution solve_mode(const ModeSystem& system,
                        const Eigen::VectorXcd& boundary_data) {
  ModeSolution sol;
  sol.mesh = &system.mesh();
  sol.a = system.a();
  sol.xi = system.xi();
  sol.boundary_data = boundary_data;
  sol.nodal = system.solve_many(boundary_data).col(0);
  return sol;
}

P1Matrices assemble_p1_matrices(const Mesh& mesh) {
  Blocks b = assemble_blocks(mesh, 0.0);
  return {std::move(b.L), std::move(b.M)};
}

double h1_norm(const ModeSolution& sol) {
  const P1Matrices p = assemble_p1_matrices(*sol.mesh);
  const Complex q =
      sol.nodal.adjoint() * (p.plain_stiffness * sol.nodal);
  return std::sqrt(std::max(0.0, q.real()));
}

double l2_norm(const ModeSolution& sol) {
  const P1Matrices p = assemble_p1_matrices(*sol.mesh);
  const Complex q = sol.nodal.adjoint() * (p.mass * sol.nodal);
  return std::sqrt(std::max(0.0, q.real()));
}

}  // namespace twistdn
