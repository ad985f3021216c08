#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <complex>

#include "twistdn/geometry.hpp"

namespace twistdn {

using Complex = std::complex<double>;
using SpMat = Eigen::SparseMatrix<double>;

enum class ConductivityVariant { standard, bullet };

// P1 discretization of the per-mode problem at twist rate a and frequency
// xi. The complex operator is Q = alpha K + beta M - i gamma S, where K is
// the reduced-conductivity stiffness, M the mass, and S the exactly
// antisymmetrized drift
//   S_mn = 1/2 int [ (x'perp . grad phi_n) phi_m - phi_n (x'perp . grad phi_m) ].
// Dirichlet values are imposed strongly; the interior problem is solved as
// the coupled real 2N system [[A, gamma S],[-gamma S, A]], which is
// symmetric positive definite with margin 1 - a^2 delta^2 and is factored
// once so that many boundary data columns reuse the factorization.
class ModeSystem {
 public:
  ModeSystem(const Mesh& mesh, double a, double xi,
             ConductivityVariant variant = ConductivityVariant::standard);

  ModeSystem(const ModeSystem&) = delete;
  ModeSystem& operator=(const ModeSystem&) = delete;

  const Mesh& mesh() const { return *mesh_; }
  double a() const { return a_; }
  double xi() const { return xi_; }
  ConductivityVariant variant() const { return variant_; }
  double coercivity_margin() const { return margin_; }
  int num_interior() const { return static_cast<int>(interior_.size()); }

  // Q = alpha K + beta M - i gamma S on the full vertex set.
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double gamma() const { return gamma_; }
  const SpMat& stiffness() const { return K_; }
  const SpMat& mass() const { return M_; }
  const SpMat& drift() const { return S_; }
  const SpMat& plain_stiffness() const { return L_; }

  // Solves the Dirichlet problem for each column of `data` (complex values
  // at the boundary loop positions). Returns full nodal vectors, boundary
  // rows holding the data exactly. Throws std::runtime_error on solver
  // breakdown.
  Eigen::MatrixXcd solve_many(const Eigen::MatrixXcd& data) const;

  // Weak conormal flux functionals at the boundary loop positions:
  // F_m = (Q u)_{loop[m]}, i.e. the flux paired against the boundary hat
  // functions. Never computed by pointwise normal differencing.
  Eigen::MatrixXcd boundary_flux(const Eigen::MatrixXcd& nodal) const;

  // Sesquilinear energy pairing B(u, conj v) for full nodal vectors, with u
  // in the trial slot; used by the operator identity checks.
  Complex energy_pairing(const Eigen::VectorXcd& u,
                         const Eigen::VectorXcd& v) const;

 private:
  const Mesh* mesh_;
  double a_, xi_;
  ConductivityVariant variant_;
  double alpha_, beta_, gamma_, margin_;
  SpMat K_, L_, M_, S_;
  std::vector<int> interior_;      // interior vertex ids
  std::vector<int> full_to_int_;   // -1 for boundary vertices
  SpMat K_ii_, M_ii_, S_ii_, K_ib_, M_ib_, S_ib_;
  SpMat coupled_;
  Eigen::SimplicialLDLT<SpMat> ldlt_;

  Eigen::MatrixXd solve_coupled(const Eigen::MatrixXd& rhs) const;
};

struct ModeSolution {
  const Mesh* mesh = nullptr;
  double a = 0.0;
  double xi = 0.0;
  Eigen::VectorXcd nodal;          // size num_vertices()
  Eigen::VectorXcd boundary_data;  // at boundary loop positions
};

ModeSystem assemble_mode_system(const Mesh& mesh, double a, double xi);

ModeSolution solve_mode(const ModeSystem& system,
                        const Eigen::VectorXcd& boundary_data);

// Discrete H1 seminorm sqrt(int |grad u|^2) — the norm of the coupled-form
// estimates — and the L2 norm.
double h1_norm(const ModeSolution& sol);
double l2_norm(const ModeSolution& sol);

// P1 matrices of a mesh, independent of the mode parameters.
struct P1Matrices {
  SpMat plain_stiffness;  // int grad.grad
  SpMat mass;             // int phi phi
};
P1Matrices assemble_p1_matrices(const Mesh& mesh);

}  // namespace twistdn
