#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cstdint>
#include <memory>
#include <vector>

#include "slab/calculus.hpp"
#include "slab/grid.hpp"

namespace slab {

/// Finite-volume discretization of the Gaussian-weighted Dirichlet and mass
/// forms on a HalfSpaceGrid, with homogeneous Dirichlet data eliminated on
/// the truncation faces.
///
/// Mass form:       (U, V)_M     = Σ_i  m_i U_i V_i  with m_i the trapezoid
///                                 measure weights.
/// Dirichlet form:  K(U, U)      = Σ_edges c_e (U_i - U_j)²,
///                                 c_e = (transverse trapezoid factors)
///                                       · h^{n-2} · e^{-|y_mid|²}.
/// Energy form:     W_κ(U)       = ¼ K(U,U) - (κ/2)(U,U)_M, the Weiss energy
///                                 of the discrete flow.
///
/// The evolution is the M-gradient flow of W_κ restricted to the constraint
/// set {trace ≥ 0}.
class FvSystem {
 public:
  explicit FvSystem(const HalfSpaceGrid& g);

  const HalfSpaceGrid& grid() const { return grid_; }
  const GaussianMeasure& measure() const { return mu_; }
  const std::vector<std::uint8_t>& dirichlet() const { return dirichlet_; }

  // quadratic forms on full node vectors
  double dirichlet_form(const std::vector<double>& U) const;
  double mass_inner(const std::vector<double>& U,
                    const std::vector<double>& V) const;
  double weiss_form(const std::vector<double>& U, double kappa) const;
  double weiss_cross(const std::vector<double>& U, const std::vector<double>& V,
                     double kappa) const;  // bilinear form U^T A V

  /// (A U)_i = (¼ K U - (κ/2) M U)_i on full node vectors (Dirichlet rows
  /// included; their values participate as data).
  std::vector<double> apply_A(const std::vector<double>& U, double kappa) const;

  // free-dof (non-Dirichlet) numbering
  std::int64_t n_free() const { return static_cast<std::int64_t>(free_nodes_.size()); }
  const std::vector<std::int64_t>& free_nodes() const { return free_nodes_; }
  const std::vector<std::int64_t>& free_of_node() const { return free_of_node_; }
  /// free dofs lying on the constraint plane {y_n = 0}
  const std::vector<std::int64_t>& boundary_free() const { return boundary_free_; }

  Eigen::VectorXd restrict_free(const std::vector<double>& U) const;
  void scatter_free(const Eigen::VectorXd& Uf, std::vector<double>& U) const;

  /// Stiffness matrix K on free dofs (symmetric, positive semidefinite).
  const Eigen::SparseMatrix<double>& K_free() const { return Kff_; }
  /// Mass diagonal on free dofs.
  const Eigen::VectorXd& M_free() const { return Mf_; }

 private:
  HalfSpaceGrid grid_;
  GaussianMeasure mu_;
  std::vector<std::uint8_t> dirichlet_;
  std::vector<std::int64_t> free_of_node_;  // node -> free dof or -1
  std::vector<std::int64_t> free_nodes_;    // free dof -> node
  std::vector<std::int64_t> boundary_free_;

  // edge list (i, j = i + stride(axis), weight)
  std::vector<std::int64_t> edge_i_;
  std::vector<std::int64_t> edge_j_;
  std::vector<double> edge_c_;

  Eigen::SparseMatrix<double> Kff_;
  Eigen::VectorXd Mf_;
};

/// Factorized implicit-Euler operator G = M + Δτ(¼K - (κ/2)M) on free dofs,
/// with the boundary Schur complement S = (G⁻¹)_{bb} for the contact
/// complementarity subproblem. G is positive definite for Δτ < 2/κ.
class ImplicitStepper {
 public:
  ImplicitStepper(const FvSystem& sys, double kappa, double dtau,
                  bool build_schur);

  const FvSystem& system() const { return sys_; }
  double kappa() const { return kappa_; }
  double dtau() const { return dtau_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

  /// Dense Schur complement on the boundary free dofs (throws if not built).
  const Eigen::MatrixXd& schur() const;

 private:
  const FvSystem& sys_;
  double kappa_;
  double dtau_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  Eigen::MatrixXd S_;
  bool has_schur_ = false;
};

}  // namespace slab
