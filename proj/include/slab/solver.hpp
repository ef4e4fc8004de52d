#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "slab/conformal.hpp"
#include "slab/operators.hpp"
#include "slab/weiss.hpp"

namespace slab {

enum class Scheme { penalized, projected };

/// Boundary penalty profile: 0 for s ≥ 0, ε + s/ε for s ≤ -2ε², and the
/// fixed C² monotone bridge ε σ³(σ - 2), σ = s/(-2ε²), in between.
double beta_eps(double s, double eps);
double beta_eps_prime(double s, double eps);

struct SolverConfig {
  ConformalFrame frame;             // κ, τ_max, Δτ
  Scheme scheme = Scheme::projected;
  double epsilon = 1e-2;            // penalty scale (penalized only)
  double tol = 1e-10;               // inner iteration residual tolerance
  int max_inner = 50000;            // inner iteration cap
  double omega = 1.5;               // projected Gauss-Seidel over-relaxation
  int snapshot_stride = 50;         // steps between stored snapshots
  // Inhomogeneity f̃(y, τ); the equation's right side is e^{τ(κ/2-1)} f̃.
  std::function<double(const std::array<double, 3>&, double)> forcing;
  double forcing_bound = 0.0;       // M = sup_τ ‖f̃(·,τ)‖_μ (for W̃)
};

struct SolverState {
  WeightedField u;       // current field (u.tau = current τ)
  WeightedField prev;    // previous step (for backward ∂_τ)
  int step_index = 0;
  double min_trace = 0.0;       // diagnostic: min of boundary trace
  double react_work = 0.0;      // (U̇, ξ) of the last step
  int last_inner_iters = 0;
  bool trace_was_clipped = false;  // projected init clipped negative trace
  std::vector<double> xi;       // contact multipliers (warm start carrier)
};

struct Trajectory {
  std::vector<WeightedField> snapshots;
  WeissTrace trace;
  SolverState final_state;
};

/// One-scheme evolution driver. Holds the factorized implicit operator and
/// (projected scheme) the boundary Schur complement; one instance per
/// configuration.
class SignoriniSolver {
 public:
  SignoriniSolver(const FvSystem& sys, const SolverConfig& cfg);

  const FvSystem& system() const { return sys_; }
  const SolverConfig& config() const { return cfg_; }

  /// Prepares the initial state; for the projected scheme a negative
  /// boundary trace is clipped to 0 (flagged in the state).
  SolverState init(const WeightedField& initial) const;

  /// One implicit Euler step. Throws std::runtime_error on inner-iteration
  /// failure or NaN.
  void step(SolverState& st) const;

  /// Runs until τ_max, recording diagnostics per step and snapshots at the
  /// configured stride (plus the final field).
  Trajectory solve_trajectory(const WeightedField& initial) const;

  /// sup over sampled τ of ‖f̃(·,τ)‖_μ by quadrature (0 if no forcing).
  double forcing_sup(double tau_lo, double tau_hi, int samples) const;

 private:
  const FvSystem& sys_;
  SolverConfig cfg_;
  ImplicitStepper stepper_;
  double c_n_ = 0.0;  // profile normalizer for κ=3/2 diagnostics
  int m_ = 0;         // κ = 2m when m_ > 0
  std::vector<WeightedField> p_basis_;     // p_α, |α| = 2m, α_n even
  std::vector<MultiIndex> alphas_;
  WeightedField h2m_;

  void step_projected(SolverState& st) const;
  void step_penalized(SolverState& st) const;
  Eigen::VectorXd step_rhs(const SolverState& st) const;
  void fill_row(const SolverState& st, WeissRow& row) const;
};

/// max over τ of ‖u_pen(τ) - u_proj(τ)‖_{L²_μ} for the two schemes started
/// from the same data.
double cross_validate(const WeightedField& initial, const FvSystem& sys,
                      SolverConfig cfg_pen, SolverConfig cfg_proj);

/// (max violation of ũ ≥ 0, max violation of ∂_n ũ ≤ 0, max |ũ ∂_n ũ|) on
/// {y_n = 0}, with the one-sided normal stencil.
std::array<double, 3> residual_complementarity(const WeightedField& u);

}  // namespace slab
