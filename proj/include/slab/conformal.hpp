#pragma once

#include <vector>

#include "slab/grid.hpp"

namespace slab {

/// Self-similar time frame: homogeneity κ, horizon τ_max, step Δτ.
struct ConformalFrame {
  double kappa = 1.5;
  double tau_max = 6.0;
  double dtau = 0.02;
};

/// ũ_κ(y, τ) = e^{τκ/2} u(2 e^{-τ/2} y, t), τ = -ln(-t), from an
/// original-coordinates field u stamped with its time t ∈ [-1, 0).
/// Throws std::domain_error if t >= 0 or a target node maps outside u's grid.
WeightedField to_selfsimilar(const WeightedField& u, double kappa,
                             const HalfSpaceGrid& target);

/// Inverse map: u(x, t) = (√-t)^κ ũ(x / (2√-t)) at t = -e^{-τ}, stamped t.
WeightedField from_selfsimilar(const WeightedField& utilde, double kappa,
                               const HalfSpaceGrid& target);

/// Parabolic rescaling u_λ(x, t) = u(λx, λ²t) / λ^κ of an
/// original-coordinates field; the output is stamped t/λ² and sampled on the
/// same grid. λ ∈ (0, 1] so sample points stay inside the grid.
WeightedField rescale(const WeightedField& u, double lambda, double kappa);

/// One row of a Weiss-energy time series (full definition with the
/// diagnostics module; declared here for the shift-identity check).
struct WeissSample {
  double tau = 0.0;
  double W = 0.0;
};

/// max_τ |W(τ - 2 ln λ) - W_λ(τ)| over the overlap of the two series, where
/// `shifted` is the trace of the λ-rescaled trajectory. Uses linear
/// interpolation in τ. Throws std::invalid_argument if the overlap is empty.
double weiss_shift_identity_check(const std::vector<WeissSample>& base,
                                  const std::vector<WeissSample>& shifted,
                                  double lambda);

}  // namespace slab
