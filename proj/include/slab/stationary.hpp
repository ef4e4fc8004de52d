#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "slab/operators.hpp"

namespace slab {

struct EigenPair {
  WeightedField mode;  // ‖mode‖_μ = 1, zero on pinned and Dirichlet nodes
  double nu = 0.0;     // generalized eigenvalue of A ψ = ν M ψ
};

/// Eigenpair of the energy operator A = ¼K - (κ/2)M nearest `shift`, with
/// the listed nodes pinned to zero in addition to the truncation faces.
/// Shift-inverted inverse iteration with a sparse LU of (A - shift·M); the
/// start vector is deterministic (the given field, or all-ones).
EigenPair eigenpair_near(const FvSystem& sys, double kappa, double shift,
                         const std::vector<std::uint8_t>& pinned,
                         const WeightedField* start = nullptr, int iters = 80);

/// Modes of the slit-pinned κ=3/2 operator (trace fixed to zero on
/// {y'·e ≤ 0, y_n = 0}):
///   psi0 — near-kernel mode, the discrete relaxation of h_e,
///   phi  — unstable mode near ν = -1/2, the discrete 1/2-homogeneous slit
///          eigenfunction that admissible perturbation seeds must avoid.
struct SlitModes {
  EigenPair psi0;
  EigenPair phi;
  bool admissible = false;   // psi0 trace ≥ -tol off the slit, reaction ≥ -tol
  double min_trace = 0.0;    // min of psi0 trace off the slit
  double min_reaction = 0.0; // min of (A psi0) on the slit
};

SlitModes slit_modes(const FvSystem& sys, const std::array<double, 3>& e,
                     double kappa = 1.5);

/// Mask pinning the slit {y'·e ≤ 0, y_n = 0}.
std::vector<std::uint8_t> slit_mask(const HalfSpaceGrid& g,
                                    const std::array<double, 3>& e);

}  // namespace slab
