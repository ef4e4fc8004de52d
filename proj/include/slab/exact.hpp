#pragma once

#include <array>
#include <map>
#include <vector>

#include "slab/calculus.hpp"
#include "slab/grid.hpp"

namespace slab {

using MultiIndex = std::array<int, 3>;

/// 3/2-homogeneous half-space profile
///   lambda * c_n * Re((y'·e) + i|y_n|)^{3/2},
/// evaluated as r^{3/2} cos(3θ/2) in the (y'·e, |y_n|) half-plane.
/// It vanishes on the ray {y'·e <= 0, y_n = 0} and has nonnegative trace.
struct Profile32 {
  double lambda = 1.0;        // amplitude, >= 0
  std::array<double, 3> e{1.0, 0.0, 0.0};  // tangential unit direction
  double c_n = 1.0;           // normalization, unit L2_mu norm at lambda = 1
};

double eval_profile32_at(const Profile32& p, const std::array<double, 3>& y,
                         int n);
WeightedField eval_profile32(const Profile32& p, const HalfSpaceGrid& g);

/// Unstable half-Laplacian eigenmode Re((y'·e) + i|y_n|)^{1/2}, the
/// 1/2-homogeneous relative of the profile above (not normalized).
double eval_halfmode_at(const std::array<double, 3>& e,
                        const std::array<double, 3>& y, int n);
WeightedField eval_halfmode(const std::array<double, 3>& e,
                            const HalfSpaceGrid& g);

/// Normalization constant making ‖eval_profile32‖_{L²_μ} = 1 at lambda = 1 on
/// the given grid.
double normalize_profile(int n, const HalfSpaceGrid& g);

// ---- Hermite basis ----------------------------------------------------------

/// Physicist Hermite polynomial H_k (H0 = 1, H1 = 2x), via the three-term
/// recurrence H_{k+1} = 2x H_k - 2k H_{k-1}.
double hermite_value(int k, double x);

/// Closed-form normalizer c_α = (2^{|α|} α! π^{n/2} / 2)^{-1/2}, giving
/// ‖p_α‖_{L²_μ(half space)} = 1 for α_n even.
double hermite_normalizer(const MultiIndex& alpha, int n);

double eval_hermite_at(const MultiIndex& alpha, const std::array<double, 3>& y,
                       int n);
WeightedField eval_hermite(const MultiIndex& alpha, const HalfSpaceGrid& g);

/// Linear combination Σ coeffs[α] p_α.
WeightedField assemble_element(const std::map<MultiIndex, double>& coeffs,
                               const HalfSpaceGrid& g);

/// Multi-indices with |α| = degree and α_n even (the symmetry class of the
/// boundary-even eigenfunctions).
std::vector<MultiIndex> even_multi_indices(int degree, int n);

/// All α with |α| <= degree, α_n even.
std::vector<MultiIndex> even_multi_indices_upto(int degree, int n);

// ---- distinguished eigenfunction h_{2m} --------------------------------------

/// Unnormalized h_{2m}:
///   Σ_{j<n} 2^{2m} Re((y_j + i y_n)^{2m})
///   + m! Σ_{l=0}^{m} (-1)^l / ((m-l)! (2l)!) (2 y_n)^{2l}.
double eval_h2m_raw_at(int m, const std::array<double, 3>& y, int n);

/// h_{2m} renormalized to unit L²_μ norm on the grid; returns the field and
/// the computed normalizer C (field = raw / C).
WeightedField eval_h2m(int m, const HalfSpaceGrid& g,
                       const GaussianMeasure& mu, double* C_out = nullptr);

// ---- kernels and homogeneous extension ---------------------------------------

/// Backward heat kernel (-4πt)^{-n/2} e^{|x|²/(4t)} for t < 0, zero for t >= 0.
double eval_kernel(const std::array<double, 3>& x, double t, int n);

/// (√-t)^κ · stationary(x / (2√-t)), multilinear interpolation off-grid.
/// Throws std::domain_error for t >= 0 or points mapping outside the grid.
double homogeneous_extend(const WeightedField& stationary, double kappa,
                          const std::array<double, 3>& x, double t);

}  // namespace slab
