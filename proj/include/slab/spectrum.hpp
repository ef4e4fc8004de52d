#pragma once

#include <array>
#include <vector>

namespace slab {

/// Lowest eigenpairs of the Gauss-weighted slit operator -½Δ + y·∇ on the
/// plane minus the ray {y₁ ≤ 0, y₂ = 0} (boundary-even class), computed in
/// square-root coordinates z with y₁ + i|y₂| = (z₁ + i z₂)². The mapped
/// pencil is A u = λ B u with
///   A = finite-volume form of -div(e^{-|z|⁴} ∇·),   B = 8|z|² e^{-|z|⁴} mass,
/// on the quarter grid [0, R_z]², R_z = √R: Dirichlet on {z₁ = 0} (slit,
/// including the tip at the origin) and the outer sides, Neumann on
/// {z₂ = 0} (the positive ray, even reflection).
struct SlitSpectrum {
  int N = 0;        // cells per axis
  double R = 6.0;   // y-plane truncation (R_z = √R)
  double Rz = 0.0;
  double hz = 0.0;
  bool full_plane = false;  // z₂ ∈ [-R_z, R_z] variant (reflection check)
  std::vector<double> lambda;                  // ascending
  std::vector<std::array<double, 2>> nodes;    // free-node coordinates
  std::vector<double> bdiag;                   // B diagonal on free nodes
  std::vector<std::vector<double>> modes;      // B-normalized eigenvectors
};

/// Shift-inverted block iteration (k vectors, B-orthonormalized, Rayleigh-
/// Ritz per sweep) from a deterministic seeded start.
SlitSpectrum solve_slit_spectrum(int N, double R, int k,
                                 bool full_plane = false);

struct SpectrumVerification {
  double corr_ground = 0.0;    // |corr| of mode 0 with the z₁ pullback
  double corr_excited = 0.0;   // |corr| of the gap mode with Re((z₁+iz₂)³)
  double capture_excited = 0.0;  // corr² = weighted-norm share captured
  double max_orth = 0.0;       // max off-diagonal |uᵢᵀ B uⱼ|
  bool monotone = true;        // λ_k nondecreasing
  double b3 = 0.0;  // near-origin fit u ≈ c₁z₁ + b·z₁(z₂² - z₁²/3), reported
  int gap_index = 0;           // index of the mode matched to λ = 3/2
};

/// Mode identification and quality measures. The gap mode is the eigenvector
/// whose λ is closest to 3/2 among the computed ones.
SpectrumVerification verify_eigenspace(const SlitSpectrum& s);

/// Max distance from each quarter-grid eigenvalue to the nearest eigenvalue
/// of the full-plane variant at the same resolution: the Neumann reduction
/// is exact for the even class, so this should vanish to solver tolerance.
double reflection_invariance_gap(int N, double R, int k);

struct ExtrapolationReport {
  std::vector<int> levels;
  std::vector<double> l1, l2;          // per-level λ₁, λ₂
  double lambda1 = 0.0, lambda2 = 0.0; // Richardson over the last pair
  double order1 = 0.0, order2 = 0.0;   // observed convergence order
  double gap = 0.0;                    // lambda2 - lambda1
  bool window_clear = true;  // no eigenvalue in (0.55, 1.45) at finest level
};

/// Solves the pencil on each level (N doubling) and extrapolates assuming
/// the observed algebraic order.
ExtrapolationReport richardson_spectrum(const std::vector<int>& levels,
                                        double R, int k);

/// n = 3 eigenvalue-3/2 family y₁·Re((y₂ + i|y₃|)^{1/2}): max strong-equation
/// residual |(-½Δ + y·∇ - 3/2) u| over grid nodes at least edge_clearance
/// away from the slit edge (centered differences, even reflection at y₃ = 0).
double strong_residual_3d(double R, double h, double edge_clearance = 1.0);

}  // namespace slab
