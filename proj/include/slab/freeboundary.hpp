#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "slab/exact.hpp"
#include "slab/grid.hpp"
#include "slab/operators.hpp"
#include "slab/weiss.hpp"

namespace slab {

// ---- space-time fields ---------------------------------------------------------

/// Original-coordinates field u(x, t) on the half space, t < 0, as a callable
/// plus a validity box. The quadratures below integrate it against the
/// backward heat kernel.
struct SpaceTimeField {
  std::function<double(const std::array<double, 3>&, double)> eval;
  int n = 2;
  double tmin = -1.0;  // earliest valid time
};

/// κ-homogeneous extension u(x,t) = (√-t)^κ ũ(x/(2√-t)) of a stationary
/// conformal profile. Points mapping outside the grid are extended radially
/// by κ-homogeneity in y (exact for homogeneous profiles, documented
/// approximation otherwise), so translated centers stay evaluable as t → 0⁻.
SpaceTimeField homogeneous_field(WeightedField stationary, double kappa);

/// Extension following a snapshot sequence ũ(·, τ_k): values interpolate the
/// two bracketing snapshots linearly in τ and extend the first/last snapshot
/// homogeneously beyond the sampled horizon.
SpaceTimeField trajectory_field(std::vector<WeightedField> snapshots,
                                double kappa);

// ---- contact sets --------------------------------------------------------------

/// Contact flags on the boundary slice {y_n = 0} per stored time, with the
/// free boundary Γ as the topological boundary: contact nodes having a
/// non-contact tangential neighbor in the same slice.
struct ContactSet {
  HalfSpaceGrid grid;
  double threshold = 0.0;
  std::vector<double> times;
  std::vector<std::vector<std::uint8_t>> contact;  // [slice][boundary node]
  std::vector<std::vector<std::uint8_t>> gamma;
  std::vector<std::vector<double>> trace;  // boundary values, for subcell use
};

/// Flags |trace| <= threshold. The recommended threshold is ten times the
/// solver's inner residual tolerance (machine scale of the iterate), and is
/// recorded in the result.
ContactSet extract_contact(const std::vector<WeightedField>& slices,
                           double threshold);

// ---- H functional and frequency classification ----------------------------------

struct HCurve {
  std::vector<double> r, H;
};

/// H_u(r) = r^{-2} ∫_{-r²}^{0} ∫ u(x + x₀, t + t₀)² G(x, t) dx dt on a
/// dyadic grid of `decades * points_per_decade` radii descending from r_max.
/// Off-origin centers translate the data; the kernel stays at the origin.
HCurve compute_H(const SpaceTimeField& u, const std::array<double, 3>& x0,
                 double t0, double r_max, int decades,
                 int points_per_decade = 8);

/// LS slope of ln H vs ln r with `trim` points dropped at each end (the
/// smallest radii are resolution-limited, the largest truncation-limited).
/// The frequency estimate is slope / 2.
double fit_H_slope(const HCurve& c, int trim = 2);

enum class PointClass { regular_32, singular_2m, unclassified };

/// Window test on the fitted frequency: regular when |κ - 3/2| < window/2,
/// singular when |κ - 2m| < window/2 for some m >= 1.
PointClass classify_frequency(double kappa_fit, double window, int* m_out);

struct FreeBoundarySample {
  std::array<double, 3> x0{0.0, 0.0, 0.0};
  double t0 = 0.0;
  HCurve curve;
  double kappa_fit = 0.0;
  PointClass cls = PointClass::unclassified;
  int m = 0;                               // matched 2m class
  double c = 0.0;                          // blow-up amplitude (regular)
  std::array<double, 3> e{1.0, 0.0, 0.0};  // blow-up direction (regular)
};

/// H-curve, frequency fit, classification, and for regular points the
/// blow-up amplitude/direction from the cone projection of the rescaling at
/// scale lambda_probe.
FreeBoundarySample analyze_point(const SpaceTimeField& u,
                                 const std::array<double, 3>& x0, double t0,
                                 const FvSystem& sys, double c_n,
                                 double r_max = 0.5, int decades = 2,
                                 double window = 0.4,
                                 double lambda_probe = 0.05);

// ---- blow-up extraction ---------------------------------------------------------

struct BlowupReport {
  std::vector<double> lambda;                // descending ladder
  std::vector<double> c;                     // cone amplitude per λ
  std::vector<std::array<double, 3>> e;      // cone direction per λ
  std::vector<double> profile_dist;          // ‖ũ_λ - c h_e‖_μ per λ
  std::vector<double> succ_diff;             // ‖ũ_{λ_{k+1}} - ũ_{λ_k}‖_μ
  bool stabilized = false;
  double rate = 0.0;  // LS slope of ln profile_dist vs ln λ (0 at round-off)
};

/// Rescales the data at the given center over a descending λ ladder,
/// transforms each rescaling to conformal coordinates at t = -1, and
/// projects on the profile cone. Throws std::domain_error when the center
/// fails the free-boundary precondition (nonzero trace at the center, or no
/// non-contact point on the surrounding ring).
BlowupReport blowup(const SpaceTimeField& u, const std::array<double, 3>& x0,
                    double t0, const std::vector<double>& lambdas,
                    const FvSystem& sys, double c_n, double kappa = 1.5);

// ---- regular free boundary as a graph -------------------------------------------

/// Graph reconstruction over a boundary window (n = 3 only): per column
/// (x₁, t) a single contact-to-noncontact flip located to subcell accuracy,
/// x₂ = g(x₁, t), with ∇″g by centered differences and a parabolic Hölder
/// sweep of the quotients |∇″g(p) - ∇″g(q)| / d(p,q)^θ,
/// d = |x₁ - x₁'| + |t - t'|^{1/2}.
struct GraphReport {
  std::vector<double> x1, t;  // column coordinates with a detected flip
  std::vector<double> g;      // flip location along the graph axis
  std::vector<double> dg;     // ∂g/∂x₁ per column (centered, same slice)
  int multi_flip_columns = 0;
  bool graphical = true;  // every scanned column produced exactly one flip
  std::vector<double> theta;     // Hölder sweep grid
  std::vector<double> quotient;  // sup pair quotient at each θ
};

GraphReport reconstruct_graph(const ContactSet& cs, double x1_lo,
                              double x1_hi);

/// Parabolic Hölder moduli of the blow-up maps p ↦ c(p), p ↦ e(p) over all
/// sample pairs: sup quotients on a θ grid plus a log-log regression
/// estimate of the exponent (clamped to [0, 1]).
struct HolderReport {
  std::vector<double> theta;
  std::vector<double> q_c, q_e;  // sup quotients of |Δc|, |Δe| at each θ
  double theta_hat_c = 0.0;
  double theta_hat_e = 0.0;
};

HolderReport holder_maps(const std::vector<FreeBoundarySample>& samples);

// ---- frequency gap --------------------------------------------------------------

struct GapRow {
  double eps = 0.0;
  bool exact_mode_exists = false;  // Hermite eigenvector exists at 2m ± ε
  double w_err_plus = 0.0;   // max rel err of W₂ₘ trace vs +(ε/2)e^{-ετ}‖v‖²
  double w_err_minus = 0.0;  // max rel err vs -(ε/2)e^{+ετ}‖v‖²
  bool inequality_holds = false;
};

struct GapReport {
  int m = 1;
  double c0 = 0.0;      // measured logarithmic contraction constant
  double ctilde = 0.0;  // c₀ ‖v‖² / 2 at unit ‖v‖
  std::vector<GapRow> rows;
  double eps0 = 0.0;  // smallest ε on a fine scan where the inequality holds
};

/// Synthetic eigen-trajectories ũ = e^{∓ετ/2} v, with v a two-mode Hermite
/// mixture tuned to W_{2m}(v) = ±(ε/2)‖v‖², checked against the closed-form
/// Weiss trace; plus the scalar gap inequality
///   e^{-ε} ≤ 1 - c̃ e^{-ε} ε |-ε + ln ε + ln(c̃/c₀)|²,  c̃ = c₀‖v‖²/2,
/// whose failure at small ε bounds admissible frequencies away from 2m.
/// No exact eigenvector exists at fractional ε (reported per row); the
/// mixture realizes the same Weiss trace.
GapReport frequency_gap_experiment(int m, const std::vector<double>& eps_grid,
                                   const FvSystem& sys, double c0,
                                   double tau_max = 2.0, double dtau = 0.1);

}  // namespace slab
