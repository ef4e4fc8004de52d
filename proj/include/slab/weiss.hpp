#pragma once

#include <array>
#include <string>
#include <vector>

#include "slab/exact.hpp"
#include "slab/operators.hpp"

namespace slab {

/// One diagnostics row per time step. Scalar columns are always present;
/// lambda/e hold the cone projection for κ=3/2 and λ_{2m} plus the {λ_α}
/// block for κ=2m.
struct WeissRow {
  double tau = 0.0;
  double W = 0.0;       // Weiss energy W_κ(ũ)
  double H = 0.0;       // ‖ũ‖²_μ
  double diss = 0.0;    // ‖(U^k - U^{k-1})/Δτ‖²_M over the last step
  double react = 0.0;   // contact work (U̇, ξ); ≤ 0 for the projected scheme
  double lambda = 0.0;  // λ(τ) for κ=3/2, λ_{2m}(τ) for κ=2m
  std::array<double, 3> e{1.0, 0.0, 0.0};  // cone direction (κ=3/2)
  double vnorm2 = 0.0;  // ‖ṽ‖²_μ
  double Wv = 0.0;      // W_κ(ṽ)
  double orth1 = 0.0;   // ⟨ṽ, h_e⟩ residual (κ=3/2)
  double orth2 = 0.0;   // rotational orthogonality residual (κ=3/2, n=3)
  double Wtilde = 0.0;  // forced-adjusted energy W + 4e^{-τ/2}M², = W unforced
  double fnorm = 0.0;   // ‖f̃(·,τ)‖_μ, 0 when unforced
  std::vector<double> lambda_alpha;  // κ=2m coefficients, trace.alphas order
  std::vector<double> balpha;        // ∫ p_α ∂_n ṽ dμ' per α (κ=2m)
};

struct WeissTrace {
  double kappa = 1.5;
  double dtau = 0.0;
  std::vector<MultiIndex> alphas;  // column order of lambda_alpha/balpha
  std::vector<WeissRow> rows;
};

enum class DecayModel { exponential, contraction, logarithmic };

/// Fitted decay law for a Weiss-energy trace.
///   exponential:  W(τ) = W₀ e^{-γ₀ τ}
///   contraction:  per-unit-interval factor (1 - c₀)
///   logarithmic:  W(τ) ≤ C / ((A₀ + c₀τ) |ln(A₀ + c₀τ)|²)
struct DecayFit {
  DecayModel model = DecayModel::exponential;
  double gamma0 = 0.0;
  double c0 = 0.0;
  double C = 0.0;
  double A0 = 0.0;
  double tau_lo = 0.0, tau_hi = 0.0;
  double r2 = 0.0;
  double hold_fraction = 0.0;  // logarithmic model: share of window on bound
  bool degenerate = false;     // trace too small to identify parameters
};

// ---- energies ----------------------------------------------------------------

/// W_κ(ũ) = ¼∫|∇ũ|² dμ - (κ/2)∫ũ² dμ via the FV edge form (the same
/// quadratic form that drives the discrete flow). Fields sampled from
/// gradient-singular profiles carry an O(h^{3/2}) edge error.
double weiss_energy(const WeightedField& u, double kappa, const FvSystem& sys);

/// Weiss energy evaluated in original coordinates on a slice at time t < 0:
///   π^{n/2} ∫ [ (-t)^{1-κ} |∇u|² - (κ/2)(-t)^{-κ} u² ] G(x,t) dx,
/// with the gradient term in FV edge form against the kernel weight.
/// The π^{n/2} factor matches dμ = π^{n/2} G dx, so the value agrees with
/// weiss_energy of the conformal transform.
double weiss_original(const WeightedField& u, double kappa);

// ---- cone / eigenspace projections --------------------------------------------

struct E32Decomposition {
  double lambda = 0.0;
  std::array<double, 3> e{1.0, 0.0, 0.0};
  WeightedField v;
  double orth1 = 0.0;  // ⟨ṽ, h_e⟩_μ
  double orth2 = 0.0;  // λ⟨(3/2)c_n Re((y'·e)+i|y_n|)^{1/2}(y'·ê), ṽ⟩_μ, ê ⊥ e
};

/// Best approximation of ũ by λ h_e with λ ≥ 0 over the profile cone.
/// n=2: candidates e ∈ {+e₁, -e₁}; n=3: 256-direction coarse scan plus
/// golden-section refinement of the angle to 10⁻⁶. Ties break toward the
/// smallest angle. λ clamps to 0 when every correlation is nonpositive.
E32Decomposition project_E32(const WeightedField& u, const FvSystem& sys,
                             double c_n);

/// Warm-started variant: refines around a previous direction only (used for
/// per-step traces); falls back to the full search when hint quality is poor.
E32Decomposition project_E32_local(const WeightedField& u, const FvSystem& sys,
                                   double c_n, const std::array<double, 3>& hint);

struct WeissSplit32 {
  double W_u = 0.0;       // left side
  double W_v = 0.0;       // W(ṽ)
  double boundary = 0.0;  // (λ/2)∫ ũ ∂_n h_e dμ' (analytic ∂_n h_e, collar cut)
  double residual = 0.0;  // W_u - (W_v - boundary)
};

/// Identity W(ũ) = W(ṽ) - (λ/2)∫_{y_n=0} ũ ∂_n h_e dμ', both sides computed
/// independently. ∂_n h_e(y',0) = -(3/2) c_n |y'·e|^{1/2} on {y'·e < 0}; the
/// quadrature skips the one-cell edge collar (O(h^{3/2}) error, documented).
WeissSplit32 weiss_split_32(const WeightedField& u, const E32Decomposition& d,
                            const FvSystem& sys, double c_n);

struct E2mDecomposition {
  std::vector<MultiIndex> alphas;
  std::vector<double> lambda_alpha;
  WeightedField v;
  double orth_residual = 0.0;  // max |⟨ṽ, p_α⟩|
};

E2mDecomposition project_E2m(const WeightedField& u, int m, const FvSystem& sys);

/// λ_{2m} = ⟨ũ, h_{2m}⟩_μ.
double lambda_2m(const WeightedField& u, int m, const FvSystem& sys);

// ---- evolution identities -----------------------------------------------------

struct Evolution2mReport {
  // per interior step k: centered-difference residuals
  std::vector<double> tau;
  std::vector<double> res_lambda;  // max_α |dλ_α/dτ + ¼∫p_α ∂_nṽ dμ'|
  std::vector<double> res_vnorm;   // |½ d‖ṽ‖²/dτ + W(ṽ) - Σ(λ_α/4)∫p_α∂_nṽ|
  std::vector<double> weiss_equal; // |W(ũ) - W(ṽ)| per row
  double min_dlambda2m = 0.0;      // min over steps of dλ_{2m}/dτ
  double max_res_lambda = 0.0;
  double max_res_vnorm = 0.0;
  double max_weiss_equal = 0.0;
};

/// Checks the κ=2m bookkeeping along a trace: the λ_α evolution law, the ṽ
/// energy law, W_{2m}(ũ) = W_{2m}(ṽ) per row, and monotonicity of λ_{2m}.
Evolution2mReport evolution_residuals_2m(const WeissTrace& trace);

// ---- contraction checks and fits ----------------------------------------------

enum class EpiVariant { positive, negative, logarithmic, forced };

struct EpiPair {
  double tau_a = 0.0, tau_b = 0.0;
  double W_a = 0.0, W_b = 0.0;
  double implied_c0 = 0.0;
};

struct EpiReport {
  EpiVariant variant = EpiVariant::positive;
  std::vector<EpiPair> pairs;
  double min_implied_c0 = 0.0;
  bool degenerate = false;   // |W| below floor throughout
  bool mixed_sign = false;   // sign change inside the window
  std::vector<double> sign_change_taus;
};

/// For every unit-separated (τ, τ+1) pair in the trace, the largest c₀
/// making the variant's contraction inequality hold:
///   positive:     W(τ+1) ≤ (1-c₀) W(τ)           (W > 0)
///   negative:     W(τ+1) ≤ (1+c₀) W(τ)           (W < 0)
///   logarithmic:  W(τ+1) ≤ (1 - c₀ W(τ+1)|ln W(τ+1)|²) W(τ)
///   forced:       positive variant on W̃ = W + 4e^{-τ/2}M²
EpiReport epiperimetric_check(const WeissTrace& trace, EpiVariant variant,
                              double floor = 1e-14);

/// Least-squares decay fit on [tau_lo, tau_hi]. Exponential: linear fit of
/// ln W vs τ. Logarithmic: A₀ solves A|ln A|² = 1/W(τ_lo) (exact inversion
/// of w ↦ w|ln w|², which the paper-level A₀ approximates to leading
/// order); c₀ by shape fit on ln W; C = envelope constant, so hold_fraction
/// counts pre-envelope violations of the least-squares shape.
/// Throws std::invalid_argument for windows with <5 samples or nonpositive
/// values under a log-based model.
DecayFit fit_decay(const std::vector<double>& tau, const std::vector<double>& W,
                   DecayModel model, double tau_lo, double tau_hi);

// ---- limits -------------------------------------------------------------------

struct LimitReport {
  bool converged = false;
  double final_diff = 0.0;       // ‖ũ(τ_last) - ũ(τ_prev)‖_μ
  // κ = 3/2
  Profile32 profile;             // λ(∞), e(∞)
  double vrate = 0.0;            // fitted decay rate of ‖ṽ(τ)‖²
  double lrate = 0.0;            // fitted decay rate of |λ(τ)² - λ(∞)²|
  // κ = 2m
  std::vector<MultiIndex> alphas;
  std::vector<double> lambda_alpha;
  double lambda2m_limit = 0.0;
  // Remark-style nontriviality: if W(0) ≤ δ‖ũ(0)‖² and ‖ṽ(0)‖² ≤ δ‖ũ(0)‖²
  // then λ(∞) should exceed ½‖ũ(0)‖.
  bool smallness_hypothesis = false;
  bool nontrivial_limit = false;
  double lambda_inf = 0.0;
  double half_initial_norm = 0.0;
};

/// Least-squares exponential decay rate of a positive series restricted to
/// tau in [lo, hi]; returns 0 when fewer than five admissible points remain.
double fitted_rate(const std::vector<double>& tau,
                   const std::vector<double>& val, double lo, double hi);

LimitReport limit_extraction(const WeissTrace& trace,
                             const std::vector<WeightedField>& snapshots,
                             double kappa, const FvSystem& sys, double c_n,
                             double delta = 0.05, double diff_tol = 1e-4);

// ---- F-calculus ---------------------------------------------------------------

/// F(s) = -1/(s ln²s) - 2∫_{-ln s₀}^{-ln s} e^u/u³ du for 0 < s ≤ s₀ < 1.
double F_log(double s, double s0);
/// F'(s) = 1/(s² |ln s|²).
double F_log_prime(double s);
/// G(w) = w |ln w|².
double G_log(double w);

// ---- serialization ------------------------------------------------------------

/// CSV column order: tau, W, H, diss, react, lambda, e1, e2, e3, vnorm2, Wv,
/// orth1, orth2, Wtilde, fnorm, then lambda_alpha and balpha blocks labeled
/// by multi-index.
void write_trace_csv(const WeissTrace& t, const std::string& path);
WeissTrace read_trace_csv(const std::string& path);

std::string decayfit_json(const DecayFit& f);

}  // namespace slab
