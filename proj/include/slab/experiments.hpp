#pragma once

#include <string>
#include <utility>
#include <vector>

#include "slab/io.hpp"
#include "slab/io/rng.hpp"
#include "slab/operators.hpp"
#include "slab/solver.hpp"

namespace slab {

/// One named quantitative check: `pass` states whether `measured` satisfies
/// `relation` against `bound` (e.g. "<=", ">=", "true").
struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double bound = 0.0;
  std::string relation = "<=";
  std::string note;
};

/// Outcome of one experiment run: the resolved configuration, the check
/// list, and the artifact manifest (relative path, sha256). Artifacts are
/// deterministic for a fixed configuration, so reruns hash identically.
struct RunReport {
  std::string experiment;
  TomlMap config;
  std::vector<CheckResult> checks;
  std::vector<std::pair<std::string, std::string>> artifacts;

  bool ok() const;
  const CheckResult* find(const std::string& name) const;
};

// ---- seeded initial data ---------------------------------------------------------

/// General-position admissible data: a randomly scaled and oriented profile
/// plus interior bumps with an exact zero boundary trace, so the constraint
/// trace ≥ 0 is inherited from the profile term.
WeightedField random_admissible_seed(const FvSystem& sys, double c_n, Rng& rng);

/// Unstable direction of the discrete constrained flow at the 3/2 profile
/// with direction e, extracted from the dynamics: evolve a small analytic
/// half-mode kick past the transient and normalize what the flow amplifies.
/// The active set of the discrete equilibrium differs from the sampled
/// profile's zero set at the slit edge, so this direction is the one seed
/// cleaning must remove; the analytic sample is only its leading-order
/// approximation.
WeightedField flow_unstable_direction(const FvSystem& sys, double c_n,
                                      const std::array<double, 3>& e,
                                      double dtau = 0.02);

/// Admissible perturbation of the unit profile satisfying the smallness
/// hypothesis with margin: W(u₀) ≤ margin·δ·H(u₀) and ‖ṽ(u₀)‖² ≤
/// margin·δ·H(u₀). The bump's unstable-mode component is removed with the
/// sign convention that keeps the corrected trace nonnegative. The unstable
/// directions for e = ±e₁ may be passed in to avoid recomputation; when
/// absent (or for a direction other than ±e₁) they are extracted on the
/// fly with flow_unstable_direction.
///
/// When center_with is given, the seed is additionally centered on that
/// solver's stable manifold: quadratic coupling of the stable remainder
/// regenerates the unstable component along the flow, so the correct
/// initial coefficient is the (small, nonzero) one that makes the far-end
/// coefficient vanish. It is found by a two-step secant shoot, which costs
/// two extra trajectory solves per seed.
WeightedField seeded_profile_perturbation(const FvSystem& sys, double c_n,
                                          Rng& rng, double delta,
                                          double margin = 0.8,
                                          const WeightedField* unstable_pos = nullptr,
                                          const WeightedField* unstable_neg = nullptr,
                                          const SignoriniSolver* center_with = nullptr);

/// Profile plus unstable half-mode, the canonical negative-energy data for
/// κ = 3/2 (admissible: both terms have nonnegative trace).
WeightedField negative_seed_32(const FvSystem& sys, double c_n, double s);

/// h_{2m} ± amplitude·p₀. With a minus sign and amplitude beyond the central
/// trace value the data dips negative and the projected flow activates
/// contact; with a plus sign the trace stays positive and the Weiss energy
/// starts negative.
WeightedField seed_2m(const FvSystem& sys, int m, double amplitude, int sign);

// ---- experiment drivers ----------------------------------------------------------

/// Names accepted in a config's `experiment` key: stationarity, decay-32,
/// decay-2m, inhomogeneous-32, frequency-gap, regular-fb, spectrum,
/// crossval.
std::vector<std::string> experiment_names();

/// Full default configuration for the named experiment. Throws
/// std::invalid_argument for an unknown name.
TomlMap default_config(const std::string& experiment);

/// Runs the experiment described by `config` (defaults overlaid with the
/// provided keys) and writes its artifacts under `outdir`: the resolved
/// config, numeric CSV tables, SVG plots, report.json and manifest.txt.
/// Throws std::invalid_argument for config errors.
RunReport run_experiment(const TomlMap& config, const std::string& outdir);

/// JSON rendering of a report (experiment, config, checks, artifacts).
std::string report_json(const RunReport& r);

}  // namespace slab
