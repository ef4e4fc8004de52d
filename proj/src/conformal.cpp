#include "slab/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace slab {

WeightedField to_selfsimilar(const WeightedField& u, double kappa,
                             const HalfSpaceGrid& target) {
  const double t = u.tau;
  if (t >= 0.0) throw std::domain_error("to_selfsimilar: requires t < 0");
  const double tau = -std::log(-t);
  const double scale = 2.0 * std::exp(-0.5 * tau);  // = 2 sqrt(-t)
  const double amp = std::exp(0.5 * kappa * tau);
  WeightedField out(target, tau);
  const std::int64_t N = target.size();
  for (std::int64_t idx = 0; idx < N; ++idx) {
    auto y = target.point(idx);
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int a = 0; a < target.n; ++a) x[a] = scale * y[a];
    out.v[static_cast<std::size_t>(idx)] = amp * interpolate(u, x);
  }
  return out;
}

WeightedField from_selfsimilar(const WeightedField& utilde, double kappa,
                               const HalfSpaceGrid& target) {
  const double tau = utilde.tau;
  const double t = -std::exp(-tau);
  const double s = std::sqrt(-t);
  WeightedField out(target, t);
  const std::int64_t N = target.size();
  for (std::int64_t idx = 0; idx < N; ++idx) {
    auto x = target.point(idx);
    std::array<double, 3> y{0.0, 0.0, 0.0};
    for (int a = 0; a < target.n; ++a) y[a] = x[a] / (2.0 * s);
    out.v[static_cast<std::size_t>(idx)] = std::pow(s, kappa) * interpolate(utilde, y);
  }
  return out;
}

WeightedField rescale(const WeightedField& u, double lambda, double kappa) {
  if (!(lambda > 0.0) || lambda > 1.0)
    throw std::invalid_argument("rescale: lambda must lie in (0, 1]");
  WeightedField out(u.grid, u.tau / (lambda * lambda));
  const std::int64_t N = u.grid.size();
  const double amp = std::pow(lambda, -kappa);
  for (std::int64_t idx = 0; idx < N; ++idx) {
    auto x = u.grid.point(idx);
    std::array<double, 3> xs{0.0, 0.0, 0.0};
    for (int a = 0; a < u.grid.n; ++a) xs[a] = lambda * x[a];
    out.v[static_cast<std::size_t>(idx)] = amp * interpolate(u, xs);
  }
  return out;
}

// linear interpolation of a sampled series at time tau; series must be sorted
static double interp_series(const std::vector<WeissSample>& s, double tau) {
  auto it = std::lower_bound(
      s.begin(), s.end(), tau,
      [](const WeissSample& a, double b) { return a.tau < b; });
  if (it == s.begin()) return it->W;
  if (it == s.end()) return (it - 1)->W;
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double w = (tau - lo.tau) / (hi.tau - lo.tau);
  return (1.0 - w) * lo.W + w * hi.W;
}

double weiss_shift_identity_check(const std::vector<WeissSample>& base,
                                  const std::vector<WeissSample>& shifted,
                                  double lambda) {
  if (base.empty() || shifted.empty())
    throw std::invalid_argument("weiss_shift_identity_check: empty trace");
  const double shift = -2.0 * std::log(lambda);
  double worst = 0.0;
  bool any = false;
  for (const auto& s : shifted) {
    const double tau_base = s.tau + shift;
    if (tau_base < base.front().tau - 1e-12 || tau_base > base.back().tau + 1e-12)
      continue;
    any = true;
    worst = std::max(worst, std::abs(interp_series(base, tau_base) - s.W));
  }
  if (!any)
    throw std::invalid_argument("weiss_shift_identity_check: no tau overlap");
  return worst;
}

}  // namespace slab
