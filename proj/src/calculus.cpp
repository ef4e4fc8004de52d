#include "slab/calculus.hpp"

#include <cmath>
#include <stdexcept>

namespace slab {

static void check_same_grid(const HalfSpaceGrid& a, const HalfSpaceGrid& b,
                            const char* who) {
  if (!(a == b)) throw std::invalid_argument(std::string(who) + ": grid mismatch");
}

double inner_mu(const WeightedField& a, const WeightedField& b,
                const GaussianMeasure& m) {
  check_same_grid(a.grid, b.grid, "inner_mu");
  check_same_grid(a.grid, m.grid, "inner_mu");
  double s = 0.0;
  const std::size_t N = a.v.size();
  for (std::size_t i = 0; i < N; ++i) s += m.weights[i] * a.v[i] * b.v[i];
  return s;
}

double inner_mu_masked(const WeightedField& a, const WeightedField& b,
                       const GaussianMeasure& m,
                       const std::vector<std::uint8_t>& skip) {
  check_same_grid(a.grid, b.grid, "inner_mu_masked");
  check_same_grid(a.grid, m.grid, "inner_mu_masked");
  double s = 0.0;
  const std::size_t N = a.v.size();
  for (std::size_t i = 0; i < N; ++i)
    if (!skip[i]) s += m.weights[i] * a.v[i] * b.v[i];
  return s;
}

double l2mu_norm(const WeightedField& a, const GaussianMeasure& m) {
  return std::sqrt(inner_mu(a, a, m));
}

double w12mu_norm(const WeightedField& a, const GaussianMeasure& m) {
  VectorField grad = gradient_fd(a);
  double s = inner_mu(a, a, m);
  const std::size_t N = a.v.size();
  for (int ax = 0; ax < a.grid.n; ++ax)
    for (std::size_t i = 0; i < N; ++i)
      s += m.weights[i] * grad.comp[ax][i] * grad.comp[ax][i];
  return std::sqrt(s);
}

// first derivative along `axis` at node i (multi-index), second order
static double d1(const WeightedField& a, std::array<int, 3> i, int axis) {
  const HalfSpaceGrid& g = a.grid;
  const int na = g.shape[axis];
  const int k = i[axis];
  auto at = [&](int j) {
    auto ii = i;
    ii[axis] = j;
    return a.v[static_cast<std::size_t>(g.index(ii))];
  };
  if (k > 0 && k < na - 1) return (at(k + 1) - at(k - 1)) / (2.0 * g.h);
  if (k == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * g.h);
  return (3.0 * at(na - 1) - 4.0 * at(na - 2) + at(na - 3)) / (2.0 * g.h);
}

// second derivative along `axis`, second order (four-point one-sided at faces)
static double d2(const WeightedField& a, std::array<int, 3> i, int axis) {
  const HalfSpaceGrid& g = a.grid;
  const int na = g.shape[axis];
  const int k = i[axis];
  const double h2 = g.h * g.h;
  auto at = [&](int j) {
    auto ii = i;
    ii[axis] = j;
    return a.v[static_cast<std::size_t>(g.index(ii))];
  };
  if (k > 0 && k < na - 1) return (at(k + 1) - 2.0 * at(k) + at(k - 1)) / h2;
  if (k == 0) return (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) / h2;
  return (2.0 * at(na - 1) - 5.0 * at(na - 2) + 4.0 * at(na - 3) - at(na - 4)) / h2;
}

VectorField gradient_fd(const WeightedField& a) {
  const HalfSpaceGrid& g = a.grid;
  for (int ax = 0; ax < g.n; ++ax)
    if (g.shape[ax] < 3) throw std::invalid_argument("gradient_fd: grid too small");
  VectorField out;
  out.grid = g;
  const std::int64_t N = g.size();
  for (int ax = 0; ax < g.n; ++ax) {
    out.comp[ax].assign(static_cast<std::size_t>(N), 0.0);
    for (std::int64_t idx = 0; idx < N; ++idx)
      out.comp[ax][static_cast<std::size_t>(idx)] = d1(a, g.unindex(idx), ax);
  }
  return out;
}

WeightedField laplacian_fd(const WeightedField& a) {
  const HalfSpaceGrid& g = a.grid;
  for (int ax = 0; ax < g.n; ++ax)
    if (g.shape[ax] < 4) throw std::invalid_argument("laplacian_fd: grid too small");
  WeightedField out(g, a.tau);
  const std::int64_t N = g.size();
  for (std::int64_t idx = 0; idx < N; ++idx) {
    auto i = g.unindex(idx);
    double s = 0.0;
    for (int ax = 0; ax < g.n; ++ax) s += d2(a, i, ax);
    out.v[static_cast<std::size_t>(idx)] = s;
  }
  return out;
}

std::vector<double> normal_derivative(const WeightedField& a) {
  const HalfSpaceGrid& g = a.grid;
  const int nax = g.n - 1;
  if (g.shape[nax] < 3)
    throw std::invalid_argument("normal_derivative: grid too small");
  std::vector<double> out(static_cast<std::size_t>(g.boundary_size()), 0.0);
  const std::int64_t Nb = g.boundary_size();
  const std::int64_t stride = 1;  // normal axis is fastest
  for (std::int64_t b = 0; b < Nb; ++b) {
    const std::int64_t base = b * g.shape[nax];
    const double u0 = a.v[static_cast<std::size_t>(base)];
    const double u1 = a.v[static_cast<std::size_t>(base + stride)];
    const double u2 = a.v[static_cast<std::size_t>(base + 2 * stride)];
    out[static_cast<std::size_t>(b)] = (-3.0 * u0 + 4.0 * u1 - u2) / (2.0 * g.h);
  }
  return out;
}

std::vector<double> boundary_trace(const WeightedField& a) {
  const HalfSpaceGrid& g = a.grid;
  const std::int64_t Nb = g.boundary_size();
  std::vector<double> out(static_cast<std::size_t>(Nb), 0.0);
  for (std::int64_t b = 0; b < Nb; ++b)
    out[static_cast<std::size_t>(b)] =
        a.v[static_cast<std::size_t>(b * g.shape[g.n - 1])];
  return out;
}

double boundary_trace_integral(const std::vector<double>& gvals,
                               const GaussianMeasure& m) {
  if (gvals.size() != m.boundary.size())
    throw std::invalid_argument("boundary_trace_integral: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < gvals.size(); ++i) s += m.boundary[i] * gvals[i];
  return s;
}

std::vector<std::uint8_t> edge_collar_mask(const HalfSpaceGrid& g,
                                           const std::array<double, 3>& e,
                                           int width) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(g.size()), 0);
  const double tol = width * g.h + 1e-12;
  const std::int64_t N = g.size();
  for (std::int64_t idx = 0; idx < N; ++idx) {
    auto y = g.point(idx);
    double t = 0.0;
    for (int a = 0; a < g.n - 1; ++a) t += y[a] * e[a];
    if (std::abs(t) <= tol && y[g.n - 1] <= tol)
      mask[static_cast<std::size_t>(idx)] = 1;
  }
  return mask;
}

std::vector<std::uint8_t> outer_dirichlet_mask(const HalfSpaceGrid& g) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(g.size()), 0);
  const std::int64_t N = g.size();
  for (std::int64_t idx = 0; idx < N; ++idx) {
    auto i = g.unindex(idx);
    bool outer = false;
    for (int a = 0; a < g.n - 1; ++a)
      if (i[a] == 0 || i[a] == g.shape[a] - 1) outer = true;
    if (i[g.n - 1] == g.shape[g.n - 1] - 1) outer = true;
    if (outer) mask[static_cast<std::size_t>(idx)] = 1;
  }
  return mask;
}

}  // namespace slab
