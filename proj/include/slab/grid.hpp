#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace slab {

/// Uniform tensor grid on the truncated half space
///   [-R, R]^{n-1} x [0, R],  spacing h in every direction.
/// The last axis is the normal direction y_n; the constraint plane {y_n = 0}
/// is the first layer of that axis. The last axis is also the fastest-varying
/// one in the flat node ordering (row-major).
struct HalfSpaceGrid {
  int n = 2;       // spatial dimension, 2 or 3
  double R = 6.0;  // truncation radius
  double h = 0.1;  // spacing
  std::array<int, 3> shape{0, 0, 0};  // nodes per axis; shape[n-1] is normal

  std::int64_t size() const {
    std::int64_t s = 1;
    for (int a = 0; a < n; ++a) s *= shape[a];
    return s;
  }
  // nodes per boundary slice {y_n = 0}
  std::int64_t boundary_size() const { return size() / shape[n - 1]; }

  double coord(int axis, int i) const {
    return axis == n - 1 ? i * h : -R + i * h;
  }

  std::int64_t index(const std::array<int, 3>& i) const {
    std::int64_t idx = i[0];
    for (int a = 1; a < n; ++a) idx = idx * shape[a] + i[a];
    return idx;
  }
  std::array<int, 3> unindex(std::int64_t idx) const {
    std::array<int, 3> i{0, 0, 0};
    for (int a = n - 1; a > 0; --a) {
      i[a] = static_cast<int>(idx % shape[a]);
      idx /= shape[a];
    }
    i[0] = static_cast<int>(idx);
    return i;
  }
  std::array<double, 3> point(std::int64_t idx) const {
    auto i = unindex(idx);
    std::array<double, 3> y{0.0, 0.0, 0.0};
    for (int a = 0; a < n; ++a) y[a] = coord(a, i[a]);
    return y;
  }
  // flat index of the boundary node under a full-grid node index
  std::int64_t boundary_index(std::int64_t idx) const {
    return idx / shape[n - 1];
  }

  bool operator==(const HalfSpaceGrid& o) const {
    return n == o.n && R == o.R && h == o.h;
  }
};

/// Throws std::invalid_argument unless n in {2,3}, R,h > 0 and R/h integral.
HalfSpaceGrid make_grid(int n, double R, double h);

/// Scalar field sampled on a grid, stamped with its self-similar (or
/// original) time.
struct WeightedField {
  HalfSpaceGrid grid;
  double tau = 0.0;
  std::vector<double> v;

  WeightedField() = default;
  explicit WeightedField(const HalfSpaceGrid& g, double tau_ = 0.0)
      : grid(g), tau(tau_), v(static_cast<std::size_t>(g.size()), 0.0) {}
};

/// Trapezoid quadrature weights for dmu = e^{-|y|^2} dy on the grid.
/// weights[i] = (product of per-axis trapezoid factors) * h^n * e^{-|y_i|^2}.
/// boundary[] carries the analogous weights for dmu' = e^{-|y'|^2} dy' on the
/// slice {y_n = 0}.
struct GaussianMeasure {
  HalfSpaceGrid grid;
  std::vector<double> weights;
  std::vector<double> boundary;
};

GaussianMeasure make_measure(const HalfSpaceGrid& grid);

// sample an arbitrary function of the node position
template <class F>
WeightedField sample_field(const HalfSpaceGrid& g, F&& f, double tau = 0.0) {
  WeightedField u(g, tau);
  const std::int64_t N = g.size();
  for (std::int64_t idx = 0; idx < N; ++idx) {
    auto y = g.point(idx);
    u.v[static_cast<std::size_t>(idx)] = f(y);
  }
  return u;
}

/// Multilinear interpolation at an arbitrary point of the closed box.
/// Throws std::domain_error if the point lies outside the truncated grid.
double interpolate(const WeightedField& u, const std::array<double, 3>& y);

// ---- serialization ---------------------------------------------------------

/// Flat binary container: magic "SLABFLD1", int32 n, float64 R, h, tau,
/// then size() float64 node values in row-major axis order.
void write_field(const WeightedField& u, const std::string& path);
WeightedField read_field(const std::string& path);

/// CSV dump (one row per node: coordinates then value), for small grids.
void write_field_csv(const WeightedField& u, const std::string& path);

}  // namespace slab
