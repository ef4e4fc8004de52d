#include "slab/grid.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace slab {

HalfSpaceGrid make_grid(int n, double R, double h) {
  if (n != 2 && n != 3) throw std::invalid_argument("make_grid: n must be 2 or 3");
  if (!(R > 0.0) || !(h > 0.0))
    throw std::invalid_argument("make_grid: R and h must be positive");
  const double q = R / h;
  const double K = std::round(q);
  if (std::abs(q - K) > 1e-9 * q)
    throw std::invalid_argument("make_grid: R/h must be an integer");
  HalfSpaceGrid g;
  g.n = n;
  g.R = R;
  g.h = h;
  const int Ki = static_cast<int>(K);
  for (int a = 0; a < n - 1; ++a) g.shape[a] = 2 * Ki + 1;
  g.shape[n - 1] = Ki + 1;
  return g;
}

GaussianMeasure make_measure(const HalfSpaceGrid& g) {
  GaussianMeasure mu;
  mu.grid = g;
  mu.weights.assign(static_cast<std::size_t>(g.size()), 0.0);
  mu.boundary.assign(static_cast<std::size_t>(g.boundary_size()), 0.0);
  const double hn = std::pow(g.h, g.n);
  const std::int64_t N = g.size();
  for (std::int64_t idx = 0; idx < N; ++idx) {
    auto i = g.unindex(idx);
    double trap = 1.0;
    double r2 = 0.0;
    for (int a = 0; a < g.n; ++a) {
      if (i[a] == 0 || i[a] == g.shape[a] - 1) trap *= 0.5;
      const double y = g.coord(a, i[a]);
      r2 += y * y;
    }
    mu.weights[static_cast<std::size_t>(idx)] = trap * hn * std::exp(-r2);
  }
  // boundary slice: same construction one dimension down (no normal axis)
  const double hb = std::pow(g.h, g.n - 1);
  const std::int64_t Nb = g.boundary_size();
  for (std::int64_t b = 0; b < Nb; ++b) {
    std::array<int, 3> i{0, 0, 0};
    std::int64_t rem = b;
    for (int a = g.n - 2; a > 0; --a) {
      i[a] = static_cast<int>(rem % g.shape[a]);
      rem /= g.shape[a];
    }
    i[0] = static_cast<int>(rem);
    double trap = 1.0;
    double r2 = 0.0;
    for (int a = 0; a < g.n - 1; ++a) {
      if (i[a] == 0 || i[a] == g.shape[a] - 1) trap *= 0.5;
      const double y = g.coord(a, i[a]);
      r2 += y * y;
    }
    mu.boundary[static_cast<std::size_t>(b)] = trap * hb * std::exp(-r2);
  }
  return mu;
}

double interpolate(const WeightedField& u, const std::array<double, 3>& y) {
  const HalfSpaceGrid& g = u.grid;
  std::array<int, 3> i0{0, 0, 0};
  std::array<double, 3> w{0.0, 0.0, 0.0};
  for (int a = 0; a < g.n; ++a) {
    const double lo = (a == g.n - 1) ? 0.0 : -g.R;
    const double s = (y[a] - lo) / g.h;
    if (s < -1e-12 || s > g.shape[a] - 1 + 1e-12)
      throw std::domain_error("interpolate: point outside grid");
    int i = static_cast<int>(std::floor(s));
    if (i < 0) i = 0;
    if (i > g.shape[a] - 2) i = g.shape[a] - 2;
    i0[a] = i;
    w[a] = s - i;
  }
  double val = 0.0;
  const int corners = 1 << g.n;
  for (int c = 0; c < corners; ++c) {
    std::array<int, 3> i = i0;
    double wc = 1.0;
    for (int a = 0; a < g.n; ++a) {
      if (c & (1 << a)) {
        i[a] += 1;
        wc *= w[a];
      } else {
        wc *= 1.0 - w[a];
      }
    }
    val += wc * u.v[static_cast<std::size_t>(g.index(i))];
  }
  return val;
}

// ---- serialization ---------------------------------------------------------

static const char kMagic[8] = {'S', 'L', 'A', 'B', 'F', 'L', 'D', '1'};

void write_field(const WeightedField& u, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_field: cannot open " + path);
  f.write(kMagic, 8);
  const std::int32_t n = u.grid.n;
  f.write(reinterpret_cast<const char*>(&n), sizeof n);
  f.write(reinterpret_cast<const char*>(&u.grid.R), sizeof(double));
  f.write(reinterpret_cast<const char*>(&u.grid.h), sizeof(double));
  f.write(reinterpret_cast<const char*>(&u.tau), sizeof(double));
  f.write(reinterpret_cast<const char*>(u.v.data()),
          static_cast<std::streamsize>(u.v.size() * sizeof(double)));
  if (!f) throw std::runtime_error("write_field: write failed for " + path);
}

WeightedField read_field(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_field: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("read_field: bad magic in " + path);
  std::int32_t n = 0;
  double R = 0.0, h = 0.0, tau = 0.0;
  f.read(reinterpret_cast<char*>(&n), sizeof n);
  f.read(reinterpret_cast<char*>(&R), sizeof R);
  f.read(reinterpret_cast<char*>(&h), sizeof h);
  f.read(reinterpret_cast<char*>(&tau), sizeof tau);
  if (!f) throw std::runtime_error("read_field: truncated header in " + path);
  WeightedField u(make_grid(n, R, h), tau);
  f.read(reinterpret_cast<char*>(u.v.data()),
         static_cast<std::streamsize>(u.v.size() * sizeof(double)));
  if (!f) throw std::runtime_error("read_field: truncated payload in " + path);
  return u;
}

void write_field_csv(const WeightedField& u, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("write_field_csv: cannot open " + path);
  const HalfSpaceGrid& g = u.grid;
  if (g.n == 2)
    std::fprintf(f, "y1,y2,value\n");
  else
    std::fprintf(f, "y1,y2,y3,value\n");
  const std::int64_t N = g.size();
  for (std::int64_t idx = 0; idx < N; ++idx) {
    auto y = g.point(idx);
    for (int a = 0; a < g.n; ++a) std::fprintf(f, "%.17g,", y[a]);
    std::fprintf(f, "%.17g\n", u.v[static_cast<std::size_t>(idx)]);
  }
  std::fclose(f);
}

}  // namespace slab
