#include "slab/exact.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace slab {

static double tangential_dot(const std::array<double, 3>& e,
                             const std::array<double, 3>& y, int n) {
  double s = 0.0;
  for (int a = 0; a < n - 1; ++a) s += e[a] * y[a];
  return s;
}

static void check_unit_tangential(const std::array<double, 3>& e, int n) {
  double s = 0.0;
  for (int a = 0; a < n - 1; ++a) s += e[a] * e[a];
  if (std::abs(s - 1.0) > 1e-9)
    throw std::invalid_argument("profile direction must be a unit tangential vector");
}

// r^p cos(pθ) in the (s, |y_n|) half-plane, zero exactly on {s <= 0, y_n = 0}
static double wedge_power(double p, double s, double yn) {
  const double a = std::abs(yn);
  if (a == 0.0 && s <= 0.0) return 0.0;
  const double r = std::hypot(s, a);
  if (r == 0.0) return 0.0;
  const double theta = std::atan2(a, s);
  return std::pow(r, p) * std::cos(p * theta);
}

double eval_profile32_at(const Profile32& p, const std::array<double, 3>& y,
                         int n) {
  const double s = tangential_dot(p.e, y, n);
  return p.lambda * p.c_n * wedge_power(1.5, s, y[n - 1]);
}

WeightedField eval_profile32(const Profile32& p, const HalfSpaceGrid& g) {
  check_unit_tangential(p.e, g.n);
  return sample_field(g, [&](const std::array<double, 3>& y) {
    return eval_profile32_at(p, y, g.n);
  });
}

double eval_halfmode_at(const std::array<double, 3>& e,
                        const std::array<double, 3>& y, int n) {
  return wedge_power(0.5, tangential_dot(e, y, n), y[n - 1]);
}

WeightedField eval_halfmode(const std::array<double, 3>& e,
                            const HalfSpaceGrid& g) {
  check_unit_tangential(e, g.n);
  return sample_field(g, [&](const std::array<double, 3>& y) {
    return eval_halfmode_at(e, y, g.n);
  });
}

double normalize_profile(int n, const HalfSpaceGrid& g) {
  if (g.shape[0] < 4) throw std::invalid_argument("normalize_profile: degenerate grid");
  Profile32 p;
  p.lambda = 1.0;
  p.c_n = 1.0;
  WeightedField f = eval_profile32(p, g);
  const double nrm = l2mu_norm(f, make_measure(g));
  if (!(nrm > 0.0)) throw std::invalid_argument("normalize_profile: degenerate grid");
  return 1.0 / nrm;
}

// ---- Hermite basis ----------------------------------------------------------

double hermite_value(int k, double x) {
  if (k == 0) return 1.0;
  double hm = 1.0, hc = 2.0 * x;
  for (int j = 1; j < k; ++j) {
    const double hn = 2.0 * x * hc - 2.0 * j * hm;
    hm = hc;
    hc = hn;
  }
  return hc;
}

double hermite_normalizer(const MultiIndex& alpha, int n) {
  double fact = 1.0;
  int total = 0;
  for (int a = 0; a < n; ++a) {
    total += alpha[a];
    for (int j = 2; j <= alpha[a]; ++j) fact *= j;
  }
  const double full = std::pow(2.0, total) * fact * std::pow(M_PI, 0.5 * n);
  return 1.0 / std::sqrt(0.5 * full);
}

double eval_hermite_at(const MultiIndex& alpha, const std::array<double, 3>& y,
                       int n) {
  double v = hermite_normalizer(alpha, n);
  for (int a = 0; a < n; ++a) v *= hermite_value(alpha[a], y[a]);
  return v;
}

WeightedField eval_hermite(const MultiIndex& alpha, const HalfSpaceGrid& g) {
  return sample_field(g, [&](const std::array<double, 3>& y) {
    return eval_hermite_at(alpha, y, g.n);
  });
}

WeightedField assemble_element(const std::map<MultiIndex, double>& coeffs,
                               const HalfSpaceGrid& g) {
  WeightedField out(g);
  for (const auto& [alpha, c] : coeffs) {
    if (c == 0.0) continue;
    const std::int64_t N = g.size();
    for (std::int64_t idx = 0; idx < N; ++idx)
      out.v[static_cast<std::size_t>(idx)] +=
          c * eval_hermite_at(alpha, g.point(idx), g.n);
  }
  return out;
}

std::vector<MultiIndex> even_multi_indices(int degree, int n) {
  std::vector<MultiIndex> out;
  if (n == 2) {
    for (int a1 = 0; a1 <= degree; ++a1) {
      const int a2 = degree - a1;
      if (a2 % 2 == 0) out.push_back({a1, a2, 0});
    }
  } else {
    for (int a1 = 0; a1 <= degree; ++a1)
      for (int a2 = 0; a2 + a1 <= degree; ++a2) {
        const int a3 = degree - a1 - a2;
        if (a3 % 2 == 0) out.push_back({a1, a2, a3});
      }
  }
  return out;
}

std::vector<MultiIndex> even_multi_indices_upto(int degree, int n) {
  std::vector<MultiIndex> out;
  for (int d = 0; d <= degree; ++d) {
    auto part = even_multi_indices(d, n);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

// ---- distinguished eigenfunction h_{2m} --------------------------------------

static std::complex<double> cpow_int(std::complex<double> z, int k) {
  std::complex<double> r(1.0, 0.0);
  while (k-- > 0) r *= z;
  return r;
}

double eval_h2m_raw_at(int m, const std::array<double, 3>& y, int n) {
  if (m < 1) throw std::invalid_argument("eval_h2m: m must be >= 1");
  const double yn = y[n - 1];
  const double pref = std::pow(2.0, 2 * m);
  double v = 0.0;
  for (int j = 0; j < n - 1; ++j)
    v += pref * cpow_int({y[j], yn}, 2 * m).real();
  double mfact = 1.0;
  for (int j = 2; j <= m; ++j) mfact *= j;
  double poly = 0.0;
  for (int l = 0; l <= m; ++l) {
    double denom = 1.0;
    for (int j = 2; j <= m - l; ++j) denom *= j;
    for (int j = 2; j <= 2 * l; ++j) denom *= j;
    const double sign = (l % 2 == 0) ? 1.0 : -1.0;
    poly += sign / denom * std::pow(2.0 * yn, 2 * l);
  }
  return v + mfact * poly;
}

WeightedField eval_h2m(int m, const HalfSpaceGrid& g, const GaussianMeasure& mu,
                       double* C_out) {
  WeightedField raw = sample_field(g, [&](const std::array<double, 3>& y) {
    return eval_h2m_raw_at(m, y, g.n);
  });
  const double C = l2mu_norm(raw, mu);
  for (double& x : raw.v) x /= C;
  if (C_out) *C_out = C;
  return raw;
}

// ---- kernels and homogeneous extension ---------------------------------------

double eval_kernel(const std::array<double, 3>& x, double t, int n) {
  if (t >= 0.0) return 0.0;
  double r2 = 0.0;
  for (int a = 0; a < n; ++a) r2 += x[a] * x[a];
  return std::pow(-4.0 * M_PI * t, -0.5 * n) * std::exp(r2 / (4.0 * t));
}

double homogeneous_extend(const WeightedField& stationary, double kappa,
                          const std::array<double, 3>& x, double t) {
  if (t >= 0.0) throw std::domain_error("homogeneous_extend: requires t < 0");
  const double s = std::sqrt(-t);
  std::array<double, 3> y{0.0, 0.0, 0.0};
  for (int a = 0; a < stationary.grid.n; ++a) y[a] = x[a] / (2.0 * s);
  return std::pow(s, kappa) * interpolate(stationary, y);
}

}  // namespace slab
