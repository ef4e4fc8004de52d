#include "slab/freeboundary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "slab/calculus.hpp"

namespace slab {

namespace {

// Interpolation with even reflection in y_n and radial κ-homogeneous
// extension beyond 0.95R, so conformal pullbacks stay evaluable for
// arguments that leave the truncated grid.
double eval_extended(const WeightedField& s, std::array<double, 3> y,
                     double kappa) {
  const int n = s.grid.n;
  if (y[n - 1] < 0.0) y[n - 1] = -y[n - 1];
  double r2 = 0.0;
  for (int a = 0; a < n; ++a) r2 += y[a] * y[a];
  const double rin = 0.95 * s.grid.R;
  const double r = std::sqrt(r2);
  double scale = 1.0;
  if (r > rin) {
    const double shrink = rin / r;
    for (int a = 0; a < n; ++a) y[a] *= shrink;
    scale = std::pow(r / rin, kappa);
  }
  return scale * interpolate(s, y);
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i]; sy += y[i]; sxx += x[i] * x[i]; sxy += x[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  if (std::abs(den) < 1e-300) return 0.0;
  return (n * sxy - sx * sy) / den;
}

}  // namespace

// ---- space-time fields ---------------------------------------------------------

SpaceTimeField homogeneous_field(WeightedField stationary, double kappa) {
  SpaceTimeField f;
  f.n = stationary.grid.n;
  f.tmin = -1e30;
  f.eval = [s = std::move(stationary), kappa](const std::array<double, 3>& x,
                                              double t) {
    if (t >= 0.0) throw std::domain_error("homogeneous_field: t >= 0");
    const double root = 2.0 * std::sqrt(-t);
    std::array<double, 3> y{0.0, 0.0, 0.0};
    for (int a = 0; a < s.grid.n; ++a) y[a] = x[a] / root;
    return std::pow(std::sqrt(-t), kappa) * eval_extended(s, y, kappa);
  };
  return f;
}

SpaceTimeField trajectory_field(std::vector<WeightedField> snapshots,
                                double kappa) {
  if (snapshots.empty())
    throw std::invalid_argument("trajectory_field: no snapshots");
  std::sort(snapshots.begin(), snapshots.end(),
            [](const WeightedField& a, const WeightedField& b) {
              return a.tau < b.tau;
            });
  SpaceTimeField f;
  f.n = snapshots.front().grid.n;
  f.tmin = -1e30;
  f.eval = [sn = std::move(snapshots), kappa](const std::array<double, 3>& x,
                                              double t) {
    if (t >= 0.0) throw std::domain_error("trajectory_field: t >= 0");
    const double tau = -std::log(-t);
    const double root = 2.0 * std::sqrt(-t);
    const int n = sn.front().grid.n;
    std::array<double, 3> y{0.0, 0.0, 0.0};
    for (int a = 0; a < n; ++a) y[a] = x[a] / root;
    const double scale = std::pow(std::sqrt(-t), kappa);
    if (tau <= sn.front().tau) return scale * eval_extended(sn.front(), y, kappa);
    if (tau >= sn.back().tau) return scale * eval_extended(sn.back(), y, kappa);
    std::size_t k = 1;
    while (sn[k].tau < tau) ++k;
    const double w = (tau - sn[k - 1].tau) / (sn[k].tau - sn[k - 1].tau);
    return scale * ((1.0 - w) * eval_extended(sn[k - 1], y, kappa) +
                    w * eval_extended(sn[k], y, kappa));
  };
  return f;
}

// ---- contact sets --------------------------------------------------------------

ContactSet extract_contact(const std::vector<WeightedField>& slices,
                           double threshold) {
  if (slices.empty())
    throw std::invalid_argument("extract_contact: no slices");
  ContactSet cs;
  cs.grid = slices.front().grid;
  cs.threshold = threshold;
  const HalfSpaceGrid& g = cs.grid;
  const int n = g.n;
  const std::int64_t nb = g.boundary_size();
  // tangential strides within the boundary slice flat ordering
  std::array<std::int64_t, 2> bstride{0, 0};
  if (n == 2) bstride[0] = 1;
  else { bstride[0] = g.shape[1]; bstride[1] = 1; }

  for (const auto& u : slices) {
    if (!(u.grid == g))
      throw std::invalid_argument("extract_contact: mixed grids");
    cs.times.push_back(u.tau);
    std::vector<std::uint8_t> flag(static_cast<std::size_t>(nb), 0);
    std::vector<double> trace(static_cast<std::size_t>(nb), 0.0);
    for (std::int64_t b = 0; b < nb; ++b) {
      const std::int64_t idx = b * g.shape[n - 1];  // y_n = 0 layer
      trace[std::size_t(b)] = u.v[std::size_t(idx)];
      flag[std::size_t(b)] = std::abs(trace[std::size_t(b)]) <= threshold;
    }
    std::vector<std::uint8_t> edge(static_cast<std::size_t>(nb), 0);
    for (std::int64_t b = 0; b < nb; ++b) {
      if (!flag[std::size_t(b)]) continue;
      auto i = g.unindex(b * g.shape[n - 1]);
      for (int a = 0; a < n - 1; ++a) {
        if (i[a] > 0 && !flag[std::size_t(b - bstride[a])]) edge[std::size_t(b)] = 1;
        if (i[a] < g.shape[a] - 1 && !flag[std::size_t(b + bstride[a])])
          edge[std::size_t(b)] = 1;
      }
    }
    cs.contact.push_back(std::move(flag));
    cs.gamma.push_back(std::move(edge));
    cs.trace.push_back(std::move(trace));
  }
  return cs;
}

// ---- H functional ---------------------------------------------------------------

HCurve compute_H(const SpaceTimeField& u, const std::array<double, 3>& x0,
                 double t0, double r_max, int decades,
                 int points_per_decade) {
  if (!(r_max > 0.0) || decades < 1 || points_per_decade < 1)
    throw std::invalid_argument("compute_H: bad r grid");
  const int n = u.n;
  // quadrature resolution: finer in 2d, coarser in 3d for runtime
  const double L = (n == 2) ? 5.0 : 4.0;
  const double hq = (n == 2) ? 0.1 : 0.25;
  const double dtq = (n == 2) ? 0.02 : 0.05;

  // spatial quadrature nodes and trapezoid-weighted Gaussian factors
  const int nt = int(std::lround(2.0 * L / hq)) + 1;  // tangential
  const int nn = int(std::lround(L / hq)) + 1;        // normal
  std::vector<std::array<double, 3>> qy;
  std::vector<double> qw;
  const double pifac = std::pow(M_PI, -0.5 * n);
  std::array<int, 3> nper{nt, nt, nt};
  nper[n - 1] = nn;
  std::array<int, 3> it{0, 0, 0};
  for (it[0] = 0; it[0] < nper[0]; ++it[0])
    for (it[1] = 0; it[1] < (n >= 2 ? nper[1] : 1); ++it[1])
      for (it[2] = 0; it[2] < (n == 3 ? nper[2] : 1); ++it[2]) {
        std::array<double, 3> y{0.0, 0.0, 0.0};
        double w = std::pow(hq, n) * pifac;
        for (int a = 0; a < n; ++a) {
          y[a] = (a == n - 1) ? it[a] * hq : -L + it[a] * hq;
          if (it[a] == 0 || it[a] == nper[a] - 1) w *= 0.5;
        }
        double y2 = 0.0;
        for (int a = 0; a < n; ++a) y2 += y[a] * y[a];
        qy.push_back(y);
        qw.push_back(w * std::exp(-y2));
      }

  // Φ(τ_j) = π^{-n/2} ∫ u(2√-t y + x0, t + t0)² e^{-|y|²} dy at t = -e^{-τ}
  const double tau0 = -2.0 * std::log(r_max);
  const double tau_top = tau0 + 2.0 * decades * std::log(10.0) + 12.0;
  const int K = int(std::ceil((tau_top - tau0) / dtq)) + 1;
  std::vector<double> Phi(std::size_t(K), 0.0);
  for (int j = 0; j < K; ++j) {
    const double tau = tau0 + j * dtq;
    const double t = -std::exp(-tau);
    const double root = 2.0 * std::sqrt(-t);
    double acc = 0.0;
    for (std::size_t q = 0; q < qy.size(); ++q) {
      std::array<double, 3> x{0.0, 0.0, 0.0};
      for (int a = 0; a < n; ++a) x[a] = root * qy[q][a] + x0[a];
      const double val = u.eval(x, t + t0);
      acc += qw[q] * val * val;
    }
    Phi[std::size_t(j)] = acc;
  }

  // I(τ) = ∫_τ^∞ Φ e^{-s} ds, cumulative trapezoid from the right
  std::vector<double> I(std::size_t(K), 0.0);
  for (int j = K - 2; j >= 0; --j) {
    const double ta = tau0 + j * dtq, tb = ta + dtq;
    I[std::size_t(j)] = I[std::size_t(j + 1)] +
                        0.5 * dtq * (Phi[std::size_t(j)] * std::exp(-ta) +
                                     Phi[std::size_t(j + 1)] * std::exp(-tb));
  }

  HCurve out;
  const int np = decades * points_per_decade;
  for (int k = 0; k <= np; ++k) {
    const double r = r_max * std::pow(10.0, -double(k) / points_per_decade);
    const double tr = -2.0 * std::log(r);
    const double s = (tr - tau0) / dtq;
    const int j = std::min(std::max(int(std::floor(s)), 0), K - 2);
    const double frac = s - j;
    const double Ir = (1.0 - frac) * I[std::size_t(j)] + frac * I[std::size_t(j + 1)];
    out.r.push_back(r);
    out.H.push_back(Ir / (r * r));
  }
  return out;
}

double fit_H_slope(const HCurve& c, int trim) {
  if (int(c.r.size()) < 2 * trim + 2)
    throw std::invalid_argument("fit_H_slope: curve too short");
  std::vector<double> lx, ly;
  for (std::size_t i = std::size_t(trim); i + std::size_t(trim) < c.r.size(); ++i) {
    if (!(c.H[i] > 0.0)) continue;
    lx.push_back(std::log(c.r[i]));
    ly.push_back(std::log(c.H[i]));
  }
  if (lx.size() < 2)
    throw std::invalid_argument("fit_H_slope: no positive H values");
  return ls_slope(lx, ly);
}

PointClass classify_frequency(double kappa_fit, double window, int* m_out) {
  if (std::abs(kappa_fit - 1.5) < 0.5 * window) {
    if (m_out) *m_out = 0;
    return PointClass::regular_32;
  }
  for (int m = 1; m <= 8; ++m) {
    if (std::abs(kappa_fit - 2.0 * m) < 0.5 * window) {
      if (m_out) *m_out = m;
      return PointClass::singular_2m;
    }
  }
  if (m_out) *m_out = 0;
  return PointClass::unclassified;
}

namespace {

// Conformal snapshot of the λ-rescaling at the given center, sampled on g:
// ũ_λ(y) = λ^{-κ} u(2λy + x₀, -λ² + t₀).
WeightedField rescaled_conformal(const SpaceTimeField& u,
                                 const std::array<double, 3>& x0, double t0,
                                 double lambda, double kappa,
                                 const HalfSpaceGrid& g) {
  WeightedField out(g, 0.0);
  const std::int64_t N = g.size();
  const double scale = std::pow(lambda, -kappa);
  for (std::int64_t idx = 0; idx < N; ++idx) {
    const auto y = g.point(idx);
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int a = 0; a < g.n; ++a) x[a] = 2.0 * lambda * y[a] + x0[a];
    out.v[std::size_t(idx)] = scale * u.eval(x, -lambda * lambda + t0);
  }
  return out;
}

}  // namespace

FreeBoundarySample analyze_point(const SpaceTimeField& u,
                                 const std::array<double, 3>& x0, double t0,
                                 const FvSystem& sys, double c_n,
                                 double r_max, int decades, double window,
                                 double lambda_probe) {
  FreeBoundarySample s;
  s.x0 = x0;
  s.t0 = t0;
  s.curve = compute_H(u, x0, t0, r_max, decades);
  s.kappa_fit = 0.5 * fit_H_slope(s.curve);
  s.cls = classify_frequency(s.kappa_fit, window, &s.m);
  if (s.cls == PointClass::regular_32) {
    const WeightedField ut =
        rescaled_conformal(u, x0, t0, lambda_probe, 1.5, sys.grid());
    const E32Decomposition d = project_E32(ut, sys, c_n);
    s.c = d.lambda;
    s.e = d.e;
  }
  return s;
}

// ---- blow-up extraction ---------------------------------------------------------

BlowupReport blowup(const SpaceTimeField& u, const std::array<double, 3>& x0,
                    double t0, const std::vector<double>& lambdas,
                    const FvSystem& sys, double c_n, double kappa) {
  if (lambdas.size() < 2)
    throw std::invalid_argument("blowup: need at least two scales");
  for (std::size_t k = 1; k < lambdas.size(); ++k)
    if (!(lambdas[k] < lambdas[k - 1]))
      throw std::invalid_argument("blowup: ladder must descend");

  // Free-boundary precondition: vanishing trace at the center, but contact
  // does not fill the surrounding ring.
  const double dt = lambdas.front() * lambdas.front();
  const int n = u.n;
  double ring_max = 0.0;
  const double rho = 2.0 * std::sqrt(dt);
  for (int a = 0; a < n - 1; ++a) {
    for (double sgn : {-1.0, 1.0}) {
      for (double fac : {0.5, 1.0, 2.0}) {
        std::array<double, 3> x = x0;
        x[a] += sgn * fac * rho;
        ring_max = std::max(ring_max, std::abs(u.eval(x, t0 - dt)));
      }
    }
  }
  const double center_val = std::abs(u.eval(x0, t0 - dt));
  if (!(ring_max > 0.0) || center_val > 1e-6 * ring_max)
    throw std::domain_error(
        "blowup: center fails the free-boundary precondition");

  BlowupReport rep;
  std::vector<WeightedField> fields;
  for (double lam : lambdas) {
    WeightedField ut = rescaled_conformal(u, x0, t0, lam, kappa, sys.grid());
    const E32Decomposition d = project_E32(ut, sys, c_n);
    Profile32 p;
    p.lambda = d.lambda;
    p.e = d.e;
    p.c_n = c_n;
    WeightedField prof = eval_profile32(p, sys.grid());
    WeightedField diff(sys.grid(), 0.0);
    for (std::size_t i = 0; i < diff.v.size(); ++i)
      diff.v[i] = ut.v[i] - prof.v[i];
    rep.lambda.push_back(lam);
    rep.c.push_back(d.lambda);
    rep.e.push_back(d.e);
    rep.profile_dist.push_back(l2mu_norm(diff, sys.measure()));
    fields.push_back(std::move(ut));
  }
  for (std::size_t k = 1; k < fields.size(); ++k) {
    WeightedField diff(sys.grid(), 0.0);
    for (std::size_t i = 0; i < diff.v.size(); ++i)
      diff.v[i] = fields[k].v[i] - fields[k - 1].v[i];
    rep.succ_diff.push_back(l2mu_norm(diff, sys.measure()));
  }
  bool shrinking = true;
  for (std::size_t k = 1; k < rep.succ_diff.size(); ++k)
    if (rep.succ_diff[k] > 1.05 * rep.succ_diff[k - 1] &&
        rep.succ_diff[k] > 1e-10)
      shrinking = false;
  const bool tiny =
      !rep.succ_diff.empty() && rep.succ_diff.back() <= 1e-10;
  rep.stabilized =
      shrinking && (tiny || rep.succ_diff.back() <= 0.5 * rep.succ_diff.front());

  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < rep.lambda.size(); ++k)
    if (rep.profile_dist[k] > 1e-12) {
      lx.push_back(std::log(rep.lambda[k]));
      ly.push_back(std::log(rep.profile_dist[k]));
    }
  rep.rate = lx.size() >= 2 ? ls_slope(lx, ly) : 0.0;
  return rep;
}

// ---- regular free boundary as a graph -------------------------------------------

GraphReport reconstruct_graph(const ContactSet& cs, double x1_lo,
                              double x1_hi) {
  const HalfSpaceGrid& g = cs.grid;
  if (g.n != 3)
    throw std::invalid_argument("reconstruct_graph: needs n = 3 data");
  GraphReport rep;
  const int n0 = g.shape[0], n1 = g.shape[1];
  const double h = g.h;

  for (std::size_t k = 0; k < cs.contact.size(); ++k) {
    const auto& flag = cs.contact[k];
    const auto& tr = cs.trace[k];
    std::vector<double> col_g(std::size_t(n0),
                              std::numeric_limits<double>::quiet_NaN());
    for (int i0 = 0; i0 < n0; ++i0) {
      const double x1 = g.coord(0, i0);
      if (x1 < x1_lo || x1 > x1_hi) continue;
      // scan the graph axis: count contact-run transitions between interior
      // nodes; the outermost layer is the pinned truncation frame, whose
      // zeros are a boundary condition rather than contact
      int flips = 0, first_flip = -1;
      for (int i1 = 2; i1 + 1 < n1; ++i1) {
        const std::size_t b = std::size_t(i0) * n1 + i1;
        const std::size_t bp = b - 1;
        if (flag[bp] && !flag[b]) {
          ++flips;
          if (first_flip < 0) first_flip = i1;
        } else if (!flag[bp] && flag[b]) {
          ++flips;
        }
      }
      if (flips == 0) continue;
      if (flips > 1) {
        ++rep.multi_flip_columns;
        rep.graphical = false;
        continue;
      }
      // subcell location: u ~ c s^{3/2} past the flip, so u^{2/3} is linear;
      // extrapolate its zero from the first two non-contact nodes
      double gx = g.coord(1, first_flip) - 0.5 * h;
      if (first_flip + 1 < n1) {
        const double u1 = std::abs(tr[std::size_t(i0) * n1 + first_flip]);
        const double u2 = std::abs(tr[std::size_t(i0) * n1 + first_flip + 1]);
        const double t1 = std::pow(u1, 2.0 / 3.0);
        const double t2 = std::pow(u2, 2.0 / 3.0);
        if (t2 > t1 && t1 > 0.0) {
          const double y1 = g.coord(1, first_flip);
          double z = y1 - h * t1 / (t2 - t1);
          z = std::min(std::max(z, y1 - h), y1);
          gx = z;
        }
      }
      col_g[std::size_t(i0)] = gx;
    }
    // centered tangential derivative within the slice
    for (int i0 = 0; i0 < n0; ++i0) {
      if (!std::isfinite(col_g[std::size_t(i0)])) continue;
      double d = std::numeric_limits<double>::quiet_NaN();
      const bool lf = i0 > 0 && std::isfinite(col_g[std::size_t(i0 - 1)]);
      const bool rf = i0 + 1 < n0 && std::isfinite(col_g[std::size_t(i0 + 1)]);
      if (lf && rf)
        d = (col_g[std::size_t(i0 + 1)] - col_g[std::size_t(i0 - 1)]) / (2 * h);
      else if (rf)
        d = (col_g[std::size_t(i0 + 1)] - col_g[std::size_t(i0)]) / h;
      else if (lf)
        d = (col_g[std::size_t(i0)] - col_g[std::size_t(i0 - 1)]) / h;
      if (!std::isfinite(d)) continue;
      rep.x1.push_back(g.coord(0, i0));
      rep.t.push_back(cs.times[k]);
      rep.g.push_back(col_g[std::size_t(i0)]);
      rep.dg.push_back(d);
    }
  }

  for (int s = 1; s <= 10; ++s) rep.theta.push_back(0.1 * s);
  rep.quotient.assign(rep.theta.size(), 0.0);
  for (std::size_t i = 0; i < rep.dg.size(); ++i)
    for (std::size_t j = i + 1; j < rep.dg.size(); ++j) {
      const double d = std::abs(rep.x1[i] - rep.x1[j]) +
                       std::sqrt(std::abs(rep.t[i] - rep.t[j]));
      if (d < 1e-12) continue;
      const double num = std::abs(rep.dg[i] - rep.dg[j]);
      for (std::size_t q = 0; q < rep.theta.size(); ++q)
        rep.quotient[q] =
            std::max(rep.quotient[q], num / std::pow(d, rep.theta[q]));
    }
  return rep;
}

HolderReport holder_maps(const std::vector<FreeBoundarySample>& samples) {
  if (samples.size() < 2)
    throw std::invalid_argument("holder_maps: need at least two samples");
  HolderReport rep;
  for (int s = 1; s <= 10; ++s) rep.theta.push_back(0.1 * s);
  rep.q_c.assign(rep.theta.size(), 0.0);
  rep.q_e.assign(rep.theta.size(), 0.0);
  std::vector<double> ldc, lc, lde, le;
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      double dx = 0.0, de2 = 0.0;
      for (int a = 0; a < 3; ++a) {
        const double d = samples[i].x0[a] - samples[j].x0[a];
        const double dd = samples[i].e[a] - samples[j].e[a];
        dx += d * d;
        de2 += dd * dd;
      }
      const double d = std::sqrt(dx) +
                       std::sqrt(std::abs(samples[i].t0 - samples[j].t0));
      if (d < 1e-12) continue;
      const double dc = std::abs(samples[i].c - samples[j].c);
      const double de = std::sqrt(de2);
      for (std::size_t q = 0; q < rep.theta.size(); ++q) {
        rep.q_c[q] = std::max(rep.q_c[q], dc / std::pow(d, rep.theta[q]));
        rep.q_e[q] = std::max(rep.q_e[q], de / std::pow(d, rep.theta[q]));
      }
      if (dc > 1e-14) { ldc.push_back(std::log(d)); lc.push_back(std::log(dc)); }
      if (de > 1e-14) { lde.push_back(std::log(d)); le.push_back(std::log(de)); }
    }
  const auto clamp01 = [](double v) { return std::min(std::max(v, 0.0), 1.0); };
  rep.theta_hat_c = ldc.size() >= 2 ? clamp01(ls_slope(ldc, lc)) : 1.0;
  rep.theta_hat_e = lde.size() >= 2 ? clamp01(ls_slope(lde, le)) : 1.0;
  return rep;
}

// ---- frequency gap --------------------------------------------------------------

GapReport frequency_gap_experiment(int m, const std::vector<double>& eps_grid,
                                   const FvSystem& sys, double c0,
                                   double tau_max, double dtau) {
  if (m < 1) throw std::invalid_argument("frequency_gap_experiment: m >= 1");
  GapReport rep;
  rep.m = m;
  rep.c0 = c0;
  rep.ctilde = 0.5 * c0;  // c̃ = c₀‖v‖²/2 at unit norm
  const double kappa = 2.0 * m;
  const HalfSpaceGrid& g = sys.grid();

  // mixture legs: eigenvalue -1 (|α| = 2m-2) and +1 (|α| = 2m+2) of the
  // 2m-frame Weiss form
  MultiIndex A{0, 0, 0}, B{0, 0, 0};
  A[0] = 2 * m - 2;
  B[0] = 2 * m + 2;
  const WeightedField pA = eval_hermite(A, g);
  const WeightedField pB = eval_hermite(B, g);
  const double hA = inner_mu(pA, pA, sys.measure());
  const double hB = inner_mu(pB, pB, sys.measure());

  const auto inequality_holds = [&](double e) {
    const double bracket = -e + std::log(e) + std::log(rep.ctilde / c0);
    return std::exp(-e) <=
           1.0 - rep.ctilde * std::exp(-e) * e * bracket * bracket;
  };

  for (double eps : eps_grid) {
    GapRow row;
    row.eps = eps;
    const double up = 2.0 * m + eps, dn = 2.0 * m - eps;
    row.exact_mode_exists =
        (std::abs(up - std::lround(up)) < 1e-12 && std::lround(up) >= 0) ||
        (std::abs(dn - std::lround(dn)) < 1e-12 && std::lround(dn) >= 0);

    for (int branch = 0; branch < 2; ++branch) {
      // W(v) = ±(ε/2)‖v‖²: weights on the (-1, +1) eigenvalue legs
      const double sgn = branch == 0 ? +1.0 : -1.0;
      const double a2 = 0.5 * (1.0 - sgn * eps / 2.0);
      const double b2 = 0.5 * (1.0 + sgn * eps / 2.0);
      WeightedField v(g, 0.0);
      const double ca = std::sqrt(a2 / hA), cb = std::sqrt(b2 / hB);
      for (std::size_t i = 0; i < v.v.size(); ++i)
        v.v[i] = ca * pA.v[i] + cb * pB.v[i];
      const double Hv = inner_mu(v, v, sys.measure());
      double max_rel = 0.0;
      for (double tau = 0.0; tau <= tau_max + 1e-12; tau += dtau) {
        WeightedField ut = v;
        ut.tau = tau;
        const double amp = std::exp(-sgn * eps * tau / 2.0);
        for (auto& x : ut.v) x *= amp;
        const double W = weiss_energy(ut, kappa, sys);
        const double closed =
            sgn * (eps / 2.0) * std::exp(-sgn * eps * tau) * Hv;
        max_rel = std::max(max_rel,
                           std::abs(W - closed) / std::max(std::abs(closed), 1e-300));
      }
      (branch == 0 ? row.w_err_plus : row.w_err_minus) = max_rel;
    }
    row.inequality_holds = inequality_holds(eps);
    rep.rows.push_back(row);
  }

  // fine upward scan for the implied gap ε₀
  rep.eps0 = 0.0;
  for (int k = 0; k <= 1400; ++k) {
    const double e = std::pow(10.0, -6.0 + 7.0 * k / 1400.0);
    if (inequality_holds(e)) {
      rep.eps0 = e;
      break;
    }
  }
  return rep;
}

}  // namespace slab
