#include "slab/weiss.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace slab {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_grid(const WeightedField& u, const FvSystem& sys, const char* who) {
  if (!(u.grid == sys.grid())) {
    throw std::invalid_argument(std::string(who) + ": grid mismatch");
  }
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

// ---- energies -----------------------------------------------------------------

double weiss_energy(const WeightedField& u, double kappa, const FvSystem& sys) {
  check_grid(u, sys, "weiss_energy");
  return sys.weiss_form(u.v, kappa);
}

double weiss_original(const WeightedField& u, double kappa) {
  const HalfSpaceGrid& g = u.grid;
  const double t = u.tau;
  if (t >= 0.0) return 0.0;  // the kernel vanishes for t >= 0

  const double mt = -t;
  const double grad_scale = std::pow(mt, 1.0 - kappa);
  const double mass_scale = 0.5 * kappa * std::pow(mt, -kappa);
  const double pin = std::pow(kPi, 0.5 * g.n);

  // mass term with trapezoid node weights against the kernel
  double mass = 0.0;
  for (std::int64_t idx = 0; idx < g.size(); ++idx) {
    const auto i = g.unindex(idx);
    double trap = 1.0;
    for (int a = 0; a < g.n; ++a) {
      if (i[a] == 0 || i[a] == g.shape[a] - 1) trap *= 0.5;
    }
    const auto x = g.point(idx);
    const double ui = u.v[static_cast<std::size_t>(idx)];
    mass += trap * std::pow(g.h, g.n) * eval_kernel(x, t, g.n) * ui * ui;
  }

  // gradient term in edge form with midpoint kernel weights
  double grad = 0.0;
  const double hpow = std::pow(g.h, g.n - 2);
  for (int ax = 0; ax < g.n; ++ax) {
    std::int64_t stride = 1;
    for (int b = ax + 1; b < g.n; ++b) stride *= g.shape[b];
    for (std::int64_t idx = 0; idx < g.size(); ++idx) {
      const auto i = g.unindex(idx);
      if (i[ax] == g.shape[ax] - 1) continue;
      double trap = 1.0;
      std::array<double, 3> x{0.0, 0.0, 0.0};
      for (int b = 0; b < g.n; ++b) {
        x[b] = g.coord(b, i[b]);
        if (b == ax) {
          x[b] += 0.5 * g.h;
        } else if (i[b] == 0 || i[b] == g.shape[b] - 1) {
          trap *= 0.5;
        }
      }
      const double d = u.v[static_cast<std::size_t>(idx)] -
                       u.v[static_cast<std::size_t>(idx + stride)];
      grad += trap * hpow * eval_kernel(x, t, g.n) * d * d;
    }
  }
  return pin * (grad_scale * grad - mass_scale * mass);
}

// ---- cone projection (κ = 3/2) --------------------------------------------------

namespace {

struct DirEval {
  std::array<double, 3> e{1.0, 0.0, 0.0};
  double corr = 0.0;   // ⟨u, h_e⟩_μ
  double norm2 = 1.0;  // ⟨h_e, h_e⟩_μ
  double obj = 0.0;    // (corr⁺)² / norm2, the squared-distance reduction
};

DirEval eval_direction(const WeightedField& u, const FvSystem& sys, double c_n,
                       const std::array<double, 3>& e) {
  DirEval d;
  d.e = e;
  const Profile32 prof{1.0, e, c_n};
  const WeightedField he = eval_profile32(prof, u.grid);
  d.corr = inner_mu(u, he, sys.measure());
  d.norm2 = inner_mu(he, he, sys.measure());
  const double cp = std::max(0.0, d.corr);
  d.obj = d.norm2 > 0.0 ? cp * cp / d.norm2 : 0.0;
  return d;
}

std::array<double, 3> angle_dir(double theta) {
  return {std::cos(theta), std::sin(theta), 0.0};
}

DirEval golden_refine(const WeightedField& u, const FvSystem& sys, double c_n,
                      double lo, double hi) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  DirEval fc = eval_direction(u, sys, c_n, angle_dir(c));
  DirEval fd = eval_direction(u, sys, c_n, angle_dir(d));
  while (b - a > 1e-6) {
    if (fc.obj < fd.obj) {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = eval_direction(u, sys, c_n, angle_dir(d));
    } else {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = eval_direction(u, sys, c_n, angle_dir(c));
    }
  }
  return eval_direction(u, sys, c_n, angle_dir(0.5 * (a + b)));
}

E32Decomposition finish_decomposition(const WeightedField& u,
                                      const FvSystem& sys, double c_n,
                                      const DirEval& best) {
  E32Decomposition out;
  out.e = best.e;
  out.lambda = best.norm2 > 0.0 ? std::max(0.0, best.corr / best.norm2) : 0.0;

  const Profile32 prof{1.0, best.e, c_n};
  const WeightedField he = eval_profile32(prof, u.grid);
  out.v = u;
  for (std::size_t i = 0; i < out.v.v.size(); ++i) {
    out.v.v[i] -= out.lambda * he.v[i];
  }
  out.orth1 = inner_mu(out.v, he, sys.measure());

  if (u.grid.n == 3) {
    // first variation of the direction: rotating e by the orthogonal
    // tangential direction ê changes h_e at rate (3/2)c_n Re(w)^{1/2}(y'·ê)
    const std::array<double, 3> ehat{-best.e[1], best.e[0], 0.0};
    WeightedField tangent(u.grid, u.tau);
    const HalfSpaceGrid& g = u.grid;
    for (std::int64_t idx = 0; idx < g.size(); ++idx) {
      const auto y = g.point(idx);
      const double that = y[0] * ehat[0] + y[1] * ehat[1];
      tangent.v[static_cast<std::size_t>(idx)] =
          1.5 * c_n * eval_halfmode_at(best.e, y, g.n) * that;
    }
    out.orth2 = out.lambda * inner_mu(tangent, out.v, sys.measure());
  }
  return out;
}

}  // namespace

E32Decomposition project_E32(const WeightedField& u, const FvSystem& sys,
                             double c_n) {
  check_grid(u, sys, "project_E32");
  if (u.grid.n == 2) {
    const DirEval plus = eval_direction(u, sys, c_n, {1.0, 0.0, 0.0});
    const DirEval minus = eval_direction(u, sys, c_n, {-1.0, 0.0, 0.0});
    return finish_decomposition(u, sys, c_n, minus.obj > plus.obj ? minus : plus);
  }
  const int kCoarse = 256;
  DirEval best;
  double best_theta = 0.0;
  bool first = true;
  for (int k = 0; k < kCoarse; ++k) {
    const double theta = 2.0 * kPi * k / kCoarse;
    const DirEval d = eval_direction(u, sys, c_n, angle_dir(theta));
    if (first || d.obj > best.obj) {
      best = d;
      best_theta = theta;
      first = false;
    }
  }
  const double half = 2.0 * kPi / kCoarse;
  const DirEval refined =
      golden_refine(u, sys, c_n, best_theta - half, best_theta + half);
  return finish_decomposition(u, sys, c_n,
                              refined.obj >= best.obj ? refined : best);
}

E32Decomposition project_E32_local(const WeightedField& u, const FvSystem& sys,
                                   double c_n,
                                   const std::array<double, 3>& hint) {
  check_grid(u, sys, "project_E32_local");
  if (u.grid.n == 2) return project_E32(u, sys, c_n);
  const double theta0 = std::atan2(hint[1], hint[0]);
  const DirEval local = golden_refine(u, sys, c_n, theta0 - 0.15, theta0 + 0.15);
  // fall back to the full scan when the antipodal direction beats the local one
  const double theta_loc = std::atan2(local.e[1], local.e[0]);
  const DirEval anti = eval_direction(u, sys, c_n, angle_dir(theta_loc + kPi));
  if (anti.obj > local.obj || local.obj == 0.0) return project_E32(u, sys, c_n);
  return finish_decomposition(u, sys, c_n, local);
}

WeissSplit32 weiss_split_32(const WeightedField& u, const E32Decomposition& d,
                            const FvSystem& sys, double c_n) {
  check_grid(u, sys, "weiss_split_32");
  WeissSplit32 out;
  out.W_u = weiss_energy(u, 1.5, sys);
  out.W_v = weiss_energy(d.v, 1.5, sys);

  // (λ/2) ∫ ũ ∂_n h_e dμ' with ∂_n h_e(y',0) = -(3/2) c_n |y'·e|^{1/2} on
  // {y'·e < 0}; the cells within one spacing of the edge are skipped.
  const HalfSpaceGrid& g = u.grid;
  const int nax = g.n - 1;
  double bsum = 0.0;
  for (std::int64_t b = 0; b < g.boundary_size(); ++b) {
    const std::int64_t idx = b * g.shape[nax];
    const auto y = g.point(idx);
    double s = 0.0;
    for (int a = 0; a < nax; ++a) s += y[a] * d.e[a];
    if (s >= 0.0 || std::abs(s) <= g.h * (1.0 + 1e-12)) continue;
    bsum += sys.measure().boundary[static_cast<std::size_t>(b)] *
            u.v[static_cast<std::size_t>(idx)] * (-1.5 * c_n * std::sqrt(-s));
  }
  out.boundary = 0.5 * d.lambda * bsum;
  out.residual = out.W_u - (out.W_v - out.boundary);
  return out;
}

// ---- κ = 2m eigenspace ----------------------------------------------------------

E2mDecomposition project_E2m(const WeightedField& u, int m, const FvSystem& sys) {
  check_grid(u, sys, "project_E2m");
  if (m < 1) throw std::invalid_argument("project_E2m: m must be >= 1");
  E2mDecomposition out;
  out.alphas = even_multi_indices(2 * m, u.grid.n);
  out.v = u;
  std::vector<WeightedField> basis;
  basis.reserve(out.alphas.size());
  for (const auto& alpha : out.alphas) {
    basis.push_back(eval_hermite(alpha, u.grid));
    const double lam = inner_mu(u, basis.back(), sys.measure());
    out.lambda_alpha.push_back(lam);
    for (std::size_t i = 0; i < out.v.v.size(); ++i) {
      out.v.v[i] -= lam * basis.back().v[i];
    }
  }
  out.orth_residual = 0.0;
  for (const auto& p : basis) {
    out.orth_residual =
        std::max(out.orth_residual, std::abs(inner_mu(out.v, p, sys.measure())));
  }
  return out;
}

double lambda_2m(const WeightedField& u, int m, const FvSystem& sys) {
  check_grid(u, sys, "lambda_2m");
  const WeightedField h2m = eval_h2m(m, u.grid, sys.measure());
  return inner_mu(u, h2m, sys.measure());
}

// ---- evolution identities -------------------------------------------------------

Evolution2mReport evolution_residuals_2m(const WeissTrace& trace) {
  if (trace.dtau <= 0.0) {
    throw std::invalid_argument("evolution_residuals_2m: dtau must be > 0");
  }
  const auto& rows = trace.rows;
  if (rows.size() < 3) {
    throw std::invalid_argument("evolution_residuals_2m: need >= 3 rows");
  }
  const std::size_t na = trace.alphas.size();
  Evolution2mReport rep;
  rep.min_dlambda2m = std::numeric_limits<double>::infinity();
  const double dt = trace.dtau;

  for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
    rep.min_dlambda2m = std::min(
        rep.min_dlambda2m, (rows[k + 1].lambda - rows[k].lambda) / dt);
  }
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double we = std::abs(rows[k].W - rows[k].Wv);
    rep.weiss_equal.push_back(we);
    rep.max_weiss_equal = std::max(rep.max_weiss_equal, we);
  }
  for (std::size_t k = 1; k + 1 < rows.size(); ++k) {
    if (rows[k].lambda_alpha.size() != na || rows[k].balpha.size() != na) {
      throw std::invalid_argument("evolution_residuals_2m: ragged rows");
    }
    rep.tau.push_back(rows[k].tau);

    double rl = 0.0;
    for (std::size_t a = 0; a < na; ++a) {
      const double dl =
          (rows[k + 1].lambda_alpha[a] - rows[k - 1].lambda_alpha[a]) /
          (2.0 * dt);
      rl = std::max(rl, std::abs(dl + 0.25 * rows[k].balpha[a]));
    }
    rep.res_lambda.push_back(rl);
    rep.max_res_lambda = std::max(rep.max_res_lambda, rl);

    const double dv =
        0.5 * (rows[k + 1].vnorm2 - rows[k - 1].vnorm2) / (2.0 * dt);
    double pump = 0.0;
    for (std::size_t a = 0; a < na; ++a) {
      pump += 0.25 * rows[k].lambda_alpha[a] * rows[k].balpha[a];
    }
    const double rv = std::abs(dv + rows[k].Wv - pump);
    rep.res_vnorm.push_back(rv);
    rep.max_res_vnorm = std::max(rep.max_res_vnorm, rv);
  }
  return rep;
}

// ---- contraction checks ---------------------------------------------------------

EpiReport epiperimetric_check(const WeissTrace& trace, EpiVariant variant,
                              double floor) {
  if (trace.dtau <= 0.0) {
    throw std::invalid_argument("epiperimetric_check: dtau must be > 0");
  }
  const auto& rows = trace.rows;
  EpiReport rep;
  rep.variant = variant;

  auto value = [&](const WeissRow& r) {
    return variant == EpiVariant::forced ? r.Wtilde : r.W;
  };

  bool any_pos = false, any_neg = false;
  for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
    const double wa = value(rows[k]), wb = value(rows[k + 1]);
    if (wa > floor) any_pos = true;
    if (wa < -floor) any_neg = true;
    if (wa * wb < 0.0 && std::abs(wa) > floor && std::abs(wb) > floor) {
      rep.sign_change_taus.push_back(0.5 * (rows[k].tau + rows[k + 1].tau));
    }
  }
  if (!rows.empty()) {
    const double wl = value(rows.back());
    if (wl > floor) any_pos = true;
    if (wl < -floor) any_neg = true;
  }
  rep.mixed_sign = any_pos && any_neg;

  const auto stride = static_cast<std::size_t>(std::llround(1.0 / trace.dtau));
  rep.min_implied_c0 = std::numeric_limits<double>::infinity();
  if (stride >= 1 && rows.size() > stride) {
    for (std::size_t a = 0; a + stride < rows.size(); ++a) {
      const std::size_t b = a + stride;
      if (std::abs(rows[b].tau - rows[a].tau - 1.0) > 1e-9) continue;
      const double wa = value(rows[a]), wb = value(rows[b]);
      EpiPair pair;
      pair.tau_a = rows[a].tau;
      pair.tau_b = rows[b].tau;
      pair.W_a = wa;
      pair.W_b = wb;
      switch (variant) {
        case EpiVariant::positive:
        case EpiVariant::forced:
          if (wa <= floor) continue;
          pair.implied_c0 = 1.0 - wb / wa;
          break;
        case EpiVariant::negative:
          if (wa >= -floor) continue;
          pair.implied_c0 = wb / wa - 1.0;
          break;
        case EpiVariant::logarithmic: {
          if (wa <= floor || wb <= floor) continue;
          pair.implied_c0 = (1.0 - wb / wa) / G_log(wb);
          break;
        }
      }
      rep.pairs.push_back(pair);
      rep.min_implied_c0 = std::min(rep.min_implied_c0, pair.implied_c0);
    }
  }
  if (rep.pairs.empty()) {
    rep.degenerate = true;
    rep.min_implied_c0 = 0.0;
  }
  return rep;
}

// ---- decay fits -----------------------------------------------------------------

namespace {

struct LinFit {
  double intercept = 0.0, slope = 0.0, r2 = 0.0;
  std::vector<double> resid;
};

LinFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  LinFit f;
  const double det = n * sxx - sx * sx;
  f.slope = det != 0.0 ? (n * sxy - sx * sy) / det : 0.0;
  f.intercept = (sy - f.slope * sx) / n;
  double ss_res = 0.0, ss_tot = 0.0;
  const double ybar = sy / n;
  f.resid.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    f.resid[i] = r;
    ss_res += r * r;
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
  }
  f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

/// Unique A > 1 with A ln²A = target (the map is increasing from 0).
double invert_Alog2(double target) {
  if (!(target > 0.0)) {
    throw std::invalid_argument("invert_Alog2: target must be > 0");
  }
  double lo = 1.0, hi = 2.0;
  auto psi = [](double a) {
    const double l = std::log(a);
    return a * l * l;
  };
  while (psi(hi) < target) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (psi(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

DecayFit fit_decay(const std::vector<double>& tau, const std::vector<double>& W,
                   DecayModel model, double tau_lo, double tau_hi) {
  if (tau.size() != W.size()) {
    throw std::invalid_argument("fit_decay: length mismatch");
  }
  std::vector<double> ts, ws;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (tau[i] >= tau_lo - 1e-9 && tau[i] <= tau_hi + 1e-9) {
      ts.push_back(tau[i]);
      ws.push_back(W[i]);
    }
  }
  if (ts.size() < 5) {
    throw std::invalid_argument("fit_decay: window holds fewer than 5 samples");
  }

  DecayFit fit;
  fit.model = model;
  fit.tau_lo = tau_lo;
  fit.tau_hi = tau_hi;

  if (model == DecayModel::exponential || model == DecayModel::contraction) {
    for (double w : ws) {
      if (w <= 0.0) {
        throw std::invalid_argument(
            "fit_decay: nonpositive sample under a log-based model");
      }
    }
    std::vector<double> ly(ws.size());
    for (std::size_t i = 0; i < ws.size(); ++i) ly[i] = std::log(ws[i]);
    const LinFit lf = linear_fit(ts, ly);
    fit.gamma0 = -lf.slope;
    fit.r2 = lf.r2;
    double maxres = 0.0;
    for (double r : lf.resid) maxres = std::max(maxres, r);
    fit.C = std::exp(lf.intercept + maxres);
    std::size_t held = 0;
    for (std::size_t i = 0; i < ws.size(); ++i) {
      if (ly[i] <= lf.intercept + lf.slope * ts[i] + 1e-9) ++held;
    }
    fit.hold_fraction = static_cast<double>(held) / static_cast<double>(ws.size());
    if (model == DecayModel::contraction) {
      // worst per-unit-interval ratio inside the window
      double worst = 0.0;
      bool found = false;
      for (std::size_t a = 0; a < ts.size(); ++a) {
        for (std::size_t b = a + 1; b < ts.size(); ++b) {
          if (std::abs(ts[b] - ts[a] - 1.0) <= 1e-9) {
            worst = std::max(worst, ws[b] / ws[a]);
            found = true;
            break;
          }
        }
      }
      if (!found) {
        throw std::invalid_argument(
            "fit_decay: no unit-separated pairs in the window");
      }
      fit.c0 = 1.0 - worst;
      fit.gamma0 = -std::log(worst);
    } else {
      fit.c0 = 1.0 - std::exp(-fit.gamma0);
    }
    return fit;
  }

  // logarithmic envelope W(τ) ≤ C / ((A0 + c0 τ) ln²(A0 + c0 τ))
  for (double w : ws) {
    if (w <= 0.0) {
      throw std::invalid_argument(
          "fit_decay: nonpositive sample under a log-based model");
    }
  }
  if (ws.front() < 1e-14) {
    fit.degenerate = true;
    return fit;
  }
  fit.A0 = invert_Alog2(1.0 / ws.front());
  if (fit.A0 < 1.0 + 1e-6) {
    fit.degenerate = true;
    return fit;
  }

  std::vector<double> ly(ws.size());
  for (std::size_t i = 0; i < ws.size(); ++i) ly[i] = std::log(ws[i]);
  const double t0 = ts.front();
  auto shape_log = [&](double c0, double t) {
    const double a = fit.A0 + c0 * (t - t0);
    const double l = std::log(a);
    return -std::log(a * l * l);
  };
  // least squares over c0 with the intercept eliminated
  auto ss_of = [&](double c0) {
    double mean = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      mean += ly[i] - shape_log(c0, ts[i]);
    }
    mean /= static_cast<double>(ts.size());
    double ss = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const double r = ly[i] - shape_log(c0, ts[i]) - mean;
      ss += r * r;
    }
    return ss;
  };
  double best_c0 = 1e-3, best_ss = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 240; ++k) {
    const double c0 = std::pow(10.0, -3.0 + 4.0 * k / 240.0);
    const double ss = ss_of(c0);
    if (ss < best_ss) {
      best_ss = ss;
      best_c0 = c0;
    }
  }
  {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = best_c0 / std::pow(10.0, 4.0 / 240.0);
    double b = best_c0 * std::pow(10.0, 4.0 / 240.0);
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = ss_of(c), fd = ss_of(d);
    for (int it = 0; it < 80; ++it) {
      if (fc > fd) {
        a = c;
        c = d;
        fc = fd;
        d = a + gr * (b - a);
        fd = ss_of(d);
      } else {
        b = d;
        d = c;
        fd = fc;
        c = b - gr * (b - a);
        fc = ss_of(c);
      }
    }
    best_c0 = 0.5 * (a + b);
    best_ss = ss_of(best_c0);
  }
  fit.c0 = best_c0;

  double mean = 0.0, ss_tot = 0.0, ybar = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    mean += ly[i] - shape_log(best_c0, ts[i]);
    ybar += ly[i];
  }
  mean /= static_cast<double>(ts.size());
  ybar /= static_cast<double>(ts.size());
  for (double y : ly) ss_tot += (y - ybar) * (y - ybar);
  fit.r2 = ss_tot > 0.0 ? 1.0 - best_ss / ss_tot : 1.0;

  double maxres = 0.0;
  std::size_t held = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double r = ly[i] - shape_log(best_c0, ts[i]) - mean;
    maxres = std::max(maxres, r);
    if (r <= 1e-9) ++held;
  }
  fit.C = std::exp(mean + maxres);
  fit.hold_fraction = static_cast<double>(held) / static_cast<double>(ts.size());
  return fit;
}

// ---- limits ---------------------------------------------------------------------

double fitted_rate(const std::vector<double>& tau, const std::vector<double>& val,
                   double lo, double hi) {
  std::vector<double> ts, ly;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (tau[i] >= lo - 1e-9 && tau[i] <= hi + 1e-9 && val[i] > 1e-12) {
      ts.push_back(tau[i]);
      ly.push_back(std::log(val[i]));
    }
  }
  if (ts.size() < 5) return 0.0;
  return -linear_fit(ts, ly).slope;
}

LimitReport limit_extraction(const WeissTrace& trace,
                             const std::vector<WeightedField>& snapshots,
                             double kappa, const FvSystem& sys, double c_n,
                             double delta, double diff_tol) {
  if (snapshots.size() < 2) {
    throw std::invalid_argument("limit_extraction: need >= 2 snapshots");
  }
  if (trace.rows.empty()) {
    throw std::invalid_argument("limit_extraction: empty trace");
  }
  LimitReport rep;
  const WeightedField& last = snapshots.back();
  const WeightedField& prev = snapshots[snapshots.size() - 2];
  WeightedField diff = last;
  for (std::size_t i = 0; i < diff.v.size(); ++i) diff.v[i] -= prev.v[i];
  rep.final_diff = l2mu_norm(diff, sys.measure());
  rep.converged = rep.final_diff <= diff_tol;

  const double H0 = trace.rows.front().H;
  rep.half_initial_norm = 0.5 * std::sqrt(std::max(0.0, H0));
  rep.smallness_hypothesis = trace.rows.front().W <= delta * H0 &&
                             trace.rows.front().vnorm2 <= delta * H0;

  const double tau_end = trace.rows.back().tau;
  const double lo = 0.5 * tau_end, hi = tau_end;

  const int m = static_cast<int>(std::lround(0.5 * kappa));
  if (std::abs(kappa - 1.5) < 1e-9) {
    const E32Decomposition d = project_E32(last, sys, c_n);
    rep.profile = Profile32{d.lambda, d.e, c_n};
    rep.lambda_inf = d.lambda;

    std::vector<double> taus, vn, dl;
    for (const auto& r : trace.rows) {
      taus.push_back(r.tau);
      vn.push_back(r.vnorm2);
      dl.push_back(std::abs(r.lambda * r.lambda - d.lambda * d.lambda));
    }
    rep.vrate = fitted_rate(taus, vn, lo, hi);
    rep.lrate = fitted_rate(taus, dl, lo, std::max(lo, hi - 0.5));
  } else if (m >= 1 && std::abs(kappa - 2.0 * m) < 1e-9) {
    const E2mDecomposition d = project_E2m(last, m, sys);
    rep.alphas = d.alphas;
    rep.lambda_alpha = d.lambda_alpha;
    rep.lambda2m_limit = lambda_2m(last, m, sys);
    rep.lambda_inf = rep.lambda2m_limit;

    std::vector<double> taus, vn;
    for (const auto& r : trace.rows) {
      taus.push_back(r.tau);
      vn.push_back(r.vnorm2);
    }
    rep.vrate = fitted_rate(taus, vn, lo, hi);
  } else {
    throw std::invalid_argument("limit_extraction: kappa must be 3/2 or 2m");
  }
  rep.nontrivial_limit = rep.lambda_inf > rep.half_initial_norm;
  return rep;
}

// ---- F-calculus -----------------------------------------------------------------

namespace {

double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adaptive_simpson(F&& f, double a, double b, double fa, double fm,
                        double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(a, m, fa, flm, fm);
  const double right = simpson(m, b, fm, frm, fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double F_log(double s, double s0) {
  if (!(s > 0.0) || !(s0 < 1.0) || !(s <= s0) || !(s0 > 0.0)) {
    throw std::invalid_argument("F_log: need 0 < s <= s0 < 1");
  }
  const double a = -std::log(s0), b = -std::log(s);
  auto f = [](double u) { return std::exp(u) / (u * u * u); };
  double integral = 0.0;
  if (b > a) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    integral = adaptive_simpson(f, a, b, fa, fm, fb, simpson(a, b, fa, fm, fb),
                                1e-14, 40);
  }
  const double l = std::log(s);
  return -1.0 / (s * l * l) - 2.0 * integral;
}

double F_log_prime(double s) {
  if (!(s > 0.0) || s == 1.0) {
    throw std::invalid_argument("F_log_prime: need s in (0,1)");
  }
  const double l = std::log(s);
  return 1.0 / (s * s * l * l);
}

double G_log(double w) {
  if (w < 0.0) throw std::invalid_argument("G_log: need w >= 0");
  if (w == 0.0) return 0.0;
  const double l = std::log(w);
  return w * l * l;
}

// ---- serialization --------------------------------------------------------------

namespace {

std::string alpha_label(const MultiIndex& a) {
  return std::to_string(a[0]) + "_" + std::to_string(a[1]) + "_" +
         std::to_string(a[2]);
}

MultiIndex parse_alpha_label(const std::string& s) {
  MultiIndex a{0, 0, 0};
  if (std::sscanf(s.c_str(), "%d_%d_%d", &a[0], &a[1], &a[2]) != 3) {
    throw std::runtime_error("trace csv: bad multi-index label " + s);
  }
  return a;
}

}  // namespace

void write_trace_csv(const WeissTrace& t, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_trace_csv: cannot open " + path);
  out << "# kappa=" << fmt(t.kappa) << " dtau=" << fmt(t.dtau) << "\n";
  out << "tau,W,H,diss,react,lambda,e1,e2,e3,vnorm2,Wv,orth1,orth2,Wtilde,fnorm";
  for (const auto& a : t.alphas) out << ",lambda_" << alpha_label(a);
  for (const auto& a : t.alphas) out << ",b_" << alpha_label(a);
  out << "\n";
  for (const auto& r : t.rows) {
    out << fmt(r.tau) << ',' << fmt(r.W) << ',' << fmt(r.H) << ','
        << fmt(r.diss) << ',' << fmt(r.react) << ',' << fmt(r.lambda) << ','
        << fmt(r.e[0]) << ',' << fmt(r.e[1]) << ',' << fmt(r.e[2]) << ','
        << fmt(r.vnorm2) << ',' << fmt(r.Wv) << ',' << fmt(r.orth1) << ','
        << fmt(r.orth2) << ',' << fmt(r.Wtilde) << ',' << fmt(r.fnorm);
    for (std::size_t a = 0; a < t.alphas.size(); ++a) {
      out << ',' << fmt(a < r.lambda_alpha.size() ? r.lambda_alpha[a] : 0.0);
    }
    for (std::size_t a = 0; a < t.alphas.size(); ++a) {
      out << ',' << fmt(a < r.balpha.size() ? r.balpha[a] : 0.0);
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write_trace_csv: write failed " + path);
}

WeissTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_trace_csv: cannot open " + path);
  WeissTrace t;
  std::string line;
  if (!std::getline(in, line) ||
      std::sscanf(line.c_str(), "# kappa=%lf dtau=%lf", &t.kappa, &t.dtau) != 2) {
    throw std::runtime_error("read_trace_csv: missing metadata line");
  }
  if (!std::getline(in, line)) {
    throw std::runtime_error("read_trace_csv: missing header");
  }
  const auto cols = split_csv(line);
  constexpr std::size_t kBase = 15;
  if (cols.size() < kBase) {
    throw std::runtime_error("read_trace_csv: malformed header");
  }
  std::size_t nlam = 0;
  for (std::size_t c = kBase; c < cols.size(); ++c) {
    if (cols[c].rfind("lambda_", 0) == 0) {
      t.alphas.push_back(parse_alpha_label(cols[c].substr(7)));
      ++nlam;
    }
  }
  if (cols.size() != kBase + 2 * nlam) {
    throw std::runtime_error("read_trace_csv: inconsistent column blocks");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != cols.size()) {
      throw std::runtime_error("read_trace_csv: ragged row");
    }
    WeissRow r;
    std::size_t c = 0;
    auto next = [&]() { return std::stod(f[c++]); };
    r.tau = next();
    r.W = next();
    r.H = next();
    r.diss = next();
    r.react = next();
    r.lambda = next();
    r.e[0] = next();
    r.e[1] = next();
    r.e[2] = next();
    r.vnorm2 = next();
    r.Wv = next();
    r.orth1 = next();
    r.orth2 = next();
    r.Wtilde = next();
    r.fnorm = next();
    for (std::size_t a = 0; a < nlam; ++a) r.lambda_alpha.push_back(next());
    for (std::size_t a = 0; a < nlam; ++a) r.balpha.push_back(next());
    t.rows.push_back(std::move(r));
  }
  return t;
}

std::string decayfit_json(const DecayFit& f) {
  nlohmann::ordered_json j;
  switch (f.model) {
    case DecayModel::exponential:
      j["model"] = "exponential";
      break;
    case DecayModel::contraction:
      j["model"] = "contraction";
      break;
    case DecayModel::logarithmic:
      j["model"] = "logarithmic";
      break;
  }
  j["gamma0"] = f.gamma0;
  j["c0"] = f.c0;
  j["C"] = f.C;
  j["A0"] = f.A0;
  j["tau_lo"] = f.tau_lo;
  j["tau_hi"] = f.tau_hi;
  j["r2"] = f.r2;
  j["hold_fraction"] = f.hold_fraction;
  j["degenerate"] = f.degenerate;
  return j.dump(2);
}

}  // namespace slab
