#include "slab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace slab {

double beta_eps(double s, double eps) {
  if (s >= 0.0) return 0.0;
  const double knee = -2.0 * eps * eps;
  if (s <= knee) return eps + s / eps;
  const double sigma = s / knee;  // in (0, 1)
  return eps * sigma * sigma * sigma * (sigma - 2.0);
}

double beta_eps_prime(double s, double eps) {
  if (s >= 0.0) return 0.0;
  const double knee = -2.0 * eps * eps;
  if (s <= knee) return 1.0 / eps;
  const double sigma = s / knee;
  return sigma * sigma * (3.0 - 2.0 * sigma) / eps;
}

SignoriniSolver::SignoriniSolver(const FvSystem& sys, const SolverConfig& cfg)
    : sys_(sys),
      cfg_(cfg),
      stepper_(sys, cfg.frame.kappa, cfg.frame.dtau, true) {
  const double kappa = cfg.frame.kappa;
  const int mr = static_cast<int>(std::lround(0.5 * kappa));
  if (mr >= 1 && std::abs(kappa - 2.0 * mr) < 1e-9) {
    m_ = mr;
    alphas_ = even_multi_indices(2 * m_, sys.grid().n);
    for (const auto& a : alphas_) p_basis_.push_back(eval_hermite(a, sys.grid()));
    h2m_ = eval_h2m(m_, sys.grid(), sys.measure());
  } else if (std::abs(kappa - 1.5) < 1e-9) {
    c_n_ = normalize_profile(sys.grid().n, sys.grid());
  }
}

SolverState SignoriniSolver::init(const WeightedField& initial) const {
  if (!(initial.grid == sys_.grid()))
    throw std::invalid_argument("SignoriniSolver: initial data grid mismatch");
  SolverState st;
  st.u = initial;
  st.u.tau = 0.0;
  // pin truncation faces
  const auto& dir = sys_.dirichlet();
  for (std::size_t i = 0; i < st.u.v.size(); ++i)
    if (dir[i]) st.u.v[i] = 0.0;
  if (cfg_.scheme == Scheme::projected) {
    const HalfSpaceGrid& g = sys_.grid();
    const std::int64_t Nb = g.boundary_size();
    const int sn = g.shape[g.n - 1];
    for (std::int64_t b = 0; b < Nb; ++b) {
      double& val = st.u.v[static_cast<std::size_t>(b * sn)];
      if (val < 0.0) {
        val = 0.0;
        st.trace_was_clipped = true;
      }
    }
  }
  st.prev = st.u;
  st.xi.assign(sys_.boundary_free().size(), 0.0);
  return st;
}

Eigen::VectorXd SignoriniSolver::step_rhs(const SolverState& st) const {
  const double dtau = cfg_.frame.dtau;
  Eigen::VectorXd rhs = sys_.M_free().cwiseProduct(sys_.restrict_free(st.u.v));
  if (cfg_.forcing) {
    const double tau_next = st.u.tau + dtau;
    const double amp = std::exp(tau_next * (0.5 * cfg_.frame.kappa - 1.0));
    const auto& fn = sys_.free_nodes();
    for (std::int64_t f = 0; f < sys_.n_free(); ++f) {
      const auto y = sys_.grid().point(fn[static_cast<std::size_t>(f)]);
      rhs[f] += dtau * sys_.M_free()[f] * amp * cfg_.forcing(y, tau_next);
    }
  }
  return rhs;
}

void SignoriniSolver::step_projected(SolverState& st) const {
  const auto& bf = sys_.boundary_free();
  const std::int64_t nb = static_cast<std::int64_t>(bf.size());
  const Eigen::MatrixXd& S = stepper_.schur();
  const Eigen::VectorXd rhs = step_rhs(st);
  const Eigen::VectorXd w = stepper_.solve(rhs);

  Eigen::VectorXd q(nb);
  for (std::int64_t i = 0; i < nb; ++i) q[i] = w[bf[static_cast<std::size_t>(i)]];

  Eigen::VectorXd xi(nb);
  for (std::int64_t i = 0; i < nb; ++i) xi[i] = st.xi[static_cast<std::size_t>(i)];
  Eigen::VectorXd r = q + S * xi;  // boundary trace as a function of xi

  // projected SOR on the complementarity system xi >= 0, r >= 0, xi·r = 0
  int iter = 0;
  bool converged = false;
  while (iter < cfg_.max_inner) {
    ++iter;
    for (std::int64_t i = 0; i < nb; ++i) {
      const double xi_new =
          std::max(0.0, xi[i] - cfg_.omega * r[i] / S(i, i));
      const double delta = xi_new - xi[i];
      if (delta != 0.0) {
        xi[i] = xi_new;
        r += delta * S.col(i);
      }
    }
    double res = 0.0;
    for (std::int64_t i = 0; i < nb; ++i) {
      res = std::max(res, -r[i]);
      res = std::max(res, std::abs(xi[i] * r[i]));
    }
    if (res <= cfg_.tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw std::runtime_error("step: projected sweep exceeded iteration cap");
  st.last_inner_iters = iter;

  Eigen::VectorXd rhs_full = rhs;
  for (std::int64_t i = 0; i < nb; ++i)
    rhs_full[bf[static_cast<std::size_t>(i)]] += xi[i];
  const Eigen::VectorXd Unew = stepper_.solve(rhs_full);

  st.prev = st.u;
  sys_.scatter_free(Unew, st.u.v);
  // enforce the constraint exactly against round-off of the inner iteration
  double min_tr = 0.0;
  const HalfSpaceGrid& g = sys_.grid();
  const int sn = g.shape[g.n - 1];
  for (std::int64_t b = 0; b < g.boundary_size(); ++b) {
    double& val = st.u.v[static_cast<std::size_t>(b * sn)];
    min_tr = std::min(min_tr, val);
    if (val < 0.0) val = 0.0;
  }
  st.min_trace = min_tr;

  const double dtau = cfg_.frame.dtau;
  double react = 0.0;
  for (std::int64_t i = 0; i < nb; ++i) {
    const std::int64_t f = bf[static_cast<std::size_t>(i)];
    const std::int64_t node = sys_.free_nodes()[static_cast<std::size_t>(f)];
    const double du = (st.u.v[static_cast<std::size_t>(node)] -
                       st.prev.v[static_cast<std::size_t>(node)]) /
                      dtau;
    react += du * xi[i];
    st.xi[static_cast<std::size_t>(i)] = xi[i];
  }
  st.react_work = react;
}

void SignoriniSolver::step_penalized(SolverState& st) const {
  const auto& bf = sys_.boundary_free();
  const std::int64_t nb = static_cast<std::int64_t>(bf.size());
  const Eigen::MatrixXd& S = stepper_.schur();
  const double dtau = cfg_.frame.dtau;
  const double eps = cfg_.epsilon;

  const Eigen::VectorXd rhs = step_rhs(st);
  const Eigen::VectorXd w = stepper_.solve(rhs);
  Eigen::VectorXd q(nb);
  for (std::int64_t i = 0; i < nb; ++i) q[i] = w[bf[static_cast<std::size_t>(i)]];

  // boundary measure weights for the penalty term
  Eigen::VectorXd wb(nb);
  const HalfSpaceGrid& g = sys_.grid();
  for (std::int64_t i = 0; i < nb; ++i) {
    const std::int64_t node =
        sys_.free_nodes()[static_cast<std::size_t>(bf[static_cast<std::size_t>(i)])];
    wb[i] = sys_.measure().boundary[static_cast<std::size_t>(g.boundary_index(node))];
  }

  // penalty multiplier xi_i(s) = -(Δτ/4) w'_i β_ε(s), nonnegative, decreasing
  auto rho = [&](std::int64_t i, double s) {
    return -(0.25 * dtau) * wb[i] * beta_eps(s, eps);
  };
  auto rho_prime = [&](std::int64_t i, double s) {
    return -(0.25 * dtau) * wb[i] * beta_eps_prime(s, eps);
  };

  // nonlinear Gauss-Seidel on U_b = q + S·rho(U_b)
  Eigen::VectorXd Ub(nb), xi(nb);
  for (std::int64_t i = 0; i < nb; ++i) {
    const std::int64_t f = bf[static_cast<std::size_t>(i)];
    const std::int64_t node = sys_.free_nodes()[static_cast<std::size_t>(f)];
    Ub[i] = st.u.v[static_cast<std::size_t>(node)];
    xi[i] = rho(i, Ub[i]);
  }
  Eigen::VectorXd r = q + S * xi;  // trace implied by current multipliers

  int iter = 0;
  bool converged = false;
  while (iter < cfg_.max_inner) {
    ++iter;
    double max_change = 0.0;
    for (std::int64_t i = 0; i < nb; ++i) {
      // scalar equation x - S_ii rho_i(x) = c_i, strictly increasing in x
      const double c = r[i] - S(i, i) * xi[i];
      double x = Ub[i];
      if (c >= 0.0) {
        x = c;  // rho_i vanishes on x >= 0
      } else {
        // safeguarded Newton; phi(0) = -S_ii rho_i(0) - c = -c > 0, and
        // phi -> -infinity as x -> -infinity, so the root is negative
        double lo = c * (1.0 + 4.0 * eps) - 1.0, hi = 0.0;
        if (!(x < hi && x > lo)) x = c;
        for (int it = 0; it < 100; ++it) {
          const double phi = x - S(i, i) * rho(i, x) - c;
          if (std::abs(phi) <= 1e-15 * (1.0 + std::abs(c))) break;
          if (phi > 0.0) hi = x; else lo = x;
          const double dphi = 1.0 - S(i, i) * rho_prime(i, x);
          double xn = x - phi / dphi;
          if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
          if (xn == x) break;
          x = xn;
        }
      }
      const double xi_new = rho(i, x);
      const double delta = xi_new - xi[i];
      if (delta != 0.0) {
        xi[i] = xi_new;
        r += delta * S.col(i);
      }
      max_change = std::max(max_change, std::abs(x - Ub[i]));
      Ub[i] = x;
    }
    if (max_change <= cfg_.tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw std::runtime_error("step: penalized sweep exceeded iteration cap");
  st.last_inner_iters = iter;

  Eigen::VectorXd rhs_full = rhs;
  for (std::int64_t i = 0; i < nb; ++i)
    rhs_full[bf[static_cast<std::size_t>(i)]] += xi[i];
  const Eigen::VectorXd Unew = stepper_.solve(rhs_full);

  st.prev = st.u;
  sys_.scatter_free(Unew, st.u.v);
  double min_tr = 0.0;
  const int sn = g.shape[g.n - 1];
  for (std::int64_t b = 0; b < g.boundary_size(); ++b)
    min_tr = std::min(min_tr, st.u.v[static_cast<std::size_t>(b * sn)]);
  st.min_trace = min_tr;

  double react = 0.0;
  for (std::int64_t i = 0; i < nb; ++i) {
    const std::int64_t f = bf[static_cast<std::size_t>(i)];
    const std::int64_t node = sys_.free_nodes()[static_cast<std::size_t>(f)];
    const double du = (st.u.v[static_cast<std::size_t>(node)] -
                       st.prev.v[static_cast<std::size_t>(node)]) /
                      dtau;
    react += du * xi[i];
    st.xi[static_cast<std::size_t>(i)] = xi[i];
  }
  st.react_work = react;
}

void SignoriniSolver::step(SolverState& st) const {
  if (cfg_.scheme == Scheme::projected)
    step_projected(st);
  else
    step_penalized(st);
  st.u.tau += cfg_.frame.dtau;
  ++st.step_index;
  double check = 0.0;
  for (double v : st.u.v) check += v;
  if (!std::isfinite(check)) throw std::runtime_error("step: NaN detected");
}

void SignoriniSolver::fill_row(const SolverState& st, WeissRow& row) const {
  const double kappa = cfg_.frame.kappa;
  row.tau = st.u.tau;
  row.W = sys_.weiss_form(st.u.v, kappa);
  row.H = sys_.mass_inner(st.u.v, st.u.v);
  row.react = st.react_work;
  if (st.step_index > 0) {
    const double dtau = cfg_.frame.dtau;
    std::vector<double> du(st.u.v.size());
    for (std::size_t i = 0; i < du.size(); ++i)
      du[i] = (st.u.v[i] - st.prev.v[i]) / dtau;
    row.diss = sys_.mass_inner(du, du);
  }
  if (cfg_.forcing) {
    WeightedField f = sample_field(
        sys_.grid(),
        [&](const std::array<double, 3>& y) { return cfg_.forcing(y, st.u.tau); },
        st.u.tau);
    row.fnorm = l2mu_norm(f, sys_.measure());
  }
  row.Wtilde = row.W + 4.0 * std::exp(-0.5 * st.u.tau) * cfg_.forcing_bound *
                           cfg_.forcing_bound;

  if (c_n_ > 0.0) {  // κ = 3/2 cone diagnostics
    E32Decomposition d =
        (st.step_index == 0)
            ? project_E32(st.u, sys_, c_n_)
            : project_E32_local(st.u, sys_, c_n_, row.e);
    row.lambda = d.lambda;
    row.e = d.e;
    row.vnorm2 = sys_.mass_inner(d.v.v, d.v.v);
    row.Wv = sys_.weiss_form(d.v.v, kappa);
    row.orth1 = d.orth1;
    row.orth2 = d.orth2;
  } else if (m_ > 0) {  // κ = 2m eigenspace diagnostics
    row.lambda = sys_.mass_inner(st.u.v, h2m_.v);
    row.lambda_alpha.resize(p_basis_.size());
    WeightedField v = st.u;
    for (std::size_t a = 0; a < p_basis_.size(); ++a) {
      const double la = sys_.mass_inner(st.u.v, p_basis_[a].v);
      row.lambda_alpha[a] = la;
      for (std::size_t i = 0; i < v.v.size(); ++i)
        v.v[i] -= la * p_basis_[a].v[i];
    }
    row.vnorm2 = sys_.mass_inner(v.v, v.v);
    row.Wv = sys_.weiss_form(v.v, kappa);
    const std::vector<double> dnv = normal_derivative(v);
    row.balpha.resize(p_basis_.size());
    const auto& wb = sys_.measure().boundary;
    const HalfSpaceGrid& g = sys_.grid();
    const int sn = g.shape[g.n - 1];
    for (std::size_t a = 0; a < p_basis_.size(); ++a) {
      double s = 0.0;
      for (std::int64_t b = 0; b < g.boundary_size(); ++b)
        s += wb[static_cast<std::size_t>(b)] * dnv[static_cast<std::size_t>(b)] *
             p_basis_[a].v[static_cast<std::size_t>(b * sn)];
      row.balpha[a] = s;
    }
  }
}

Trajectory SignoriniSolver::solve_trajectory(const WeightedField& initial) const {
  Trajectory out;
  out.trace.kappa = cfg_.frame.kappa;
  out.trace.dtau = cfg_.frame.dtau;
  out.trace.alphas = alphas_;

  SolverState st = init(initial);
  const int nsteps =
      static_cast<int>(std::llround(cfg_.frame.tau_max / cfg_.frame.dtau));
  out.trace.rows.reserve(static_cast<std::size_t>(nsteps) + 1);

  WeissRow row0;
  fill_row(st, row0);
  out.trace.rows.push_back(row0);
  out.snapshots.push_back(st.u);

  for (int k = 0; k < nsteps; ++k) {
    step(st);
    WeissRow row;
    row.e = out.trace.rows.back().e;  // warm start for the direction search
    fill_row(st, row);
    out.trace.rows.push_back(row);
    if (cfg_.snapshot_stride > 0 && (k + 1) % cfg_.snapshot_stride == 0 &&
        k + 1 < nsteps)
      out.snapshots.push_back(st.u);
  }
  if (nsteps > 0) out.snapshots.push_back(st.u);
  out.final_state = std::move(st);
  return out;
}

double SignoriniSolver::forcing_sup(double tau_lo, double tau_hi,
                                    int samples) const {
  if (!cfg_.forcing) return 0.0;
  double sup = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double tau =
        samples == 1 ? tau_lo
                     : tau_lo + (tau_hi - tau_lo) * k / double(samples - 1);
    WeightedField f = sample_field(
        sys_.grid(),
        [&](const std::array<double, 3>& y) { return cfg_.forcing(y, tau); },
        tau);
    sup = std::max(sup, l2mu_norm(f, sys_.measure()));
  }
  return sup;
}

double cross_validate(const WeightedField& initial, const FvSystem& sys,
                      SolverConfig cfg_pen, SolverConfig cfg_proj) {
  cfg_pen.scheme = Scheme::penalized;
  cfg_proj.scheme = Scheme::projected;
  if (cfg_pen.frame.dtau != cfg_proj.frame.dtau ||
      cfg_pen.frame.tau_max != cfg_proj.frame.tau_max)
    throw std::invalid_argument("cross_validate: mismatched frames");
  SignoriniSolver pen(sys, cfg_pen), proj(sys, cfg_proj);
  SolverState sp = pen.init(initial);
  SolverState sq = proj.init(initial);
  const int nsteps = static_cast<int>(
      std::llround(cfg_pen.frame.tau_max / cfg_pen.frame.dtau));
  double worst = 0.0;
  std::vector<double> diff(sp.u.v.size());
  for (int k = 0; k < nsteps; ++k) {
    pen.step(sp);
    proj.step(sq);
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = sp.u.v[i] - sq.u.v[i];
    worst = std::max(worst, std::sqrt(sys.mass_inner(diff, diff)));
  }
  return worst;
}

std::array<double, 3> residual_complementarity(const WeightedField& u) {
  const std::vector<double> tr = boundary_trace(u);
  const std::vector<double> dn = normal_derivative(u);
  double v1 = 0.0, v2 = 0.0, v3 = 0.0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    v1 = std::max(v1, -tr[i]);
    v2 = std::max(v2, dn[i]);
    v3 = std::max(v3, std::abs(tr[i] * dn[i]));
  }
  return {v1, v2, v3};
}

}  // namespace slab
