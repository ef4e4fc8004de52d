#include "slab/stationary.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <stdexcept>

#include "slab/exact.hpp"

namespace slab {

namespace {

// Restriction of the free-dof numbering to the unpinned dofs.
struct SubSpace {
  std::vector<std::int64_t> sub_of_free;  // free dof -> sub dof or -1
  std::vector<std::int64_t> free_of_sub;  // sub dof -> free dof
};

SubSpace make_subspace(const FvSystem& sys,
                       const std::vector<std::uint8_t>& pinned) {
  const auto& free_nodes = sys.free_nodes();
  SubSpace s;
  s.sub_of_free.assign(free_nodes.size(), -1);
  for (std::size_t f = 0; f < free_nodes.size(); ++f) {
    if (!pinned.empty() && pinned[static_cast<std::size_t>(free_nodes[f])]) {
      continue;
    }
    s.sub_of_free[f] = static_cast<std::int64_t>(s.free_of_sub.size());
    s.free_of_sub.push_back(static_cast<std::int64_t>(f));
  }
  return s;
}

}  // namespace

EigenPair eigenpair_near(const FvSystem& sys, double kappa, double shift,
                         const std::vector<std::uint8_t>& pinned,
                         const WeightedField* start, int iters) {
  if (!pinned.empty() &&
      pinned.size() != static_cast<std::size_t>(sys.grid().size())) {
    throw std::invalid_argument("eigenpair_near: pinned mask size mismatch");
  }
  const SubSpace sub = make_subspace(sys, pinned);
  const auto n = static_cast<Eigen::Index>(sub.free_of_sub.size());
  if (n == 0) throw std::invalid_argument("eigenpair_near: empty subspace");

  // A = ¼K - (κ/2)M and the shifted matrix A - shift·M on the sub dofs.
  const Eigen::SparseMatrix<double>& K = sys.K_free();
  const Eigen::VectorXd& M = sys.M_free();
  Eigen::VectorXd Msub(n);
  for (Eigen::Index s = 0; s < n; ++s) Msub[s] = M[sub.free_of_sub[s]];

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(K.nonZeros()));
  for (int col = 0; col < K.outerSize(); ++col) {
    const std::int64_t sc = sub.sub_of_free[col];
    if (sc < 0) continue;
    for (Eigen::SparseMatrix<double>::InnerIterator it(K, col); it; ++it) {
      const std::int64_t sr = sub.sub_of_free[it.row()];
      if (sr < 0) continue;
      trips.emplace_back(static_cast<int>(sr), static_cast<int>(sc),
                         0.25 * it.value());
    }
  }
  for (Eigen::Index s = 0; s < n; ++s) {
    trips.emplace_back(static_cast<int>(s), static_cast<int>(s),
                       -0.5 * kappa * Msub[s]);
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());

  Eigen::SparseMatrix<double> shifted = A;
  for (Eigen::Index s = 0; s < n; ++s) {
    shifted.coeffRef(s, s) -= shift * Msub[s];
  }
  shifted.makeCompressed();

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(shifted);
  if (lu.info() != Eigen::Success) {
    throw std::runtime_error("eigenpair_near: shifted factorization failed");
  }

  // Start vector: the supplied field restricted to the sub dofs, or ones.
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  if (start != nullptr) {
    const Eigen::VectorXd xf = sys.restrict_free(start->v);
    for (Eigen::Index s = 0; s < n; ++s) x[s] = xf[sub.free_of_sub[s]];
  }
  double xn = std::sqrt(x.dot(Msub.cwiseProduct(x)));
  if (!(xn > 0.0)) x = Eigen::VectorXd::Ones(n);

  double nu = shift;
  for (int k = 0; k < iters; ++k) {
    x = lu.solve(Msub.cwiseProduct(x));
    xn = std::sqrt(x.dot(Msub.cwiseProduct(x)));
    if (!(xn > 0.0) || !std::isfinite(xn)) {
      throw std::runtime_error("eigenpair_near: iteration broke down");
    }
    x /= xn;
    nu = x.dot(A * x);
    const Eigen::VectorXd r = A * x - nu * Msub.cwiseProduct(x);
    const double res = std::sqrt(r.dot(r.cwiseQuotient(Msub)));
    if (k >= 2 && res < 1e-12 * (std::abs(nu) + 1.0)) break;
  }

  // Fix the sign against the start vector.
  if (start != nullptr) {
    Eigen::VectorXd s0(n);
    const Eigen::VectorXd xf = sys.restrict_free(start->v);
    for (Eigen::Index s = 0; s < n; ++s) s0[s] = xf[sub.free_of_sub[s]];
    if (x.dot(Msub.cwiseProduct(s0)) < 0.0) x = -x;
  } else if (x.sum() < 0.0) {
    x = -x;
  }

  EigenPair out;
  out.nu = nu;
  out.mode.grid = sys.grid();
  out.mode.tau = 0.0;
  out.mode.v.assign(static_cast<std::size_t>(sys.grid().size()), 0.0);
  Eigen::VectorXd xf = Eigen::VectorXd::Zero(sys.n_free());
  for (Eigen::Index s = 0; s < n; ++s) xf[sub.free_of_sub[s]] = x[s];
  sys.scatter_free(xf, out.mode.v);
  return out;
}

std::vector<std::uint8_t> slit_mask(const HalfSpaceGrid& g,
                                    const std::array<double, 3>& e) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(g.size()), 0);
  const int nax = g.n - 1;
  for (std::int64_t idx = 0; idx < g.size(); ++idx) {
    const auto i = g.unindex(idx);
    if (i[nax] != 0) continue;
    const auto y = g.point(idx);
    double s = 0.0;
    for (int a = 0; a < nax; ++a) s += y[a] * e[a];
    if (s <= 1e-12) mask[static_cast<std::size_t>(idx)] = 1;
  }
  return mask;
}

SlitModes slit_modes(const FvSystem& sys, const std::array<double, 3>& e,
                     double kappa) {
  const HalfSpaceGrid& g = sys.grid();
  const auto pinned = slit_mask(g, e);

  const Profile32 prof{1.0, e, normalize_profile(g.n, g)};
  const WeightedField he = eval_profile32(prof, g);
  const WeightedField hm = eval_halfmode(e, g);

  SlitModes out;
  out.psi0 = eigenpair_near(sys, kappa, 0.0, pinned, &he);
  out.phi = eigenpair_near(sys, kappa, -0.55, pinned, &hm);

  // Admissibility of the near-kernel mode as a constrained flow state:
  // nonnegative trace off the slit, nonnegative reaction A ψ0 on it.
  const auto reaction = sys.apply_A(out.psi0.mode.v, kappa);
  const int nax = g.n - 1;
  double max_reaction = 0.0;
  out.min_trace = 0.0;
  out.min_reaction = 0.0;
  for (std::int64_t idx = 0; idx < g.size(); ++idx) {
    const auto i = g.unindex(idx);
    if (i[nax] != 0) continue;
    if (sys.dirichlet()[static_cast<std::size_t>(idx)]) continue;
    if (pinned[static_cast<std::size_t>(idx)]) {
      const double r = reaction[static_cast<std::size_t>(idx)];
      out.min_reaction = std::min(out.min_reaction, r);
      max_reaction = std::max(max_reaction, std::abs(r));
    } else {
      out.min_trace = std::min(out.min_trace,
                               out.psi0.mode.v[static_cast<std::size_t>(idx)]);
    }
  }
  out.admissible = out.min_trace >= -1e-10 &&
                   out.min_reaction >= -1e-6 * (max_reaction + 1e-30);
  return out;
}

}  // namespace slab
