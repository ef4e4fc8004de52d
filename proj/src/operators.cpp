#include "slab/operators.hpp"

#include <cmath>
#include <stdexcept>

namespace slab {

FvSystem::FvSystem(const HalfSpaceGrid& g) : grid_(g), mu_(make_measure(g)) {
  const std::int64_t N = g.size();
  dirichlet_ = outer_dirichlet_mask(g);

  // free-dof numbering
  free_of_node_.assign(static_cast<std::size_t>(N), -1);
  for (std::int64_t idx = 0; idx < N; ++idx) {
    if (!dirichlet_[static_cast<std::size_t>(idx)]) {
      free_of_node_[static_cast<std::size_t>(idx)] =
          static_cast<std::int64_t>(free_nodes_.size());
      free_nodes_.push_back(idx);
    }
  }
  const int nax = g.n - 1;
  for (std::size_t f = 0; f < free_nodes_.size(); ++f) {
    auto i = g.unindex(free_nodes_[f]);
    if (i[nax] == 0) boundary_free_.push_back(static_cast<std::int64_t>(f));
  }

  // edges with midpoint Gaussian weight and transverse trapezoid factors
  const double hpow = std::pow(g.h, g.n - 2);
  for (int ax = 0; ax < g.n; ++ax) {
    std::int64_t stride = 1;
    for (int b = ax + 1; b < g.n; ++b) stride *= g.shape[b];
    for (std::int64_t idx = 0; idx < N; ++idx) {
      auto i = g.unindex(idx);
      if (i[ax] == g.shape[ax] - 1) continue;
      double trap = 1.0;
      double r2 = 0.0;
      for (int b = 0; b < g.n; ++b) {
        double y = g.coord(b, i[b]);
        if (b == ax) {
          y += 0.5 * g.h;
        } else if (i[b] == 0 || i[b] == g.shape[b] - 1) {
          trap *= 0.5;
        }
        r2 += y * y;
      }
      edge_i_.push_back(idx);
      edge_j_.push_back(idx + stride);
      edge_c_.push_back(trap * hpow * std::exp(-r2));
    }
  }

  // assemble K on free dofs; edges to Dirichlet nodes contribute only the
  // diagonal term (the pinned endpoint holds value zero)
  const std::int64_t Nf = n_free();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(edge_c_.size() * 4);
  for (std::size_t e = 0; e < edge_c_.size(); ++e) {
    const std::int64_t fi = free_of_node_[static_cast<std::size_t>(edge_i_[e])];
    const std::int64_t fj = free_of_node_[static_cast<std::size_t>(edge_j_[e])];
    const double c = edge_c_[e];
    if (fi >= 0) trips.emplace_back(fi, fi, c);
    if (fj >= 0) trips.emplace_back(fj, fj, c);
    if (fi >= 0 && fj >= 0) {
      trips.emplace_back(fi, fj, -c);
      trips.emplace_back(fj, fi, -c);
    }
  }
  Kff_.resize(Nf, Nf);
  Kff_.setFromTriplets(trips.begin(), trips.end());
  Mf_.resize(Nf);
  for (std::int64_t f = 0; f < Nf; ++f)
    Mf_[f] = mu_.weights[static_cast<std::size_t>(free_nodes_[f])];
}

double FvSystem::dirichlet_form(const std::vector<double>& U) const {
  double s = 0.0;
  for (std::size_t e = 0; e < edge_c_.size(); ++e) {
    const double d = U[static_cast<std::size_t>(edge_i_[e])] -
                     U[static_cast<std::size_t>(edge_j_[e])];
    s += edge_c_[e] * d * d;
  }
  return s;
}

double FvSystem::mass_inner(const std::vector<double>& U,
                            const std::vector<double>& V) const {
  double s = 0.0;
  for (std::size_t i = 0; i < U.size(); ++i) s += mu_.weights[i] * U[i] * V[i];
  return s;
}

double FvSystem::weiss_form(const std::vector<double>& U, double kappa) const {
  return 0.25 * dirichlet_form(U) - 0.5 * kappa * mass_inner(U, U);
}

double FvSystem::weiss_cross(const std::vector<double>& U,
                             const std::vector<double>& V, double kappa) const {
  double s = 0.0;
  for (std::size_t e = 0; e < edge_c_.size(); ++e) {
    const auto i = static_cast<std::size_t>(edge_i_[e]);
    const auto j = static_cast<std::size_t>(edge_j_[e]);
    s += 0.25 * edge_c_[e] * (U[i] - U[j]) * (V[i] - V[j]);
  }
  return s - 0.5 * kappa * mass_inner(U, V);
}

std::vector<double> FvSystem::apply_A(const std::vector<double>& U,
                                      double kappa) const {
  std::vector<double> out(U.size(), 0.0);
  for (std::size_t e = 0; e < edge_c_.size(); ++e) {
    const auto i = static_cast<std::size_t>(edge_i_[e]);
    const auto j = static_cast<std::size_t>(edge_j_[e]);
    const double f = 0.25 * edge_c_[e] * (U[i] - U[j]);
    out[i] += f;
    out[j] -= f;
  }
  for (std::size_t i = 0; i < U.size(); ++i)
    out[i] -= 0.5 * kappa * mu_.weights[i] * U[i];
  return out;
}

Eigen::VectorXd FvSystem::restrict_free(const std::vector<double>& U) const {
  Eigen::VectorXd out(n_free());
  for (std::int64_t f = 0; f < n_free(); ++f)
    out[f] = U[static_cast<std::size_t>(free_nodes_[f])];
  return out;
}

void FvSystem::scatter_free(const Eigen::VectorXd& Uf,
                            std::vector<double>& U) const {
  for (std::int64_t f = 0; f < n_free(); ++f)
    U[static_cast<std::size_t>(free_nodes_[f])] = Uf[f];
}

ImplicitStepper::ImplicitStepper(const FvSystem& sys, double kappa, double dtau,
                                 bool build_schur)
    : sys_(sys), kappa_(kappa), dtau_(dtau) {
  if (!(dtau > 0.0) || dtau >= 2.0 / kappa)
    throw std::invalid_argument(
        "ImplicitStepper: dtau must lie in (0, 2/kappa) for positivity");
  Eigen::SparseMatrix<double> G = (0.25 * dtau) * sys.K_free();
  const Eigen::VectorXd diag =
      (1.0 - 0.5 * kappa * dtau) * sys.M_free();
  for (std::int64_t i = 0; i < sys.n_free(); ++i) G.coeffRef(i, i) += diag[i];
  G.makeCompressed();
  ldlt_.compute(G);
  if (ldlt_.info() != Eigen::Success)
    throw std::runtime_error("ImplicitStepper: factorization failed");

  if (build_schur) {
    const auto& bf = sys.boundary_free();
    const std::int64_t nb = static_cast<std::int64_t>(bf.size());
    S_.resize(nb, nb);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(sys.n_free());
    for (std::int64_t c = 0; c < nb; ++c) {
      e[bf[static_cast<std::size_t>(c)]] = 1.0;
      const Eigen::VectorXd col = ldlt_.solve(e);
      for (std::int64_t r = 0; r < nb; ++r)
        S_(r, c) = col[bf[static_cast<std::size_t>(r)]];
      e[bf[static_cast<std::size_t>(c)]] = 0.0;
    }
    // symmetrize against round-off
    S_ = 0.5 * (S_ + S_.transpose()).eval();
    has_schur_ = true;
  }
}

Eigen::VectorXd ImplicitStepper::solve(const Eigen::VectorXd& rhs) const {
  return ldlt_.solve(rhs);
}

const Eigen::MatrixXd& ImplicitStepper::schur() const {
  if (!has_schur_)
    throw std::logic_error("ImplicitStepper: Schur complement not built");
  return S_;
}

}  // namespace slab
