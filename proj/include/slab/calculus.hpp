#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "slab/grid.hpp"

namespace slab {

/// Node-sampled vector field; comp[a] holds the a-th component.
struct VectorField {
  HalfSpaceGrid grid;
  std::array<std::vector<double>, 3> comp;
};

/// Gaussian-weighted inner product Σ w_i a_i b_i.
/// Throws std::invalid_argument on grid mismatch.
double inner_mu(const WeightedField& a, const WeightedField& b,
                const GaussianMeasure& m);

/// Same sum with masked nodes skipped (mask value != 0 means skip).
double inner_mu_masked(const WeightedField& a, const WeightedField& b,
                       const GaussianMeasure& m,
                       const std::vector<std::uint8_t>& skip);

double l2mu_norm(const WeightedField& a, const GaussianMeasure& m);

/// sqrt(‖a‖² + ‖∇a‖²) with the gradient from gradient_fd.
double w12mu_norm(const WeightedField& a, const GaussianMeasure& m);

/// Finite-difference gradient: centered stencils on interior nodes,
/// one-sided second-order stencils on all grid faces (including y_n = 0).
/// Exact on quadratics.
VectorField gradient_fd(const WeightedField& a);

/// Finite-difference Laplacian: centered second differences interior,
/// one-sided second-order (four-point) stencils on faces.
WeightedField laplacian_fd(const WeightedField& a);

/// One-sided second-order normal derivative on the slice {y_n = 0};
/// result indexed like GaussianMeasure::boundary.
std::vector<double> normal_derivative(const WeightedField& a);

/// Values of a field on the slice {y_n = 0}.
std::vector<double> boundary_trace(const WeightedField& a);

/// Σ boundary weights · g over the slice {y_n = 0}.
double boundary_trace_integral(const std::vector<double>& g,
                               const GaussianMeasure& m);

/// Nodes within `width` cells of the slit edge {y'·e = 0, y_n = 0}.
/// Quadratures of square-root-singular gradients skip this collar and incur
/// an O(h^{3/2}) error from the excluded cells.
std::vector<std::uint8_t> edge_collar_mask(const HalfSpaceGrid& g,
                                           const std::array<double, 3>& e,
                                           int width = 1);

/// Nodes on the truncation faces (tangential = ±R or y_n = R), where
/// homogeneous Dirichlet data is imposed. The constraint plane y_n = 0 is
/// not included.
std::vector<std::uint8_t> outer_dirichlet_mask(const HalfSpaceGrid& g);

}  // namespace slab
