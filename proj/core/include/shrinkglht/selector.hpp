#pragma once

// Data-driven choice of the shrinkage function: maximize the empirical
// local-power functional Xi(f) = [-1/(2 pi i) oint f h] / sqrt(Delta(f))
// over a ridge family, or over three-term ridge mixtures.

#include <utility>
#include <vector>

#include "shrinkglht/shrinkage.hpp"
#include "shrinkglht/spectral.hpp"

namespace shrinkglht {

struct RidgeBounds {
  double lo = -20.0;  // most negative ridge parameter
  double hi = -0.01;  // least negative ridge parameter
  int grid_size = 100;
};

struct SelectionResult {
  ShrinkageSpec f_star = ShrinkageSpec::identity();
  double xi_star = 0.0;
  /// (parameter, xi) pairs in evaluation order. For ridge selection the
  /// parameter is ell; for higher-order selection it is the index of the
  /// candidate in the order evaluated.
  std::vector<std::pair<double, double>> trace;
};

double xi_hat_ridge(const SpectralSummary& spec, double ell, const PriorWeights& weights);

/// Quadrature for Ridge and Identity, closed-form collapse sum_j w_j h(r_j)
/// for ridge mixtures and polynomial inverses.
double xi_hat_general(const SpectralSummary& spec, const ShrinkageSpec& f,
                      const PriorWeights& weights, const Contour& c);

RidgeBounds default_ridge_bounds(const SpectralSummary& spec);
void validate_bounds(const RidgeBounds& bounds);

/// Log-spaced ridge parameters from `hi` (smallest |ell|) to `lo`.
std::vector<double> log_grid(const RidgeBounds& bounds, int count);

/// Grid pass over `bounds.grid_size` log-spaced points, then golden-section
/// refinement inside the bracketing cell. Ties go to the smaller |ell|.
/// `threads` > 1 evaluates the grid concurrently; the result does not depend
/// on it.
SelectionResult select_ridge(const SpectralSummary& spec, const PriorWeights& weights,
                             const RidgeBounds& bounds, int threads = 1);

/// Best three-root ridge mixture over a log-spaced root grid in [lo, hi],
/// with mixture weights solving the generalized Rayleigh problem
/// w ∝ D^{-1} h. Single roots are candidates too, so the result never falls
/// below the best pure ridge on the same grid.
SelectionResult select_higher_order(const SpectralSummary& spec, const PriorWeights& weights,
                                    const RidgeBounds& bounds, int root_grid_size = 12);

/// Optimal Xi and weights for a fixed set of distinct roots. Throws SingularD
/// if the kernel matrix is not positive definite.
struct RayleighSolution {
  std::vector<double> weights;
  double xi = 0.0;
};
RayleighSolution rayleigh_weights(const SpectralSummary& spec, const std::vector<double>& roots,
                                  const PriorWeights& prior);

}  // namespace shrinkglht
