#pragma once

// Composite test over a panel of prior weights: the maximum of the
// selected-ridge statistics, calibrated by a parametric bootstrap from the
// estimated correlation matrix of the selected ridges.

#include <cstdint>
#include <vector>

#include "shrinkglht/glht.hpp"
#include "shrinkglht/random.hpp"
#include "shrinkglht/selector.hpp"

namespace shrinkglht {

struct CompositeConfig {
  std::vector<PriorWeights> panel = canonical_panel();
  Criterion criterion = Criterion::LR;
  int bootstrap_G = 10000;
  std::uint64_t seed = kDefaultSeed;
  int threads = 1;
};

void validate_config(const CompositeConfig& cfg);

struct PriorResult {
  PriorWeights prior;
  double ell_star = 0.0;
  double statistic = 0.0;
};

struct CompositeOutcome {
  std::vector<PriorResult> per_prior;
  double t_max = 0.0;
  Matrix delta_star;
  Matrix delta_star_psd;
  double p_value = 1.0;
};

/// Normalized ridge covariance matrix with unit diagonal.
Matrix delta_star(const SpectralSummary& spec, const std::vector<double>& ells);

/// Negative eigenvalues set to zero. PSD input is returned unchanged.
Matrix psd_project(const Matrix& a);

/// Fraction of G draws of max_i Z_i, Z ~ N(0, delta_psd), exceeding t_max.
/// Draws come in fixed chunks with one substream each, so `threads` does
/// not affect the result.
double bootstrap_pvalue(const Matrix& delta_psd, double t_max, int G, std::uint64_t seed,
                        int threads = 1);

CompositeOutcome run_composite(const FitArtifacts& fit, const CompositeConfig& cfg);
CompositeOutcome run_composite(const GlhtProblem& problem, const CompositeConfig& cfg);

}  // namespace shrinkglht
