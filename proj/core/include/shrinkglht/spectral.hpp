#pragma once

// Plug-in spectral transforms of the sample error covariance.
//
// Everything here is a pure function of a SpectralSummary: the Stieltjes
// transform m(z) = p^-1 tr(S - zI)^-1 of the sample spectrum, the companion
// transform Theta(z) = 1 / (1 - gamma - gamma z m(z)), the variance kernel
// delta(z1, z2) and the spectral-moment functions rho_j used by polynomial
// priors. All transforms take complex arguments; the tests mostly use
// real z < 0, while contour quadrature needs the complex plane.

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace shrinkglht {

using Complex = std::complex<double>;

class SpectralSummary {
 public:
  /// Sorts descending, clamps values in [-1e-10, 0) to zero and rejects
  /// anything more negative. `n` is the effective sample size N - k.
  static SpectralSummary from_eigenvalues(std::vector<double> eigenvalues, std::int64_t n);

  /// Empty summary; only useful as a placeholder before assignment.
  SpectralSummary() = default;

  std::span<const double> eigenvalues() const { return eigenvalues_; }
  std::int64_t p() const { return static_cast<std::int64_t>(eigenvalues_.size()); }
  std::int64_t n() const { return n_; }
  double gamma() const { return gamma_; }
  double trace_mean() const { return trace_mean_; }
  double lambda_max() const { return eigenvalues_.front(); }
  double lambda_min() const { return eigenvalues_.back(); }

 private:
  std::vector<double> eigenvalues_;
  std::int64_t n_ = 0;
  double gamma_ = 0.0;
  double trace_mean_ = 0.0;
};

/// Weights (t0, t1, t2) of the quadratic prior R R^T = t0 I + t1 Sigma + t2 Sigma^2.
struct PriorWeights {
  double t0 = 1.0;
  double t1 = 0.0;
  double t2 = 0.0;

  bool operator==(const PriorWeights&) const = default;
};

/// The three canonical weights (1,0,0), (0,1,0), (0,0,1).
std::vector<PriorWeights> canonical_panel();

/// Throws InvalidArgument unless t0 + t1 x + t2 x^2 >= 0 on [0, lambda_max].
void validate_prior(const PriorWeights& weights, const SpectralSummary& spec);

Complex stieltjes(const SpectralSummary& spec, Complex z);
Complex stieltjes_deriv(const SpectralSummary& spec, Complex z);
Complex theta_hat(const SpectralSummary& spec, Complex z);

/// Two-point kernel for |z1 - z2| >= 1e-8, analytic diagonal limit otherwise.
Complex delta_kernel_hat(const SpectralSummary& spec, Complex z1, Complex z2);

Complex rho_hat(const SpectralSummary& spec, Complex z, int j);
Complex h_hat(const SpectralSummary& spec, Complex z, const PriorWeights& weights);

/// Stieltjes value and derivative together; what the kernel evaluations need.
struct ResolventMoments {
  Complex m;
  Complex dm;
};
ResolventMoments resolvent_moments(const SpectralSummary& spec, Complex z);

}  // namespace shrinkglht
