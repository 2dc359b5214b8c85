#include "shrinkglht/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

#include "shrinkglht/error.hpp"

namespace shrinkglht {
namespace {

constexpr double kNegativeSlack = 1e-10;
constexpr double kPoleGuard = 1e-12;
constexpr double kDenominatorGuard = 1e-12;
constexpr double kCoincidentArgs = 1e-8;

void check_off_spectrum(const SpectralSummary& spec, Complex z) {
  if (std::abs(z.imag()) > kPoleGuard) return;
  for (double lambda : spec.eigenvalues()) {
    if (std::abs(Complex(lambda) - z) <= kPoleGuard) {
      fail(ErrorKind::PoleProximity,
           "argument " + std::to_string(z.real()) + " lies on the sample spectrum");
    }
  }
}

}  // namespace

SpectralSummary SpectralSummary::from_eigenvalues(std::vector<double> eigenvalues,
                                                  std::int64_t n) {
  if (eigenvalues.empty()) fail(ErrorKind::InvalidArgument, "empty spectrum");
  if (n < 1) fail(ErrorKind::InvalidArgument, "effective sample size must be positive");
  for (double& v : eigenvalues) {
    if (!std::isfinite(v)) fail(ErrorKind::InvalidArgument, "non-finite eigenvalue");
    if (v < -kNegativeSlack) {
      fail(ErrorKind::InvalidArgument, "negative eigenvalue " + std::to_string(v));
    }
    if (v < 0.0) v = 0.0;
  }
  std::sort(eigenvalues.begin(), eigenvalues.end(), std::greater<>());

  SpectralSummary out;
  out.n_ = n;
  out.gamma_ = static_cast<double>(eigenvalues.size()) / static_cast<double>(n);
  out.trace_mean_ = std::accumulate(eigenvalues.begin(), eigenvalues.end(), 0.0) /
                    static_cast<double>(eigenvalues.size());
  out.eigenvalues_ = std::move(eigenvalues);
  return out;
}

std::vector<PriorWeights> canonical_panel() {
  return {PriorWeights{1, 0, 0}, PriorWeights{0, 1, 0}, PriorWeights{0, 0, 1}};
}

void validate_prior(const PriorWeights& w, const SpectralSummary& spec) {
  const double upper = spec.lambda_max();
  auto poly = [&](double x) { return w.t0 + w.t1 * x + w.t2 * x * x; };
  double lowest = std::min(poly(0.0), poly(upper));
  if (w.t2 > 0.0) {
    const double vertex = -w.t1 / (2.0 * w.t2);
    if (vertex > 0.0 && vertex < upper) lowest = std::min(lowest, poly(vertex));
  }
  const double scale = std::abs(w.t0) + std::abs(w.t1) * upper + std::abs(w.t2) * upper * upper;
  if (lowest < -1e-12 * std::max(scale, 1.0)) {
    fail(ErrorKind::InvalidArgument, "prior weights give a negative quadratic on the spectrum");
  }
}

ResolventMoments resolvent_moments(const SpectralSummary& spec, Complex z) {
  check_off_spectrum(spec, z);
  Complex m = 0.0;
  Complex dm = 0.0;
  for (double lambda : spec.eigenvalues()) {
    const Complex r = 1.0 / (lambda - z);
    m += r;
    dm += r * r;
  }
  const double inv_p = 1.0 / static_cast<double>(spec.p());
  return {m * inv_p, dm * inv_p};
}

Complex stieltjes(const SpectralSummary& spec, Complex z) {
  check_off_spectrum(spec, z);
  Complex m = 0.0;
  for (double lambda : spec.eigenvalues()) m += 1.0 / (lambda - z);
  return m / static_cast<double>(spec.p());
}

Complex stieltjes_deriv(const SpectralSummary& spec, Complex z) {
  return resolvent_moments(spec, z).dm;
}

namespace {

Complex theta_from_m(const SpectralSummary& spec, Complex z, Complex m) {
  const double g = spec.gamma();
  const Complex denom = 1.0 - g - g * z * m;
  if (std::abs(denom) <= kDenominatorGuard) {
    fail(ErrorKind::DegenerateDenominator, "companion transform denominator vanishes");
  }
  return 1.0 / denom;
}

}  // namespace

Complex theta_hat(const SpectralSummary& spec, Complex z) {
  return theta_from_m(spec, z, stieltjes(spec, z));
}

Complex delta_kernel_hat(const SpectralSummary& spec, Complex z1, Complex z2) {
  if (std::abs(z1 - z2) < kCoincidentArgs) {
    const Complex z = 0.5 * (z1 + z2);
    const auto [m, dm] = resolvent_moments(spec, z);
    const Complex t = theta_from_m(spec, z, m);
    const Complex t3 = t * t * t;
    const double g = spec.gamma();
    return g * (1.0 + z * m) * t3 + g * z * (m + z * dm) * t3 * t;
  }
  const Complex t1 = theta_hat(spec, z1);
  const Complex t2 = theta_hat(spec, z2);
  return t1 * t2 * ((z1 * t1 - z2 * t2) / (z1 - z2) - 1.0);
}

Complex rho_hat(const SpectralSummary& spec, Complex z, int j) {
  if (j < 0 || j > 2) fail(ErrorKind::InvalidArgument, "rho_hat index must be 0, 1 or 2");
  const Complex m = stieltjes(spec, z);
  if (j == 0) return m;
  const Complex t = theta_from_m(spec, z, m);
  const Complex rho1 = t * (1.0 + z * m);
  if (j == 1) return rho1;
  return t * (spec.trace_mean() + z * rho1);
}

Complex h_hat(const SpectralSummary& spec, Complex z, const PriorWeights& w) {
  const Complex m = stieltjes(spec, z);
  Complex out = w.t0 * m;
  if (w.t1 == 0.0 && w.t2 == 0.0) return out;
  const Complex t = theta_from_m(spec, z, m);
  const Complex rho1 = t * (1.0 + z * m);
  const Complex rho2 = t * (spec.trace_mean() + z * rho1);
  return out + w.t1 * rho1 + w.t2 * rho2;
}

}  // namespace shrinkglht
