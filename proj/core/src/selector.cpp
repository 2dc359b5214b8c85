#include "shrinkglht/selector.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include "shrinkglht/error.hpp"

namespace shrinkglht {
namespace {

constexpr double kMinVariance = 1e-14;
constexpr double kRayleighCondition = 1e-6;
constexpr double kGoldenWidth = 1e-4;  // in log|ell|
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double safe_xi(const SpectralSummary& spec, double ell, const PriorWeights& w) {
  try {
    return xi_hat_ridge(spec, ell, w);
  } catch (const Error&) {
    return kNaN;
  }
}

std::vector<double> evaluate_grid(const SpectralSummary& spec, const std::vector<double>& grid,
                                  const PriorWeights& w, int threads) {
  std::vector<double> values(grid.size(), kNaN);
  const std::size_t workers =
      std::clamp<std::size_t>(threads > 0 ? static_cast<std::size_t>(threads) : 1, 1, grid.size());
  if (workers == 1) {
    for (std::size_t i = 0; i < grid.size(); ++i) values[i] = safe_xi(spec, grid[i], w);
    return values;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < grid.size(); i += workers) values[i] = safe_xi(spec, grid[i], w);
    });
  }
  for (auto& th : pool) th.join();
  return values;
}

}  // namespace

double xi_hat_ridge(const SpectralSummary& spec, double ell, const PriorWeights& weights) {
  const double delta = delta_hat_ridge(spec, ell, ell);
  if (!(delta > kMinVariance)) {
    fail(ErrorKind::NonPositiveVariance, "ridge variance estimate is not positive");
  }
  return h_hat(spec, ell, weights).real() / std::sqrt(delta);
}

double xi_hat_general(const SpectralSummary& spec, const ShrinkageSpec& f,
                      const PriorWeights& weights, const Contour& c) {
  if (f.is<ShrinkageSpec::ClassicalInverse>()) {
    fail(ErrorKind::UnsupportedStandardization, "classical inverse has no power functional");
  }
  double numerator = 0.0;
  double delta = 0.0;
  if (f.is<ShrinkageSpec::Ridge>() || f.is<ShrinkageSpec::Identity>()) {
    validate_contour(c, spec, f);
    const ContourNodes nodes = contour_nodes(c);
    Complex sum = 0.0;
    for (std::size_t i = 0; i < nodes.z.size(); ++i) {
      sum += evaluate_f(f, nodes.z[i]) * h_hat(spec, nodes.z[i], weights) * nodes.dz[i];
    }
    const Complex value = sum * Complex(0.0, 1.0 / (2.0 * std::numbers::pi));
    if (std::abs(value.imag()) > 1e-6 * (1.0 + std::abs(value))) {
      fail(ErrorKind::NonRealResult, "power functional quadrature is not real");
    }
    numerator = value.real();
    delta = delta_hat_numeric(spec, f, f, c);
  } else {
    const ShrinkageSpec mix = f.is<ShrinkageSpec::PolyInverse>() ? partial_fractions(f) : f;
    const auto& terms = mix.as<ShrinkageSpec::RidgeMixture>().terms;
    for (const auto& t : terms) numerator += t.weight * h_hat(spec, t.root, weights).real();
    delta = mixture_delta(spec, terms, terms);
  }
  if (!(delta > kMinVariance)) {
    fail(ErrorKind::NonPositiveVariance, "variance estimate is not positive");
  }
  return numerator / std::sqrt(delta);
}

RidgeBounds default_ridge_bounds(const SpectralSummary& spec) {
  if (!(spec.lambda_max() > 0.0)) fail(ErrorKind::ZeroSpectrum, "sample spectrum is identically zero");
  return RidgeBounds{-20.0 * spec.lambda_max(), -spec.trace_mean() / 100.0, 100};
}

void validate_bounds(const RidgeBounds& b) {
  if (!(b.lo < b.hi) || !(b.hi < 0.0) || !std::isfinite(b.lo)) {
    fail(ErrorKind::InvalidArgument, "ridge bounds need lo < hi < 0");
  }
  if (b.grid_size < 16) fail(ErrorKind::InvalidArgument, "ridge grid needs at least 16 points");
}

std::vector<double> log_grid(const RidgeBounds& b, int count) {
  if (count < 1) fail(ErrorKind::InvalidArgument, "grid needs at least one point");
  if (count == 1) return {b.hi};
  const double a = std::log(-b.hi);
  const double z = std::log(-b.lo);
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    out[static_cast<std::size_t>(i)] = -std::exp(a + (z - a) * i / (count - 1));
  }
  out.front() = b.hi;
  out.back() = b.lo;
  return out;
}

SelectionResult select_ridge(const SpectralSummary& spec, const PriorWeights& weights,
                             const RidgeBounds& bounds, int threads) {
  validate_bounds(bounds);
  validate_prior(weights, spec);
  const std::vector<double> grid = log_grid(bounds, bounds.grid_size);
  const std::vector<double> values = evaluate_grid(spec, grid, weights, threads);

  SelectionResult out;
  std::ptrdiff_t best = -1;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (std::isnan(values[i])) continue;
    out.trace.emplace_back(grid[i], values[i]);
    if (best < 0 || values[i] > values[static_cast<std::size_t>(best)]) {
      best = static_cast<std::ptrdiff_t>(i);
    }
  }
  if (best < 0) {
    fail(ErrorKind::NonPositiveVariance, "power functional undefined on the whole ridge grid");
  }
  double best_ell = grid[static_cast<std::size_t>(best)];
  double best_xi = values[static_cast<std::size_t>(best)];

  // Golden-section search in log|ell| over the cell(s) around the grid maximum.
  const std::size_t left = best > 0 ? static_cast<std::size_t>(best) - 1 : 0;
  const std::size_t right = std::min(grid.size() - 1, static_cast<std::size_t>(best) + 1);
  double a = std::log(-grid[left]);
  double b = std::log(-grid[right]);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  auto objective = [&](double u) { return safe_xi(spec, -std::exp(u), weights); };
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = objective(c);
  double fd = objective(d);
  double refined_u = c;
  double refined_xi = kNaN;
  for (int it = 0; it < 60 && (b - a) > kGoldenWidth; ++it) {
    if (!(fc < fd)) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(d);
    }
  }
  if (!std::isnan(fc) && (std::isnan(fd) || fc >= fd)) {
    refined_u = c;
    refined_xi = fc;
  } else if (!std::isnan(fd)) {
    refined_u = d;
    refined_xi = fd;
  }
  if (!std::isnan(refined_xi) && refined_xi > best_xi) {
    best_ell = -std::exp(refined_u);
    best_xi = refined_xi;
    out.trace.emplace_back(best_ell, best_xi);
  }

  out.f_star = ShrinkageSpec::ridge(best_ell);
  out.xi_star = best_xi;
  return out;
}

RayleighSolution rayleigh_weights(const SpectralSummary& spec, const std::vector<double>& roots,
                                  const PriorWeights& prior) {
  const auto m = static_cast<Eigen::Index>(roots.size());
  if (m < 1) fail(ErrorKind::InvalidArgument, "need at least one root");
  Eigen::MatrixXd kernel(m, m);
  Eigen::VectorXd h(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    h(j) = h_hat(spec, roots[static_cast<std::size_t>(j)], prior).real();
    for (Eigen::Index k = 0; k <= j; ++k) {
      kernel(j, k) = delta_hat_ridge(spec, roots[static_cast<std::size_t>(j)],
                                     roots[static_cast<std::size_t>(k)]);
      kernel(k, j) = kernel(j, k);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(kernel);
  const Eigen::VectorXd ev = solver.eigenvalues();
  if (!(ev(0) > kRayleighCondition * ev(m - 1)) || !(ev(m - 1) > kMinVariance)) {
    fail(ErrorKind::SingularD, "ridge kernel matrix is singular");
  }
  const Eigen::VectorXd coords = solver.eigenvectors().transpose() * h;
  Eigen::VectorXd w = solver.eigenvectors() * coords.cwiseQuotient(ev);
  const double quad = h.dot(w);

  const double sum = w.sum();
  const double l1 = w.cwiseAbs().sum();
  if (sum > 1e-12 * l1) {
    w /= sum;
  } else if (l1 > 0.0) {
    w /= w.cwiseAbs().maxCoeff();
  }

  RayleighSolution out;
  out.weights.assign(w.data(), w.data() + m);
  out.xi = std::sqrt(std::max(quad, 0.0));
  return out;
}

SelectionResult select_higher_order(const SpectralSummary& spec, const PriorWeights& weights,
                                    const RidgeBounds& bounds, int root_grid_size) {
  validate_bounds(bounds);
  validate_prior(weights, spec);
  std::vector<double> roots = log_grid(bounds, root_grid_size);
  std::sort(roots.begin(), roots.end());  // ascending: most negative first
  const double separation = 1e-3 * std::abs(bounds.lo);

  SelectionResult out;
  double best_xi = -std::numeric_limits<double>::infinity();
  std::vector<RidgeTerm> best_terms;
  double candidate = 0.0;

  for (double r : roots) {
    const double xi = safe_xi(spec, r, weights);
    if (!std::isnan(xi)) {
      out.trace.emplace_back(candidate, xi);
      if (xi > best_xi) {
        best_xi = xi;
        best_terms = {RidgeTerm{r, 1.0}};
      }
    }
    candidate += 1.0;
  }

  const std::size_t m = roots.size();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      if (roots[j] - roots[i] < separation) continue;
      for (std::size_t k = j + 1; k < m; ++k) {
        if (roots[k] - roots[j] < separation) continue;
        const std::vector<double> triple = {roots[i], roots[j], roots[k]};
        try {
          const RayleighSolution sol = rayleigh_weights(spec, triple, weights);
          out.trace.emplace_back(candidate, sol.xi);
          if (sol.xi > best_xi) {
            best_xi = sol.xi;
            best_terms.clear();
            for (std::size_t t = 0; t < 3; ++t) best_terms.push_back({triple[t], sol.weights[t]});
          }
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::SingularD && e.kind() != ErrorKind::NonPositiveVariance &&
              e.kind() != ErrorKind::DegenerateDenominator) {
            throw;
          }
        }
        candidate += 1.0;
      }
    }
  }
  if (best_terms.empty()) {
    fail(ErrorKind::NonPositiveVariance, "no admissible higher-order candidate");
  }
  out.f_star = ShrinkageSpec::mixture(best_terms);
  out.xi_star = best_xi;
  return out;
}

}  // namespace shrinkglht
