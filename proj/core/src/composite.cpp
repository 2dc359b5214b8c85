#include "shrinkglht/composite.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "shrinkglht/error.hpp"

namespace shrinkglht {
namespace {

constexpr int kChunk = 1000;

}  // namespace

void validate_config(const CompositeConfig& cfg) {
  if (cfg.panel.empty()) fail(ErrorKind::ConfigError, "prior panel is empty");
  if (cfg.bootstrap_G < 1000) fail(ErrorKind::ConfigError, "bootstrap size must be at least 1000");
}

Matrix delta_star(const SpectralSummary& spec, const std::vector<double>& ells) {
  const auto m = static_cast<Eigen::Index>(ells.size());
  Vector scale(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double ell = ells[static_cast<std::size_t>(i)];
    if (!(ell < 0.0)) fail(ErrorKind::InvalidArgument, "ridge parameters must be negative");
    const double d = delta_hat_ridge(spec, ell, ell);
    if (!(d > 1e-14)) fail(ErrorKind::NonPositiveVariance, "ridge variance estimate is not positive");
    scale(i) = 1.0 / std::sqrt(d);
  }
  Matrix out = Matrix::Identity(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = delta_hat_ridge(spec, ells[static_cast<std::size_t>(i)],
                                       ells[static_cast<std::size_t>(j)]) *
                       scale(i) * scale(j);
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

Matrix psd_project(const Matrix& a) {
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.eigenvalues().minCoeff() >= 0.0) return a;
  const Vector clamped = solver.eigenvalues().cwiseMax(0.0);
  const Matrix& v = solver.eigenvectors();
  Matrix out = v * clamped.asDiagonal() * v.transpose();
  return 0.5 * (out + out.transpose());
}

double bootstrap_pvalue(const Matrix& delta_psd, double t_max, int G, std::uint64_t seed,
                        int threads) {
  if (G < 1) fail(ErrorKind::InvalidArgument, "bootstrap size must be positive");
  const Eigen::Index m = delta_psd.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (delta_psd + delta_psd.transpose()));
  const Matrix& v = solver.eigenvectors();
  const Matrix root = v * solver.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * v.transpose();

  const int chunks = (G + kChunk - 1) / kChunk;
  std::vector<long long> counts(static_cast<std::size_t>(chunks), 0);
  auto run_chunk = [&](int c) {
    Rng rng = substream(seed, 0xB007ULL, static_cast<std::uint64_t>(c));
    NormalSource normal(rng);
    const int begin = c * kChunk;
    const int end = std::min(G, begin + kChunk);
    Vector z(m);
    long long hits = 0;
    for (int b = begin; b < end; ++b) {
      for (Eigen::Index i = 0; i < m; ++i) z(i) = normal();
      if ((root * z).maxCoeff() > t_max) ++hits;
    }
    counts[static_cast<std::size_t>(c)] = hits;
  };
  const int workers = std::clamp(threads, 1, chunks);
  if (workers == 1) {
    for (int c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        for (int c = t; c < chunks; c += workers) run_chunk(c);
      });
    }
    for (auto& th : pool) th.join();
  }
  long long total = 0;
  for (long long c : counts) total += c;
  return static_cast<double>(total) / static_cast<double>(G);
}

CompositeOutcome run_composite(const FitArtifacts& fit, const CompositeConfig& cfg) {
  validate_config(cfg);
  const RidgeBounds bounds = default_ridge_bounds(fit.spec);
  CompositeOutcome out;
  std::vector<double> ells;
  for (const auto& prior : cfg.panel) {
    const SelectionResult sel = select_ridge(fit.spec, prior, bounds, cfg.threads);
    const double ell = sel.f_star.as<ShrinkageSpec::Ridge>().ell;
    const TestOutcome t = run_test(fit, sel.f_star, cfg.criterion);
    out.per_prior.push_back({prior, ell, t.standardized});
    ells.push_back(ell);
  }
  out.t_max = out.per_prior.front().statistic;
  for (const auto& r : out.per_prior) out.t_max = std::max(out.t_max, r.statistic);
  out.delta_star = delta_star(fit.spec, ells);
  out.delta_star_psd = psd_project(out.delta_star);
  out.p_value = bootstrap_pvalue(out.delta_star_psd, out.t_max, cfg.bootstrap_G, cfg.seed, cfg.threads);
  return out;
}

CompositeOutcome run_composite(const GlhtProblem& problem, const CompositeConfig& cfg) {
  validate_config(cfg);
  return run_composite(fit(problem), cfg);
}

}  // namespace shrinkglht
