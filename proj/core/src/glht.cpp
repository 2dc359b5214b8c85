#include "shrinkglht/glht.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numbers>
#include <string>

#include "shrinkglht/error.hpp"

namespace shrinkglht {
namespace {

constexpr double kRankTolerance = 1e-10;
constexpr double kInvSqrtFloor = 1e-12;

// Eigenpairs of a symmetric matrix, sorted descending.
void sorted_eigen(const Matrix& a, Vector& values, Matrix& vectors) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.info() != Eigen::Success) {
    fail(ErrorKind::DomainError, "symmetric eigendecomposition did not converge");
  }
  values = solver.eigenvalues().reverse();
  vectors = solver.eigenvectors().rowwise().reverse();
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace

std::string_view to_string(Criterion c) {
  switch (c) {
    case Criterion::LR: return "LR";
    case Criterion::LH: return "LH";
    case Criterion::BNP: return "BNP";
  }
  return "?";
}

Criterion parse_criterion(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "lr") return Criterion::LR;
  if (lower == "lh") return Criterion::LH;
  if (lower == "bnp") return Criterion::BNP;
  fail(ErrorKind::InvalidArgument, "unknown criterion '" + std::string(text) + "'");
}

void validate_problem(const GlhtProblem& pr) {
  const auto p = pr.Y.rows();
  const auto big_n = pr.Y.cols();
  const auto k = pr.X.rows();
  const auto q = pr.C.cols();
  if (p < 1 || big_n < 1 || k < 1 || q < 1) fail(ErrorKind::InvalidArgument, "empty matrix");
  if (pr.X.cols() != big_n) {
    fail(ErrorKind::InvalidArgument, "X has " + std::to_string(pr.X.cols()) +
                                         " columns but Y has " + std::to_string(big_n));
  }
  if (pr.C.rows() != k) {
    fail(ErrorKind::InvalidArgument, "C has " + std::to_string(pr.C.rows()) +
                                         " rows but X has " + std::to_string(k));
  }
  if (!all_finite(pr.Y) || !all_finite(pr.X) || !all_finite(pr.C)) {
    fail(ErrorKind::InvalidArgument, "non-finite input entries");
  }
  if (big_n <= k) fail(ErrorKind::InvalidArgument, "need N > k observations");
  if (q > k) fail(ErrorKind::RankDeficientConstraints, "C has more columns than rows");

  Eigen::JacobiSVD<Matrix> x_svd(pr.X);
  const Vector xs = x_svd.singularValues();
  if (!(xs(xs.size() - 1) > kRankTolerance * xs(0))) {
    fail(ErrorKind::RankDeficientDesign, "design matrix X is not of full row rank");
  }
  Eigen::JacobiSVD<Matrix> c_svd(pr.C);
  const Vector cs = c_svd.singularValues();
  if (!(cs(cs.size() - 1) > kRankTolerance * cs(0))) {
    fail(ErrorKind::RankDeficientConstraints, "constraint matrix C is not of full column rank");
  }
}

FitArtifacts fit(const GlhtProblem& pr) {
  validate_problem(pr);
  const auto p = pr.Y.rows();
  const auto big_n = pr.Y.cols();
  const auto k = pr.X.rows();

  FitArtifacts out;
  out.n = big_n - k;
  const double n = static_cast<double>(out.n);

  const Matrix xxt = pr.X * pr.X.transpose();
  const Matrix xxt_inv = xxt.ldlt().solve(Matrix::Identity(k, k));

  // [C^T (X X^T)^{-1} C]^{-1/2} by symmetric eigendecomposition.
  const Matrix a = pr.C.transpose() * xxt_inv * pr.C;
  Eigen::SelfAdjointEigenSolver<Matrix> a_solver(0.5 * (a + a.transpose()));
  const Vector a_floor = a_solver.eigenvalues().cwiseMax(kInvSqrtFloor);
  const Matrix a_inv_sqrt = a_solver.eigenvectors() * a_floor.cwiseSqrt().cwiseInverse().asDiagonal() *
                            a_solver.eigenvectors().transpose();
  out.Qn = pr.X.transpose() * xxt_inv * pr.C * a_inv_sqrt;
  out.Tmat = n * a;
  out.Tmat = 0.5 * (out.Tmat + out.Tmat.transpose());

  // Residuals of the full model; Sigma-hat = R R^T / n.
  const Matrix residual = pr.Y - (pr.Y * pr.X.transpose()) * xxt_inv * pr.X;
  Vector values;
  Matrix vectors;
  if (p <= big_n) {
    const Matrix sigma = residual * residual.transpose() / n;
    sorted_eigen(0.5 * (sigma + sigma.transpose()), values, vectors);
    out.sigma_vecs = vectors;
    out.thin = false;
  } else {
    // Dual problem on the N x N Gram matrix; Sigma-hat has rank <= n.
    const Matrix gram = residual.transpose() * residual / n;
    Vector dual_values;
    Matrix dual_vectors;
    sorted_eigen(0.5 * (gram + gram.transpose()), dual_values, dual_vectors);
    const Eigen::Index r = std::min<Eigen::Index>(out.n, big_n);
    out.sigma_vecs.resize(p, r);
    Eigen::Index kept = 0;
    for (Eigen::Index i = 0; i < r; ++i) {
      if (dual_values(i) <= kRankTolerance * std::max(1.0, dual_values(0))) break;
      out.sigma_vecs.col(i) =
          residual * dual_vectors.col(i) / std::sqrt(n * dual_values(i));
      ++kept;
    }
    out.sigma_vecs.conservativeResize(p, kept);
    values = Vector::Zero(p);
    values.head(kept) = dual_values.head(kept);
    out.thin = true;
  }

  const double top = std::max(1.0, values.size() ? values(0) : 0.0);
  out.sigma_eigs.resize(static_cast<std::size_t>(p));
  for (Eigen::Index i = 0; i < p; ++i) {
    double v = values(i);
    if (v < 0.0 && v > -1e-10 * top) v = 0.0;
    out.sigma_eigs[static_cast<std::size_t>(i)] = v;
  }
  out.spec = SpectralSummary::from_eigenvalues(out.sigma_eigs, out.n);

  out.YQ = pr.Y * out.Qn;
  out.rotated_YQ = out.sigma_vecs.transpose() * out.YQ;
  out.gram = out.YQ.transpose() * out.YQ;
  return out;
}

Matrix m_matrix(const FitArtifacts& fit, const ShrinkageSpec& f) {
  const std::vector<double> shrunk = shrink_spectrum(fit.sigma_eigs, f);
  const Eigen::Index r = fit.rotated_YQ.rows();
  const Eigen::Map<const Vector> leading(shrunk.data(), r);
  Matrix m = fit.rotated_YQ.transpose() * leading.asDiagonal() * fit.rotated_YQ;
  if (fit.thin) {
    // The null space of Sigma-hat sees f(0).
    const double f_zero = shrunk.back();
    m += f_zero * (fit.gram - fit.rotated_YQ.transpose() * fit.rotated_YQ);
  }
  m /= static_cast<double>(fit.n);
  return 0.5 * (m + m.transpose());
}

std::vector<double> symmetric_eigenvalues(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    fail(ErrorKind::DomainError, "symmetric eigendecomposition did not converge");
  }
  const Vector v = solver.eigenvalues().reverse();
  return {v.data(), v.data() + v.size()};
}

double RawStatistics::of(Criterion c) const {
  switch (c) {
    case Criterion::LR: return lr;
    case Criterion::LH: return lh;
    case Criterion::BNP: return bnp;
  }
  return lh;
}

RawStatistics raw_statistics(const std::vector<double>& m_eigs) {
  RawStatistics out;
  for (double lambda : m_eigs) {
    if (!(lambda > -1.0)) fail(ErrorKind::DomainError, "eigenvalue of M(f) is <= -1");
    out.lr += std::log1p(lambda);
    out.lh += lambda;
    out.bnp += lambda / (1.0 + lambda);
  }
  return out;
}

double standardize(double raw, Criterion criterion, double omega, double delta, std::int64_t q,
                   std::int64_t n) {
  if (!(delta > 0.0)) fail(ErrorKind::NonPositiveVariance, "variance estimate is not positive");
  if (q < 1 || n < 1) fail(ErrorKind::InvalidArgument, "q and n must be positive");
  const double qd = static_cast<double>(q);
  const double scale = std::sqrt(static_cast<double>(n)) / (std::sqrt(qd) * std::sqrt(delta));
  switch (criterion) {
    case Criterion::LH:
      return scale * (raw - qd * omega);
    case Criterion::LR:
      if (!(omega > -1.0)) fail(ErrorKind::DomainError, "LR centering needs omega > -1");
      return scale * (1.0 + omega) * (raw - qd * std::log1p(omega));
    case Criterion::BNP:
      if (!(omega > -1.0)) fail(ErrorKind::DomainError, "BNP centering needs omega > -1");
      return scale * (1.0 + omega) * (1.0 + omega) * (raw - qd * omega / (1.0 + omega));
  }
  return 0.0;
}

double upper_tail(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double normal_upper_quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
  const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(boost::math::complement(standard, alpha));
}

TestOutcome run_test(const FitArtifacts& fit, const ShrinkageSpec& f, Criterion criterion,
                     int nodes_per_side) {
  TestOutcome out;
  out.criterion = criterion;
  out.f_used = f;
  out.m_eigs = symmetric_eigenvalues(m_matrix(fit, f));
  out.raw_stat = raw_statistics(out.m_eigs).of(criterion);
  const OmegaDelta od = omega_delta_for(f, fit.spec, nodes_per_side);
  out.omega_hat = od.omega;
  out.delta_hat = od.delta;
  out.standardized = standardize(out.raw_stat, criterion, od.omega, od.delta, fit.q(), fit.n);
  out.p_value = upper_tail(out.standardized);
  return out;
}

TestOutcome run_test(const GlhtProblem& problem, const ShrinkageSpec& f, Criterion criterion) {
  return run_test(fit(problem), f, criterion);
}

double asymptotic_power(double xi, const Matrix& S, const Matrix& Tmat, double alpha) {
  if (Tmat.rows() != Tmat.cols() || S.rows() != Tmat.rows()) {
    fail(ErrorKind::InvalidArgument, "S must have as many rows as T");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (Tmat + Tmat.transpose()));
  const Vector ev = solver.eigenvalues();
  if (!(ev(0) > 1e-12 * std::max(1.0, ev(ev.size() - 1)))) {
    fail(ErrorKind::SingularT, "T matrix is not positive definite");
  }
  const Matrix t_inv_s = solver.eigenvectors() * ev.cwiseInverse().asDiagonal() *
                         solver.eigenvectors().transpose() * S;
  const double trace = (S.transpose() * t_inv_s).trace();
  const double q = static_cast<double>(Tmat.rows());
  return upper_tail(normal_upper_quantile(alpha) - trace * xi / std::sqrt(q));
}

}  // namespace shrinkglht
