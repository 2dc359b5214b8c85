#pragma once

// Regularized general linear hypothesis tests H0: B C = 0 for the model
// Y = B X + Sigma^{1/2} Z, with Y p x N, X k x N and C k x q.

#include <Eigen/Dense>
#include <cstdint>
#include <string_view>
#include <vector>

#include "shrinkglht/shrinkage.hpp"
#include "shrinkglht/spectral.hpp"

namespace shrinkglht {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Criterion { LR, LH, BNP };

std::string_view to_string(Criterion c);
Criterion parse_criterion(std::string_view text);

struct GlhtProblem {
  Matrix Y;  // p x N
  Matrix X;  // k x N
  Matrix C;  // k x q
};

struct FitArtifacts {
  std::int64_t n = 0;  // N - k
  Matrix Qn;           // N x q, orthonormal columns
  Matrix YQ;           // p x q
  std::vector<double> sigma_eigs;  // all p eigenvalues of Sigma-hat, descending
  Matrix sigma_vecs;   // p x r eigenvectors for the r leading eigenvalues (r = p unless thin)
  SpectralSummary spec;
  Matrix Tmat;         // C^T (X X^T / n)^{-1} C

  // Cached pieces of M(f): rotated projections and the q x q Gram matrix.
  Matrix rotated_YQ;   // sigma_vecs^T YQ, r x q
  Matrix gram;         // YQ^T YQ
  bool thin = false;

  std::int64_t q() const { return Qn.cols(); }
};

/// Throws RankDeficientDesign, RankDeficientConstraints or InvalidArgument.
void validate_problem(const GlhtProblem& problem);

FitArtifacts fit(const GlhtProblem& problem);

/// (1/n) (YQ)^T f(Sigma-hat) (YQ), symmetrized.
Matrix m_matrix(const FitArtifacts& fit, const ShrinkageSpec& f);

/// Eigenvalues of a symmetric matrix in descending order.
std::vector<double> symmetric_eigenvalues(const Matrix& m);

struct RawStatistics {
  double lr = 0.0;
  double lh = 0.0;
  double bnp = 0.0;

  double of(Criterion c) const;
};

RawStatistics raw_statistics(const std::vector<double>& m_eigs);

double standardize(double raw, Criterion criterion, double omega, double delta, std::int64_t q,
                   std::int64_t n);

/// Upper-tail standard normal probability 1 - Phi(x).
double upper_tail(double x);

/// Upper alpha quantile of the standard normal.
double normal_upper_quantile(double alpha);

struct TestOutcome {
  Criterion criterion = Criterion::LR;
  ShrinkageSpec f_used = ShrinkageSpec::identity();
  std::vector<double> m_eigs;
  double raw_stat = 0.0;
  double omega_hat = 0.0;
  double delta_hat = 0.0;
  double standardized = 0.0;
  double p_value = 1.0;

  bool rejects(double alpha) const { return p_value < alpha; }
};

TestOutcome run_test(const FitArtifacts& fit, const ShrinkageSpec& f, Criterion criterion,
                     int nodes_per_side = 2048);
TestOutcome run_test(const GlhtProblem& problem, const ShrinkageSpec& f, Criterion criterion);

/// Predicted local power Phi(-xi_alpha + tr(S S^T T^{-1}) xi / sqrt(q)).
double asymptotic_power(double xi, const Matrix& S, const Matrix& Tmat, double alpha);

}  // namespace shrinkglht
