#pragma once

#include <cstdint>
#include <vector>

#include "shrinkglht/glht.hpp"
#include "shrinkglht/random.hpp"
#include "shrinkglht/simlab.hpp"
#include "shrinkglht/spectral.hpp"

namespace support {

using shrinkglht::Matrix;

inline shrinkglht::SpectralSummary spectrum(std::vector<double> eigs, std::int64_t n) {
  return shrinkglht::SpectralSummary::from_eigenvalues(std::move(eigs), n);
}

inline Matrix normals(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  shrinkglht::Rng rng = shrinkglht::substream(seed, 99);
  shrinkglht::NormalSource normal(rng);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
  return m;
}

/// Null MANOVA problem with successive contrasts.
inline shrinkglht::GlhtProblem manova(int p, const std::vector<int>& sizes, std::uint64_t seed) {
  const auto design = shrinkglht::make_design(static_cast<int>(sizes.size()), sizes);
  return {normals(p, design.X.cols(), seed), design.X, design.C};
}

/// Regression problem with a generic dense design.
inline shrinkglht::GlhtProblem regression(int p, int big_n, int k, int q, std::uint64_t seed) {
  Matrix x = normals(k, big_n, seed + 1);
  x.row(0).setOnes();
  return {normals(p, big_n, seed), x, normals(k, q, seed + 2)};
}

/// Eigenvalues of a Wishart-type sample covariance: p x n Gaussian, scaled by 1/n.
inline shrinkglht::SpectralSummary wishart_spectrum(int p, int n, std::uint64_t seed) {
  const Matrix z = normals(p, n, seed);
  const Matrix s = z * z.transpose() / n;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd ev = solver.eigenvalues();
  return spectrum({ev.data(), ev.data() + ev.size()}, n);
}

}  // namespace support
