#pragma once

// Spectral shrinkage functions f and the centering/variance functionals
// Omega(f) and Delta(f1, f2) of the regularized quadratic form M(f).
//
// Two independent routes are provided. Ridge terms f(x) = 1/(x - l) have
// closed forms in terms of the companion transform; general analytic f goes
// through contour quadrature on a rectangle enclosing the sample spectrum.
// The dispatcher `omega_delta_for` picks the closed form whenever f is a
// finite mixture of ridge terms.

#include <array>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "shrinkglht/spectral.hpp"

namespace shrinkglht {

struct RidgeTerm {
  double root = -1.0;
  double weight = 1.0;

  bool operator==(const RidgeTerm&) const = default;
};

class ShrinkageSpec {
 public:
  struct Ridge {
    double ell;
    bool operator==(const Ridge&) const = default;
  };
  struct RidgeMixture {
    std::vector<RidgeTerm> terms;
    bool operator==(const RidgeMixture&) const = default;
  };
  /// 1 / (l0 + l1 x + l2 x^2 + l3 x^3); roots are cached at construction.
  struct PolyInverse {
    std::array<double, 4> coeffs;
    std::vector<double> roots;
    bool operator==(const PolyInverse&) const = default;
  };
  struct Identity {
    bool operator==(const Identity&) const = default;
  };
  struct ClassicalInverse {
    bool operator==(const ClassicalInverse&) const = default;
  };
  using Variant = std::variant<Ridge, RidgeMixture, PolyInverse, Identity, ClassicalInverse>;

  static ShrinkageSpec ridge(double ell);
  static ShrinkageSpec mixture(std::vector<RidgeTerm> terms);
  /// Validates real negative roots and positivity on [0, upper_bound].
  static ShrinkageSpec poly_inverse(const std::array<double, 4>& coeffs, double upper_bound);
  static ShrinkageSpec identity();
  static ShrinkageSpec classical_inverse();

  const Variant& variant() const { return v_; }
  template <typename T>
  bool is() const {
    return std::holds_alternative<T>(v_);
  }
  template <typename T>
  const T& as() const {
    return std::get<T>(v_);
  }

  /// Poles of f on the real axis (ridge roots, polynomial roots, 0 for the
  /// classical inverse).
  std::vector<double> poles() const;

  /// Short human-readable tag, e.g. "ridge(-0.25)".
  std::string describe() const;

  bool operator==(const ShrinkageSpec&) const = default;

 private:
  explicit ShrinkageSpec(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

/// Axis-aligned rectangle [u_lo, u_hi] x [-v0, v0], traversed counter-clockwise.
struct Contour {
  double u_lo = -0.5;
  double u_hi = 1.0;
  double v0 = 1.0;
  int nodes_per_side = 2048;
};

Complex evaluate_f(const ShrinkageSpec& f, Complex x);
std::vector<double> shrink_spectrum(std::span<const double> eigenvalues, const ShrinkageSpec& f);

/// Simple-root partial fractions of a PolyInverse, as a ridge mixture.
ShrinkageSpec partial_fractions(const ShrinkageSpec& poly);

double omega_hat_ridge(const SpectralSummary& spec, double ell);
double delta_hat_ridge(const SpectralSummary& spec, double ell1, double ell2);

/// Half-way between 0 and the nearest negative pole (or -0.5 without poles)
/// on the left, 1.1 lambda_max + 1 on the right, v0 = 1.
Contour default_contour(const SpectralSummary& spec, const ShrinkageSpec& f,
                        int nodes_per_side = 2048);

/// Throws ContourViolation if the rectangle misses part of the spectrum or
/// comes within 1e-6 of a pole of f.
void validate_contour(const Contour& c, const SpectralSummary& spec, const ShrinkageSpec& f);

/// Quadrature nodes and weights (dz) on the rectangle. Each side uses a
/// uniform trapezoid rule in a sin^2-periodized parameter, which makes the
/// rule spectrally accurate across the corners.
struct ContourNodes {
  std::vector<Complex> z;
  std::vector<Complex> dz;
};
ContourNodes contour_nodes(const Contour& c);

/// The rectangle shrunk by 0.99 toward its centre, with the horizontal insets
/// capped so it still encloses [lambda_min, lambda_max].
Contour inner_contour(const Contour& c, const SpectralSummary& spec);

double omega_hat_numeric(const SpectralSummary& spec, const ShrinkageSpec& f, const Contour& c);
double delta_hat_numeric(const SpectralSummary& spec, const ShrinkageSpec& f1,
                         const ShrinkageSpec& f2, const Contour& c);

struct OmegaDelta {
  double omega = 0.0;
  double delta = 0.0;
};

/// Closed forms for ridge-type f (mixtures by bilinearity, polynomials via
/// partial fractions); quadrature for Identity. `nodes_per_side` only affects
/// the quadrature route.
OmegaDelta omega_delta_for(const ShrinkageSpec& f, const SpectralSummary& spec,
                           int nodes_per_side = 2048);

/// Sum_j Sum_k w_j w_k 2 delta(r_j, r_k) for a list of ridge terms.
double mixture_delta(const SpectralSummary& spec, std::span<const RidgeTerm> a,
                     std::span<const RidgeTerm> b);

}  // namespace shrinkglht
