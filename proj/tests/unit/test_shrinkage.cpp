#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "shrinkglht/error.hpp"
#include "shrinkglht/shrinkage.hpp"

using namespace shrinkglht;
using support::spectrum;

namespace {

// Oracle values from tests/oracles/derived_values.py.
constexpr double kOmega12 = 0.41176470588235294118;
constexpr double kDelta12Diag = 0.70343985345003053124;
constexpr double kDelta12Cross = 0.40855370989849418666;
constexpr double kOmegaIdentity = 0.75;
constexpr double kDeltaIdentity = 1.375;

SpectralSummary one_two() { return spectrum({1, 2}, 4); }

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::ConfigError;
}

}  // namespace

TEST(ShrinkageSpec, Factories) {
  EXPECT_EQ(kind_of([] { ShrinkageSpec::ridge(0.5); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { ShrinkageSpec::mixture({{-1, 1}, {-1 + 1e-10, 1}}); }),
            ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { ShrinkageSpec::mixture({{-1, 0}, {-2, 0}}); }), ErrorKind::InvalidArgument);
  EXPECT_NO_THROW(ShrinkageSpec::mixture({{-1, 1}, {-2, 0}}));
  // (x - 1)(x + 2) has a positive root.
  EXPECT_THROW(ShrinkageSpec::poly_inverse({-2, 1, 1, 0}, 3.0), Error);
  // x^2 + 1 has complex roots.
  EXPECT_THROW(ShrinkageSpec::poly_inverse({1, 0, 1, 0}, 3.0), Error);
  const auto poly = ShrinkageSpec::poly_inverse({2, 3, 1, 0}, 3.0);
  ASSERT_EQ(poly.as<ShrinkageSpec::PolyInverse>().roots.size(), 2u);
  EXPECT_EQ(poly.poles().size(), 2u);
  EXPECT_EQ(ShrinkageSpec::classical_inverse().poles(), std::vector<double>{0.0});
  EXPECT_TRUE(ShrinkageSpec::identity().poles().empty());
}

TEST(EvaluateF, Examples) {
  EXPECT_NEAR(evaluate_f(ShrinkageSpec::ridge(-1), 0.0).real(), 1.0, 1e-15);
  EXPECT_EQ(evaluate_f(ShrinkageSpec::identity(), Complex(3, 4)), Complex(1.0));
  EXPECT_NEAR(evaluate_f(ShrinkageSpec::poly_inverse({2, 3, 1, 0}, 5.0), 0.0).real(), 0.5, 1e-15);
}

TEST(ShrinkSpectrum, Examples) {
  const std::vector<double> a = {1, 2, 3};
  EXPECT_EQ(shrink_spectrum(a, ShrinkageSpec::identity()), (std::vector<double>{1, 1, 1}));
  const std::vector<double> b = {1, 2, 4};
  const auto inv = shrink_spectrum(b, ShrinkageSpec::classical_inverse());
  EXPECT_DOUBLE_EQ(inv[1], 0.5);
  EXPECT_DOUBLE_EQ(inv[2], 0.25);
  const std::vector<double> c = {0, 1};
  const auto r = shrink_spectrum(c, ShrinkageSpec::ridge(-1));
  EXPECT_DOUBLE_EQ(r[0], 1.0);
  EXPECT_DOUBLE_EQ(r[1], 0.5);
  const std::vector<double> zero = {0, 1};
  EXPECT_EQ(kind_of([&] { shrink_spectrum(zero, ShrinkageSpec::classical_inverse()); }),
            ErrorKind::SingularSpectrum);
}

TEST(PartialFractions, Examples) {
  auto weights_of = [](const ShrinkageSpec& mix) {
    std::vector<std::pair<double, double>> out;
    for (const auto& t : mix.as<ShrinkageSpec::RidgeMixture>().terms) out.emplace_back(t.root, t.weight);
    std::sort(out.begin(), out.end(), [](auto a, auto b) { return a.first > b.first; });
    return out;
  };
  const auto two = weights_of(partial_fractions(ShrinkageSpec::poly_inverse({2, 3, 1, 0}, 5)));
  ASSERT_EQ(two.size(), 2u);
  EXPECT_NEAR(two[0].first, -1, 1e-12);
  EXPECT_NEAR(two[0].second, 1, 1e-12);
  EXPECT_NEAR(two[1].first, -2, 1e-12);
  EXPECT_NEAR(two[1].second, -1, 1e-12);

  const auto one = weights_of(partial_fractions(ShrinkageSpec::poly_inverse({5, 1, 0, 0}, 5)));
  ASSERT_EQ(one.size(), 1u);
  EXPECT_NEAR(one[0].first, -5, 1e-12);
  EXPECT_NEAR(one[0].second, 1, 1e-12);

  // (x+1)(x+2)(x+4) = x^3 + 7x^2 + 14x + 8; weights (1/3, -1/2, 1/6) from the oracle.
  const auto three = weights_of(partial_fractions(ShrinkageSpec::poly_inverse({8, 14, 7, 1}, 5)));
  ASSERT_EQ(three.size(), 3u);
  EXPECT_NEAR(three[0].second, 0.33333333333333333333, 1e-12);
  EXPECT_NEAR(three[1].second, -0.5, 1e-12);
  EXPECT_NEAR(three[2].second, 0.16666666666666666667, 1e-12);
}

TEST(PartialFractions, RoundTripAtRandomPoints) {
  const auto poly = ShrinkageSpec::poly_inverse({8, 14, 7, 1}, 6.0);
  const auto mix = partial_fractions(poly);
  Rng rng = substream(5, 5);
  for (int i = 0; i < 20; ++i) {
    const double x = 6.0 * uniform_open(rng);
    const double a = evaluate_f(poly, x).real();
    const double b = evaluate_f(mix, x).real();
    EXPECT_LE(std::abs(a - b), 1e-10 * std::abs(a));
  }
}

TEST(PartialFractions, RepeatedRootRejected) {
  // (x + 1)^2
  EXPECT_THROW(partial_fractions(ShrinkageSpec::poly_inverse({1, 2, 1, 0}, 5)), Error);
}

TEST(ClosedForms, OmegaExamples) {
  EXPECT_NEAR(omega_hat_ridge(spectrum({1, 1, 1, 1}, 4), -1), 1.0, 1e-14);
  EXPECT_NEAR(omega_hat_ridge(spectrum({1, 2}, 1'000'000'000'000'000LL), -1), 0.0, 1e-12);
  EXPECT_NEAR(omega_hat_ridge(one_two(), -1), kOmega12, 1e-14);
}

TEST(ClosedForms, DeltaExamples) {
  EXPECT_NEAR(delta_hat_ridge(spectrum({1, 1, 1, 1}, 4), -1, -1), 0.0, 1e-14);
  EXPECT_NEAR(delta_hat_ridge(spectrum({1, 1, 1, 1}, 4), -1, -2), 0.0, 1e-14);
  const double d = delta_hat_ridge(one_two(), -1, -1);
  EXPECT_GT(d, 0.0);
  EXPECT_NEAR(d, kDelta12Diag, 1e-14);
  EXPECT_NEAR(delta_hat_ridge(one_two(), -1, -2), kDelta12Cross, 1e-14);
}

TEST(Contour, DefaultsAndValidation) {
  const auto s = one_two();
  const Contour c = default_contour(s, ShrinkageSpec::ridge(-1));
  EXPECT_DOUBLE_EQ(c.u_lo, -0.5);
  EXPECT_DOUBLE_EQ(c.u_hi, 1.1 * 2 + 1);
  EXPECT_DOUBLE_EQ(c.v0, 1.0);
  EXPECT_EQ(c.nodes_per_side, 2048);
  EXPECT_DOUBLE_EQ(default_contour(s, ShrinkageSpec::ridge(-3)).u_lo, -1.5);
  EXPECT_DOUBLE_EQ(default_contour(s, ShrinkageSpec::identity()).u_lo, -0.5);

  EXPECT_EQ(kind_of([&] { validate_contour({-2.0, 3.0, 1.0, 256}, s, ShrinkageSpec::ridge(-1)); }),
            ErrorKind::ContourViolation);
  EXPECT_EQ(kind_of([&] { validate_contour({0.5, 3.0, 1.0, 256}, s, ShrinkageSpec::identity()); }),
            ErrorKind::ContourViolation);
  EXPECT_EQ(kind_of([&] { validate_contour({-0.5, 3.0, 1.0, 32}, s, ShrinkageSpec::identity()); }),
            ErrorKind::ContourViolation);
  EXPECT_NO_THROW(validate_contour({-0.5, 3.0, 1.0, 64}, s, ShrinkageSpec::identity()));
}

TEST(Contour, NodesCoverRectangle) {
  const Contour c{-0.5, 3.0, 1.0, 128};
  const ContourNodes nodes = contour_nodes(c);
  // The rule integrates dz around a closed curve to zero and z dz to 0 as well;
  // integral of 1/(z - a) for interior a is 2 pi i.
  Complex sum_dz = 0.0, sum_inv = 0.0;
  for (std::size_t i = 0; i < nodes.z.size(); ++i) {
    sum_dz += nodes.dz[i];
    sum_inv += nodes.dz[i] / (nodes.z[i] - 1.0);
  }
  EXPECT_NEAR(std::abs(sum_dz), 0.0, 1e-12);
  EXPECT_NEAR(sum_inv.real(), 0.0, 1e-9);
  EXPECT_NEAR(sum_inv.imag(), 2.0 * 3.14159265358979323846, 1e-9);

  const auto s = one_two();
  const Contour inner = inner_contour(c, s);
  EXPECT_GT(inner.u_lo, c.u_lo);
  EXPECT_LT(inner.u_hi, c.u_hi);
  EXPECT_LT(inner.u_lo, s.lambda_min());
  EXPECT_GT(inner.u_hi, s.lambda_max());
}

TEST(Quadrature, RidgeMatchesClosedForm) {
  const auto s = one_two();
  const auto f = ShrinkageSpec::ridge(-1);
  const auto g = ShrinkageSpec::ridge(-2);
  const Contour c = default_contour(s, f);
  EXPECT_NEAR(omega_hat_numeric(s, f, c), kOmega12, 1e-6);
  EXPECT_NEAR(delta_hat_numeric(s, f, f, c), kDelta12Diag, 1e-5);
  EXPECT_NEAR(delta_hat_numeric(s, f, g, c), kDelta12Cross, 1e-5);
  EXPECT_NEAR(delta_hat_numeric(s, f, g, c), delta_hat_numeric(s, g, f, c), 1e-10);
}

TEST(Quadrature, IdentityMatchesResidueOracle) {
  const auto s = one_two();
  const auto f = ShrinkageSpec::identity();
  const Contour c = default_contour(s, f);
  EXPECT_NEAR(omega_hat_numeric(s, f, c), kOmegaIdentity, 1e-9);
  EXPECT_NEAR(delta_hat_numeric(s, f, f, c), kDeltaIdentity, 1e-8);
  const OmegaDelta od = omega_delta_for(f, s);
  EXPECT_NEAR(od.omega, kOmegaIdentity, 1e-9);
  EXPECT_NEAR(od.delta, kDeltaIdentity, 1e-8);
}

TEST(Quadrature, IdentityResidueOracleOnWishartSpectra) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto s = support::wishart_spectrum(30, 60, seed);
    double mu1 = 0, mu2 = 0;
    for (double l : s.eigenvalues()) {
      mu1 += l / s.p();
      mu2 += l * l / s.p();
    }
    const double g = s.gamma();
    const OmegaDelta od = omega_delta_for(ShrinkageSpec::identity(), s);
    EXPECT_NEAR(od.omega, g * mu1, 1e-8);
    EXPECT_NEAR(od.delta, 2 * g * (mu2 - g * mu1 * mu1), 1e-7);
  }
}

TEST(Quadrature, RefinementConverged) {
  const auto s = support::wishart_spectrum(20, 50, 21);
  const auto f = ShrinkageSpec::ridge(-0.7);
  Contour c = default_contour(s, f, 1024);
  const double a = omega_hat_numeric(s, f, c);
  c.nodes_per_side = 2048;
  EXPECT_LE(std::abs(omega_hat_numeric(s, f, c) - a), 1e-8);
}

TEST(Quadrature, IdentityCoarseNodesSuffice) {
  const auto s = support::wishart_spectrum(150, 297, 31);
  const auto f = ShrinkageSpec::identity();
  const Contour fine = default_contour(s, f, 2048);
  const Contour coarse = default_contour(s, f, 256);
  EXPECT_NEAR(omega_hat_numeric(s, f, coarse), omega_hat_numeric(s, f, fine), 1e-8);
  EXPECT_NEAR(delta_hat_numeric(s, f, f, coarse), delta_hat_numeric(s, f, f, fine), 1e-8);
}

TEST(Quadrature, ContourIndependence) {
  const auto s = support::wishart_spectrum(20, 50, 23);
  const auto f = ShrinkageSpec::ridge(-1.0);
  const Contour a = default_contour(s, f);
  Contour b = a;
  b.u_lo = -0.3;
  b.u_hi = s.lambda_max() * 2 + 3;
  b.v0 = 2.5;
  EXPECT_NEAR(omega_hat_numeric(s, f, a), omega_hat_numeric(s, f, b), 1e-6);
}

TEST(Quadrature, NumericRejectsClassicalPole) {
  const auto s = one_two();
  EXPECT_EQ(kind_of([&] {
              omega_hat_numeric(s, ShrinkageSpec::classical_inverse(),
                                Contour{-0.5, 3.0, 1.0, 256});
            }),
            ErrorKind::ContourViolation);
}

TEST(OmegaDeltaFor, Dispatch) {
  const auto s = one_two();
  const OmegaDelta r = omega_delta_for(ShrinkageSpec::ridge(-1), s);
  EXPECT_EQ(r.omega, omega_hat_ridge(s, -1));
  EXPECT_EQ(r.delta, delta_hat_ridge(s, -1, -1));

  const OmegaDelta mix = omega_delta_for(ShrinkageSpec::mixture({{-1, 1}, {-2, -1}}), s);
  const OmegaDelta poly = omega_delta_for(ShrinkageSpec::poly_inverse({2, 3, 1, 0}, 3.0), s);
  EXPECT_NEAR(mix.omega, poly.omega, 1e-10);
  EXPECT_NEAR(mix.delta, poly.delta, 1e-10);
  EXPECT_EQ(kind_of([&] { omega_delta_for(ShrinkageSpec::classical_inverse(), s); }),
            ErrorKind::UnsupportedStandardization);
}

TEST(OmegaDeltaFor, MixtureMatchesQuadrature) {
  const auto s = support::wishart_spectrum(25, 60, 31);
  const auto f = ShrinkageSpec::mixture({{-0.4, 0.7}, {-1.5, 0.3}, {-4.0, -0.2}});
  const OmegaDelta od = omega_delta_for(f, s);
  const Contour c = default_contour(s, f);
  EXPECT_NEAR(omega_hat_numeric(s, f, c), od.omega, 1e-6);
  EXPECT_NEAR(delta_hat_numeric(s, f, f, c), od.delta, 1e-5);
}

TEST(Properties, Bilinearity) {
  const auto s = support::wishart_spectrum(25, 60, 41);
  const std::vector<RidgeTerm> f1 = {{-0.5, 1.0}};
  const std::vector<RidgeTerm> f2 = {{-2.0, 1.0}};
  const std::vector<RidgeTerm> g = {{-1.0, 0.4}, {-3.0, 0.6}};
  const double a = 0.3, b = -1.7;
  const std::vector<RidgeTerm> combo = {{-0.5, a}, {-2.0, b}};
  const double lhs = mixture_delta(s, combo, g);
  const double rhs = a * mixture_delta(s, f1, g) + b * mixture_delta(s, f2, g);
  EXPECT_NEAR(lhs, rhs, 1e-10);
}

TEST(Properties, DeltaPositivity) {
  int positive = 0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    const auto s = support::wishart_spectrum(20, 60, 1000 + t);
    ASSERT_GT(s.lambda_min(), 0.0);
    const double ell = -0.05 - 0.1 * static_cast<double>(t % 10);
    if (delta_hat_ridge(s, ell, ell) > 0.0) ++positive;
  }
  EXPECT_EQ(positive, 100);
}
