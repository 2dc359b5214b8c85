#include "shrinkglht/shrinkage.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "shrinkglht/error.hpp"

namespace shrinkglht {
namespace {

constexpr double kPoleGuard = 1e-12;
constexpr double kRootSeparation = 1e-8;
constexpr double kContourMargin = 1e-6;
constexpr double kImagTolerance = 1e-6;
constexpr int kMinNodesPerSide = 64;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

int poly_degree(const std::array<double, 4>& c) {
  for (int d = 3; d >= 0; --d) {
    if (c[d] != 0.0) return d;
  }
  return -1;
}

Complex poly_eval(const std::array<double, 4>& c, Complex x) {
  return ((c[3] * x + c[2]) * x + c[1]) * x + c[0];
}

// Real roots of a polynomial of degree 1..3; throws if any root is complex.
std::vector<double> real_roots(const std::array<double, 4>& c) {
  const int degree = poly_degree(c);
  if (degree < 1) fail(ErrorKind::InvalidArgument, "polynomial regularizer needs degree >= 1");
  if (degree == 1) return {-c[0] / c[1]};

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
  for (int i = 1; i < degree; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < degree; ++i) companion(i, degree - 1) = -c[i] / c[degree];
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  const Eigen::VectorXcd eig = solver.eigenvalues();

  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    for (Eigen::Index j = i + 1; j < eig.size(); ++j) {
      if (std::abs(eig(i) - eig(j)) < 1e-6 * std::max(1.0, std::abs(eig(i)))) {
        fail(ErrorKind::RootMultiplicity, "polynomial regularizer has a repeated root");
      }
    }
  }

  std::vector<double> roots;
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    const Complex r = eig(i);
    if (std::abs(r.imag()) > 1e-8 * std::max(1.0, std::abs(r))) {
      fail(ErrorKind::InvalidArgument, "polynomial regularizer has complex roots");
    }
    // Newton polish on the real line.
    double x = r.real();
    for (int it = 0; it < 4; ++it) {
      const double value = poly_eval(c, x).real();
      const double slope = (3.0 * c[3] * x + 2.0 * c[2]) * x + c[1];
      if (slope == 0.0) break;
      x -= value / slope;
    }
    roots.push_back(x);
  }
  std::sort(roots.begin(), roots.end(), std::greater<>());
  return roots;
}

void check_pole(Complex x, double pole) {
  if (std::abs(x - pole) <= kPoleGuard) {
    fail(ErrorKind::PoleProximity, "evaluation at a pole of the shrinkage function");
  }
}

std::vector<RidgeTerm> as_terms(const ShrinkageSpec& f) {
  if (f.is<ShrinkageSpec::Ridge>()) return {RidgeTerm{f.as<ShrinkageSpec::Ridge>().ell, 1.0}};
  if (f.is<ShrinkageSpec::RidgeMixture>()) return f.as<ShrinkageSpec::RidgeMixture>().terms;
  if (f.is<ShrinkageSpec::PolyInverse>()) {
    return partial_fractions(f).as<ShrinkageSpec::RidgeMixture>().terms;
  }
  fail(ErrorKind::InvalidArgument, "shrinkage is not a ridge mixture: " + f.describe());
}

}  // namespace

ShrinkageSpec ShrinkageSpec::ridge(double ell) {
  if (!std::isfinite(ell) || ell >= 0.0) {
    fail(ErrorKind::InvalidArgument, "ridge parameter must be negative");
  }
  return ShrinkageSpec(Ridge{ell});
}

ShrinkageSpec ShrinkageSpec::mixture(std::vector<RidgeTerm> terms) {
  if (terms.empty()) fail(ErrorKind::InvalidArgument, "ridge mixture needs at least one term");
  bool any_weight = false;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (!std::isfinite(terms[i].root) || terms[i].root >= 0.0) {
      fail(ErrorKind::InvalidArgument, "ridge mixture roots must be negative");
    }
    if (!std::isfinite(terms[i].weight)) {
      fail(ErrorKind::InvalidArgument, "ridge mixture weight is not finite");
    }
    any_weight = any_weight || terms[i].weight != 0.0;
    for (std::size_t j = 0; j < i; ++j) {
      if (std::abs(terms[i].root - terms[j].root) < kRootSeparation) {
        fail(ErrorKind::InvalidArgument, "ridge mixture roots must be distinct");
      }
    }
  }
  if (!any_weight) fail(ErrorKind::InvalidArgument, "ridge mixture has only zero weights");
  return ShrinkageSpec(RidgeMixture{std::move(terms)});
}

ShrinkageSpec ShrinkageSpec::poly_inverse(const std::array<double, 4>& coeffs, double upper_bound) {
  for (double c : coeffs) {
    if (!std::isfinite(c)) fail(ErrorKind::InvalidArgument, "non-finite polynomial coefficient");
  }
  if (!(upper_bound > 0.0) || !std::isfinite(upper_bound)) {
    fail(ErrorKind::InvalidArgument, "spectral upper bound must be positive");
  }
  std::vector<double> roots = real_roots(coeffs);
  for (double r : roots) {
    if (!(r < 0.0)) fail(ErrorKind::InvalidArgument, "polynomial regularizer has a root >= 0");
  }
  // Negative real roots leave no sign change on [0, U]; the endpoint values
  // decide positivity.
  if (!(poly_eval(coeffs, 0.0).real() > 0.0) || !(poly_eval(coeffs, upper_bound).real() > 0.0)) {
    fail(ErrorKind::InvalidArgument, "polynomial regularizer is not positive on [0, U]");
  }
  return ShrinkageSpec(PolyInverse{coeffs, std::move(roots)});
}

ShrinkageSpec ShrinkageSpec::identity() { return ShrinkageSpec(Identity{}); }
ShrinkageSpec ShrinkageSpec::classical_inverse() { return ShrinkageSpec(ClassicalInverse{}); }

std::vector<double> ShrinkageSpec::poles() const {
  return std::visit(
      Overloaded{
          [](const Ridge& r) { return std::vector<double>{r.ell}; },
          [](const RidgeMixture& m) {
            std::vector<double> out;
            for (const auto& t : m.terms) out.push_back(t.root);
            return out;
          },
          [](const PolyInverse& p) { return p.roots; },
          [](const Identity&) { return std::vector<double>{}; },
          [](const ClassicalInverse&) { return std::vector<double>{0.0}; },
      },
      v_);
}

std::string ShrinkageSpec::describe() const {
  std::ostringstream os;
  os.precision(10);
  std::visit(Overloaded{
                 [&](const Ridge& r) { os << "ridge(" << r.ell << ")"; },
                 [&](const RidgeMixture& m) {
                   os << "mixture(";
                   for (std::size_t i = 0; i < m.terms.size(); ++i) {
                     if (i) os << ";";
                     os << m.terms[i].root << ":" << m.terms[i].weight;
                   }
                   os << ")";
                 },
                 [&](const PolyInverse& p) {
                   os << "polyinv(" << p.coeffs[0] << ";" << p.coeffs[1] << ";" << p.coeffs[2]
                      << ";" << p.coeffs[3] << ")";
                 },
                 [&](const Identity&) { os << "identity"; },
                 [&](const ClassicalInverse&) { os << "classical"; },
             },
             v_);
  return os.str();
}

Complex evaluate_f(const ShrinkageSpec& f, Complex x) {
  using S = ShrinkageSpec;
  return std::visit(Overloaded{
                        [&](const S::Ridge& r) -> Complex {
                          check_pole(x, r.ell);
                          return 1.0 / (x - r.ell);
                        },
                        [&](const S::RidgeMixture& m) -> Complex {
                          Complex out = 0.0;
                          for (const auto& t : m.terms) {
                            check_pole(x, t.root);
                            out += t.weight / (x - t.root);
                          }
                          return out;
                        },
                        [&](const S::PolyInverse& p) -> Complex {
                          for (double r : p.roots) check_pole(x, r);
                          return 1.0 / poly_eval(p.coeffs, x);
                        },
                        [](const S::Identity&) -> Complex { return 1.0; },
                        [&](const S::ClassicalInverse&) -> Complex {
                          check_pole(x, 0.0);
                          return 1.0 / x;
                        },
                    },
                    f.variant());
}

std::vector<double> shrink_spectrum(std::span<const double> eigenvalues, const ShrinkageSpec& f) {
  std::vector<double> out;
  out.reserve(eigenvalues.size());
  const bool classical = f.is<ShrinkageSpec::ClassicalInverse>();
  for (double lambda : eigenvalues) {
    if (lambda < 0.0) fail(ErrorKind::InvalidArgument, "negative eigenvalue in shrink_spectrum");
    if (classical && lambda == 0.0) {
      fail(ErrorKind::SingularSpectrum, "classical inverse of a singular covariance");
    }
    out.push_back(evaluate_f(f, lambda).real());
  }
  return out;
}

ShrinkageSpec partial_fractions(const ShrinkageSpec& poly) {
  if (!poly.is<ShrinkageSpec::PolyInverse>()) {
    fail(ErrorKind::InvalidArgument, "partial_fractions expects a polynomial regularizer");
  }
  const auto& p = poly.as<ShrinkageSpec::PolyInverse>();
  const double lead = p.coeffs[poly_degree(p.coeffs)];
  const auto& roots = p.roots;
  for (std::size_t i = 0; i < roots.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (std::abs(roots[i] - roots[j]) < kRootSeparation) {
        fail(ErrorKind::RootMultiplicity, "polynomial regularizer has a repeated root");
      }
    }
  }
  std::vector<RidgeTerm> terms;
  for (std::size_t j = 0; j < roots.size(); ++j) {
    double denom = lead;
    for (std::size_t i = 0; i < roots.size(); ++i) {
      if (i != j) denom *= roots[j] - roots[i];
    }
    terms.push_back({roots[j], 1.0 / denom});
  }
  return ShrinkageSpec::mixture(std::move(terms));
}

double omega_hat_ridge(const SpectralSummary& spec, double ell) {
  if (!(ell < 0.0)) fail(ErrorKind::InvalidArgument, "ridge parameter must be negative");
  return theta_hat(spec, ell).real() - 1.0;
}

double delta_hat_ridge(const SpectralSummary& spec, double ell1, double ell2) {
  if (!(ell1 < 0.0) || !(ell2 < 0.0)) {
    fail(ErrorKind::InvalidArgument, "ridge parameters must be negative");
  }
  return 2.0 * delta_kernel_hat(spec, ell1, ell2).real();
}

double mixture_delta(const SpectralSummary& spec, std::span<const RidgeTerm> a,
                     std::span<const RidgeTerm> b) {
  double total = 0.0;
  for (const auto& s : a) {
    for (const auto& t : b) {
      total += s.weight * t.weight * delta_hat_ridge(spec, s.root, t.root);
    }
  }
  return total;
}

Contour default_contour(const SpectralSummary& spec, const ShrinkageSpec& f, int nodes_per_side) {
  Contour c;
  c.u_lo = -0.5;
  bool have_pole = false;
  double nearest = 0.0;
  for (double pole : f.poles()) {
    if (pole < 0.0 && (!have_pole || pole > nearest)) {
      nearest = pole;
      have_pole = true;
    }
  }
  if (have_pole) c.u_lo = nearest / 2.0;
  c.u_hi = 1.1 * spec.lambda_max() + 1.0;
  c.v0 = 1.0;
  c.nodes_per_side = nodes_per_side;
  return c;
}

void validate_contour(const Contour& c, const SpectralSummary& spec, const ShrinkageSpec& f) {
  if (c.nodes_per_side < kMinNodesPerSide) {
    fail(ErrorKind::ContourViolation, "contour needs at least 64 nodes per side");
  }
  if (!(c.u_lo < 0.0) || !(c.v0 > 0.0) || !(c.u_hi > c.u_lo)) {
    fail(ErrorKind::ContourViolation, "malformed contour rectangle");
  }
  if (spec.lambda_min() - c.u_lo < kContourMargin || c.u_hi - spec.lambda_max() < kContourMargin) {
    fail(ErrorKind::ContourViolation, "contour does not enclose the sample spectrum");
  }
  for (double pole : f.poles()) {
    if (pole > c.u_lo - kContourMargin && pole < c.u_hi + kContourMargin) {
      fail(ErrorKind::ContourViolation, "pole of f inside or on the contour");
    }
  }
}

ContourNodes contour_nodes(const Contour& c) {
  // Vertical sides are split at the real axis so the periodizing map
  // clusters nodes where the contour passes closest to the spectrum and to
  // the poles of f.
  const std::array<Complex, 7> corners = {
      Complex(c.u_lo, 0.0), Complex(c.u_lo, -c.v0), Complex(c.u_hi, -c.v0), Complex(c.u_hi, 0.0),
      Complex(c.u_hi, c.v0), Complex(c.u_lo, c.v0), Complex(c.u_lo, 0.0)};
  const int n = c.nodes_per_side;
  const int half = n / 2;
  const std::array<int, 6> counts = {half, n, n - half, half, n, n - half};
  const double two_pi = 2.0 * std::numbers::pi;
  ContourNodes out;
  out.z.reserve(4 * static_cast<std::size_t>(n));
  out.dz.reserve(4 * static_cast<std::size_t>(n));
  for (std::size_t seg = 0; seg < counts.size(); ++seg) {
    const Complex a = corners[seg];
    const Complex edge = corners[seg + 1] - a;
    const int m = counts[seg];
    // k = 0 carries zero weight under the periodizing map.
    for (int k = 1; k < m; ++k) {
      const double s = static_cast<double>(k) / m;
      const double phi = s - std::sin(two_pi * s) / two_pi;
      const double dphi = 1.0 - std::cos(two_pi * s);
      out.z.push_back(a + edge * phi);
      out.dz.push_back(edge * (dphi / m));
    }
  }
  return out;
}

Contour inner_contour(const Contour& c, const SpectralSummary& spec) {
  constexpr double kShrink = 0.99;
  const double half_width = 0.5 * (c.u_hi - c.u_lo);
  const double inset = (1.0 - kShrink) * half_width;
  Contour out = c;
  out.u_lo = c.u_lo + std::min(inset, 0.5 * (spec.lambda_min() - c.u_lo));
  out.u_hi = c.u_hi - std::min(inset, 0.5 * (c.u_hi - spec.lambda_max()));
  out.v0 = kShrink * c.v0;
  return out;
}

namespace {

struct NodeTransforms {
  std::vector<Complex> theta;
  std::vector<Complex> z_theta;
};

NodeTransforms transforms_at(const SpectralSummary& spec, const ContourNodes& nodes) {
  NodeTransforms out;
  out.theta.reserve(nodes.z.size());
  out.z_theta.reserve(nodes.z.size());
  for (const Complex& z : nodes.z) {
    const Complex t = theta_hat(spec, z);
    out.theta.push_back(t);
    out.z_theta.push_back(z * t);
  }
  return out;
}

double real_part_checked(Complex value, const char* what) {
  if (!std::isfinite(value.real()) || !std::isfinite(value.imag())) {
    fail(ErrorKind::NonRealResult, std::string(what) + " is not finite");
  }
  if (std::abs(value.imag()) > kImagTolerance * (1.0 + std::abs(value))) {
    fail(ErrorKind::NonRealResult, std::string(what) + " has a non-negligible imaginary part");
  }
  return value.real();
}

}  // namespace

double omega_hat_numeric(const SpectralSummary& spec, const ShrinkageSpec& f, const Contour& c) {
  validate_contour(c, spec, f);
  const ContourNodes nodes = contour_nodes(c);
  Complex sum = 0.0;
  for (std::size_t i = 0; i < nodes.z.size(); ++i) {
    sum += evaluate_f(f, nodes.z[i]) * (theta_hat(spec, nodes.z[i]) - 1.0) * nodes.dz[i];
  }
  // -1/(2 pi i) = i/(2 pi)
  const Complex value = sum * Complex(0.0, 1.0 / (2.0 * std::numbers::pi));
  return real_part_checked(value, "omega quadrature");
}

double delta_hat_numeric(const SpectralSummary& spec, const ShrinkageSpec& f1,
                         const ShrinkageSpec& f2, const Contour& c) {
  validate_contour(c, spec, f1);
  validate_contour(c, spec, f2);
  const Contour inner = inner_contour(c, spec);
  const ContourNodes outer_nodes = contour_nodes(c);
  const ContourNodes inner_nodes = contour_nodes(inner);
  const NodeTransforms outer_t = transforms_at(spec, outer_nodes);
  const NodeTransforms inner_t = transforms_at(spec, inner_nodes);

  // Split storage keeps the O(N^2) loop free of std::complex division.
  const std::size_t n2 = inner_nodes.z.size();
  std::vector<double> zr(n2), zi(n2), ar(n2), ai(n2), fr(n2), fi(n2);
  Complex f2_sum = 0.0;
  for (std::size_t j = 0; j < n2; ++j) {
    const Complex weight = evaluate_f(f2, inner_nodes.z[j]) * inner_t.theta[j] * inner_nodes.dz[j];
    zr[j] = inner_nodes.z[j].real();
    zi[j] = inner_nodes.z[j].imag();
    ar[j] = inner_t.z_theta[j].real();
    ai[j] = inner_t.z_theta[j].imag();
    fr[j] = weight.real();
    fi[j] = weight.imag();
    f2_sum += weight;
  }

  Complex total = 0.0;
  Complex f1_sum = 0.0;
  for (std::size_t i = 0; i < outer_nodes.z.size(); ++i) {
    const Complex weight = evaluate_f(f1, outer_nodes.z[i]) * outer_t.theta[i] * outer_nodes.dz[i];
    f1_sum += weight;
    const double z1r = outer_nodes.z[i].real();
    const double z1i = outer_nodes.z[i].imag();
    const double a1r = outer_t.z_theta[i].real();
    const double a1i = outer_t.z_theta[i].imag();
    double acc_r = 0.0;
    double acc_i = 0.0;
    for (std::size_t j = 0; j < n2; ++j) {
      const double dx = z1r - zr[j];
      const double dy = z1i - zi[j];
      const double nx = a1r - ar[j];
      const double ny = a1i - ai[j];
      const double inv = 1.0 / (dx * dx + dy * dy);
      const double qr = (nx * dx + ny * dy) * inv;
      const double qi = (ny * dx - nx * dy) * inv;
      acc_r += fr[j] * qr - fi[j] * qi;
      acc_i += fr[j] * qi + fi[j] * qr;
    }
    total += weight * Complex(acc_r, acc_i);
  }
  total -= f1_sum * f2_sum;
  // 2 / (2 pi i)^2 = -1 / (2 pi^2)
  const Complex value = total * (-1.0 / (2.0 * std::numbers::pi * std::numbers::pi));
  return real_part_checked(value, "delta quadrature");
}

OmegaDelta omega_delta_for(const ShrinkageSpec& f, const SpectralSummary& spec,
                           int nodes_per_side) {
  if (f.is<ShrinkageSpec::ClassicalInverse>()) {
    fail(ErrorKind::UnsupportedStandardization,
         "the classical inverse has a pole inside the spectral support");
  }
  if (f.is<ShrinkageSpec::Identity>()) {
    const Contour c = default_contour(spec, f, nodes_per_side);
    return {omega_hat_numeric(spec, f, c), delta_hat_numeric(spec, f, f, c)};
  }
  if (f.is<ShrinkageSpec::Ridge>()) {
    const double ell = f.as<ShrinkageSpec::Ridge>().ell;
    return {omega_hat_ridge(spec, ell), delta_hat_ridge(spec, ell, ell)};
  }
  const std::vector<RidgeTerm> terms = as_terms(f);
  OmegaDelta out;
  for (const auto& t : terms) out.omega += t.weight * omega_hat_ridge(spec, t.root);
  out.delta = mixture_delta(spec, terms, terms);
  return out;
}

}  // namespace shrinkglht
