#include "shrinkglht/simlab.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "shrinkglht/composite.hpp"
#include "shrinkglht/error.hpp"
#include "shrinkglht/selector.hpp"

namespace shrinkglht {
namespace {

constexpr std::uint64_t kStreamSigma = 1;
constexpr std::uint64_t kStreamNoise = 2;
constexpr std::uint64_t kStreamSignal = 3;
constexpr std::uint64_t kStreamBootstrap = 4;

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    fail(ErrorKind::ConfigError, "cannot parse " + what + " from '" + text + "'");
  }
  return v;
}

long long parse_int(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    fail(ErrorKind::ConfigError, "cannot parse " + what + " from '" + text + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    fail(ErrorKind::ConfigError, "cannot parse " + what + " from '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& text) {
  const std::string t = lower(trim(text));
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  fail(ErrorKind::ConfigError, "cannot parse flag from '" + text + "'");
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt(v[i]);
  return out;
}

std::uint64_t bounded(Rng& rng, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % n;
  }
}

std::string digest_of(const std::vector<std::pair<std::string, std::string>>& kv) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [k, v] : kv) {
    for (char ch : k + "=" + v + "\n") {
      h ^= static_cast<unsigned char>(ch);
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

template <typename Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  const int workers = std::clamp(threads, 1, std::max(count, 1));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  auto body = [&](int t) {
    for (int i = t; i < count; i += workers) {
      try {
        fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    body(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(body, t);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct Evaluation {
  double statistic = 0.0;
  double p_value = 1.0;
};

Evaluation evaluate(const TestDescriptor& t, const FitArtifacts& f, const SimConfig& cfg,
                    std::uint64_t bootstrap_seed) {
  switch (t.mode) {
    case TestMode::Identity: {
      const TestOutcome o = run_test(f, ShrinkageSpec::identity(), t.criterion, cfg.identity_nodes);
      return {o.standardized, o.p_value};
    }
    case TestMode::SelectedRidge: {
      const SelectionResult s = select_ridge(f.spec, t.panel.front(), default_ridge_bounds(f.spec));
      const TestOutcome o = run_test(f, s.f_star, t.criterion);
      return {o.standardized, o.p_value};
    }
    case TestMode::HigherOrder: {
      const SelectionResult s =
          select_higher_order(f.spec, t.panel.front(), default_ridge_bounds(f.spec));
      const TestOutcome o = run_test(f, s.f_star, t.criterion);
      return {o.standardized, o.p_value};
    }
    case TestMode::Composite: {
      CompositeConfig cc;
      cc.panel = t.panel;
      cc.criterion = t.criterion;
      cc.bootstrap_G = cfg.bootstrap_G;
      cc.seed = bootstrap_seed;
      const CompositeOutcome o = run_composite(f, cc);
      return {o.t_max, o.p_value};
    }
  }
  return {};
}

bool rejects(double p_value, double alpha) { return alpha >= 1.0 || p_value < alpha; }

SimRow make_row(const SimConfig& cfg, const TestDescriptor& t, double c, double rate) {
  const double n = static_cast<double>(cfg.N() - cfg.k);
  SimRow row;
  row.test_id = t.id;
  row.criterion = std::string(to_string(t.criterion));
  row.shrinkage = to_string(t.mode);
  row.prior = format_panel(t.panel);
  row.c = c;
  row.signal = std::pow(n, 0.25) * std::sqrt(static_cast<double>(cfg.p)) * c;
  row.rate = rate;
  row.se = std::sqrt(rate * (1.0 - rate) / cfg.replicates);
  row.replicates = cfg.replicates;
  row.seed = cfg.seed;
  return row;
}

// Runs every replicate at every grid value of c with common random numbers.
SimResult simulate(const SimConfig& cfg, const std::vector<double>& c_grid, bool adjust,
                   std::vector<std::pair<std::string, std::string>> echo) {
  const auto start = std::chrono::steady_clock::now();
  Rng sigma_rng = substream(cfg.seed, kStreamSigma);
  const SigmaFactor sigma = make_sigma(cfg.cov, cfg.p, sigma_rng);
  const Design design = make_design(cfg.k, cfg.group_sizes);
  AlternativeModel unit = cfg.alt;
  unit.c = 1.0;

  const std::size_t nt = cfg.tests.size();
  const std::size_t ng = c_grid.size();
  const auto reps = static_cast<std::size_t>(cfg.replicates);
  // results[r][g * nt + t]
  std::vector<std::vector<Evaluation>> results(reps, std::vector<Evaluation>(ng * nt));

  parallel_for(cfg.replicates, cfg.threads, [&](int r) {
    const auto ru = static_cast<std::uint64_t>(r);
    Rng noise_rng = substream(cfg.seed, kStreamNoise, ru);
    const Matrix noise = generate_Y(Matrix::Zero(cfg.p, cfg.k), design.X, sigma, noise_rng);
    Matrix signal = Matrix::Zero(cfg.p, design.X.cols());
    if (unit.kind != AltKind::Null) {
      Rng signal_rng = substream(cfg.seed, kStreamSignal, ru);
      signal = make_B(unit, cfg.p, cfg.k, signal_rng) * design.X;
    }
    const std::uint64_t boot_seed = splitmix64(substream(cfg.seed, kStreamBootstrap, ru)());
    for (std::size_t g = 0; g < ng; ++g) {
      GlhtProblem problem{noise + c_grid[g] * signal, design.X, design.C};
      const FitArtifacts f = fit(problem);
      for (std::size_t t = 0; t < nt; ++t) {
        results[static_cast<std::size_t>(r)][g * nt + t] = evaluate(cfg.tests[t], f, cfg, boot_seed);
      }
    }
  });

  SimResult out;
  out.config = std::move(echo);
  out.digest = digest_of(out.config);
  for (std::size_t t = 0; t < nt; ++t) {
    TestSamples samples;
    samples.test_id = cfg.tests[t].id;
    for (std::size_t g = 0; g < ng; ++g) {
      std::vector<double> stats(reps), pvals(reps);
      for (std::size_t r = 0; r < reps; ++r) {
        stats[r] = results[r][g * nt + t].statistic;
        pvals[r] = results[r][g * nt + t].p_value;
      }
      samples.statistics.push_back(std::move(stats));
      samples.p_values.push_back(std::move(pvals));
    }
    if (adjust) {
      std::vector<double> null_stats = samples.statistics.front();
      std::sort(null_stats.begin(), null_stats.end());
      const double level = std::ceil((1.0 - cfg.alpha) * static_cast<double>(reps) - 1e-9);
      const auto idx = static_cast<std::size_t>(
          std::clamp(level - 1.0, 0.0, static_cast<double>(reps - 1)));
      samples.cutoff = null_stats[idx];
    }
    for (std::size_t g = 0; g < ng; ++g) {
      std::size_t hits = 0;
      for (std::size_t r = 0; r < reps; ++r) {
        const bool reject = adjust ? samples.statistics[g][r] > samples.cutoff
                                   : rejects(samples.p_values[g][r], cfg.alpha);
        if (reject) ++hits;
      }
      out.rows.push_back(make_row(cfg, cfg.tests[t], c_grid[g],
                                  static_cast<double>(hits) / static_cast<double>(reps)));
    }
    out.samples.push_back(std::move(samples));
  }
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace

std::string format_panel(const std::vector<PriorWeights>& panel) {
  if (panel == canonical_panel()) return "canonical";
  std::string out;
  for (std::size_t i = 0; i < panel.size(); ++i) {
    if (i) out += ';';
    out += fmt(panel[i].t0) + ":" + fmt(panel[i].t1) + ":" + fmt(panel[i].t2);
  }
  return out;
}

std::vector<PriorWeights> parse_panel(const std::string& text) {
  const std::string t = lower(trim(text));
  if (t == "canonical") return canonical_panel();
  std::vector<PriorWeights> out;
  for (const std::string& item : split(t, ';')) {
    std::string norm = item;
    std::replace(norm.begin(), norm.end(), ':', ',');
    const auto parts = split(norm, ',');
    if (parts.size() != 3) fail(ErrorKind::ConfigError, "prior needs three weights: '" + item + "'");
    out.push_back({parse_double(parts[0], "prior weight"), parse_double(parts[1], "prior weight"),
                   parse_double(parts[2], "prior weight")});
  }
  return out;
}

std::string CovModel::describe() const {
  switch (kind) {
    case CovKind::Identity: return "identity";
    case CovKind::DenseSpectrum: return "dense";
    case CovKind::Toeplitz: return "toeplitz:" + fmt(rho);
    case CovKind::Discrete: return "discrete";
  }
  return "identity";
}

CovModel CovModel::parse(const std::string& text) {
  const auto parts = split(lower(trim(text)), ':');
  CovModel m;
  const std::string& name = parts[0];
  if (name == "identity" || name == "id") {
    m.kind = CovKind::Identity;
  } else if (name == "dense") {
    m.kind = CovKind::DenseSpectrum;
  } else if (name == "toeplitz" || name == "toep") {
    m.kind = CovKind::Toeplitz;
    if (parts.size() > 1) m.rho = parse_double(parts[1], "Toeplitz rho");
  } else if (name == "discrete" || name == "dis") {
    m.kind = CovKind::Discrete;
  } else {
    fail(ErrorKind::ConfigError, "unknown covariance model '" + text + "'");
  }
  if (parts.size() > 2 || (parts.size() == 2 && m.kind != CovKind::Toeplitz)) {
    fail(ErrorKind::ConfigError, "malformed covariance model '" + text + "'");
  }
  if (!(m.rho > 0.0 && m.rho < 1.0)) fail(ErrorKind::ConfigError, "Toeplitz rho must lie in (0, 1)");
  return m;
}

Matrix SigmaFactor::apply(const Matrix& z) const { return identity ? z : Matrix(root * z); }

Matrix haar_orthogonal(int p, Rng& rng) {
  NormalSource normal(rng);
  Matrix z(p, p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < p; ++i) z(i, j) = normal();
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ();
  const Matrix& r = qr.matrixQR();
  for (int j = 0; j < p; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

SigmaFactor make_sigma(const CovModel& model, int p, Rng& rng) {
  if (p < 2) fail(ErrorKind::ConfigError, "dimension must be at least 2");
  SigmaFactor s;
  Vector eigs(p);
  switch (model.kind) {
    case CovKind::Identity:
      eigs.setOnes();
      s.rotation = Matrix::Identity(p, p);
      s.identity = true;
      break;
    case CovKind::DenseSpectrum: {
      const double floor_term = 0.05 * std::pow(static_cast<double>(p), 6);
      for (int j = 0; j < p; ++j) eigs(j) = std::pow(0.1 + (j + 1), 6) + floor_term;
      s.rotation = haar_orthogonal(p, rng);
      break;
    }
    case CovKind::Toeplitz: {
      Matrix t(p, p);
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) t(i, j) = std::pow(model.rho, std::abs(i - j));
      Eigen::SelfAdjointEigenSolver<Matrix> solver(t);
      eigs = solver.eigenvalues().cwiseMax(0.0);
      s.rotation = solver.eigenvectors();
      break;
    }
    case CovKind::Discrete: {
      const int ones = static_cast<int>(std::floor(0.4 * p));
      const int threes = static_cast<int>(std::floor(0.4 * p));
      for (int j = 0; j < p; ++j) eigs(j) = j < ones ? 1.0 : (j < ones + threes ? 3.0 : 10.0);
      s.rotation = haar_orthogonal(p, rng);
      break;
    }
  }
  if (model.normalize_trace) eigs *= static_cast<double>(p) / eigs.sum();
  s.eigenvalues = eigs;
  if (s.identity) {
    s.sigma = Matrix::Identity(p, p) * eigs(0);
    if (eigs(0) != 1.0) {
      s.identity = false;
      s.root = s.rotation * eigs.cwiseSqrt().asDiagonal();
    }
    return s;
  }
  s.root = s.rotation * eigs.cwiseSqrt().asDiagonal();
  const Matrix sigma = s.rotation * eigs.asDiagonal() * s.rotation.transpose();
  s.sigma = 0.5 * (sigma + sigma.transpose());
  return s;
}

Design make_design(int k, const std::vector<int>& group_sizes) {
  if (k < 2) fail(ErrorKind::ConfigError, "need at least two groups");
  if (static_cast<int>(group_sizes.size()) != k) {
    fail(ErrorKind::ConfigError, "number of group sizes must equal k");
  }
  int total = 0;
  for (int g : group_sizes) {
    if (g < 1) fail(ErrorKind::ConfigError, "group sizes must be positive");
    total += g;
  }
  Design d;
  d.X = Matrix::Zero(k, total);
  int col = 0;
  for (int g = 0; g < k; ++g)
    for (int i = 0; i < group_sizes[static_cast<std::size_t>(g)]; ++i) d.X(g, col++) = 1.0;
  d.C = Matrix::Zero(k, k - 1);
  for (int j = 0; j < k - 1; ++j) {
    d.C(j, j) = 1.0;
    d.C(j + 1, j) = -1.0;
  }
  return d;
}

std::string AlternativeModel::describe() const {
  switch (kind) {
    case AltKind::Null: return "null";
    case AltKind::Dense: return "dense:" + fmt(c);
    case AltKind::Sparse: return "sparse:" + fmt(c);
  }
  return "null";
}

AlternativeModel AlternativeModel::parse(const std::string& text) {
  const auto parts = split(lower(trim(text)), ':');
  AlternativeModel a;
  if (parts[0] == "null") {
    a.kind = AltKind::Null;
  } else if (parts[0] == "dense") {
    a.kind = AltKind::Dense;
  } else if (parts[0] == "sparse") {
    a.kind = AltKind::Sparse;
  } else {
    fail(ErrorKind::ConfigError, "unknown alternative '" + text + "'");
  }
  if (parts.size() > 2 || (a.kind == AltKind::Null && parts.size() > 1)) {
    fail(ErrorKind::ConfigError, "malformed alternative '" + text + "'");
  }
  if (parts.size() == 2) a.c = parse_double(parts[1], "signal scale");
  if (!(a.c >= 0.0)) fail(ErrorKind::ConfigError, "signal scale must be nonnegative");
  return a;
}

Matrix make_B(const AlternativeModel& alt, int p, int k, Rng& rng) {
  if (alt.kind == AltKind::Null) return Matrix::Zero(p, k);
  NormalSource normal(rng);
  Matrix v(p, k);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < p; ++i) v(i, j) = normal();
  if (alt.kind == AltKind::Dense) return alt.c * v;

  const auto count = static_cast<int>(std::lround(alt.density * p));
  std::vector<int> index(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) index[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < count; ++i) {
    const auto j = i + static_cast<int>(bounded(rng, static_cast<std::uint64_t>(p - i)));
    std::swap(index[static_cast<std::size_t>(i)], index[static_cast<std::size_t>(j)]);
  }
  Matrix b = Matrix::Zero(p, k);
  for (int i = 0; i < count; ++i) {
    const int row = index[static_cast<std::size_t>(i)];
    b.row(row) = alt.c * alt.magnitude * v.row(row);
  }
  return b;
}

Matrix generate_Y(const Matrix& B, const Matrix& X, const SigmaFactor& sigma, Rng& rng) {
  if (B.cols() != X.rows()) fail(ErrorKind::InvalidArgument, "B and X are not conformable");
  const Eigen::Index p = sigma.eigenvalues.size();
  if (B.rows() != p) fail(ErrorKind::InvalidArgument, "B and Sigma are not conformable");
  NormalSource normal(rng);
  Matrix z(p, X.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j)
    for (Eigen::Index i = 0; i < p; ++i) z(i, j) = normal();
  return B * X + sigma.apply(z);
}

std::string to_string(TestMode mode) {
  switch (mode) {
    case TestMode::SelectedRidge: return "ridge";
    case TestMode::HigherOrder: return "higher";
    case TestMode::Composite: return "composite";
    case TestMode::Identity: return "identity";
  }
  return "ridge";
}

TestMode parse_mode(const std::string& text) {
  const std::string t = lower(trim(text));
  if (t == "ridge") return TestMode::SelectedRidge;
  if (t == "higher") return TestMode::HigherOrder;
  if (t == "composite" || t == "comp") return TestMode::Composite;
  if (t == "identity" || t == "zgz") return TestMode::Identity;
  fail(ErrorKind::ConfigError, "unknown test mode '" + text + "'");
}

std::string TestDescriptor::spec_string() const {
  return std::string(to_string(criterion)) + "/" + to_string(mode) + "/" + format_panel(panel);
}

TestDescriptor TestDescriptor::parse(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) fail(ErrorKind::ConfigError, "test descriptor needs id=...: '" + text + "'");
  TestDescriptor t;
  t.id = trim(text.substr(0, eq));
  if (t.id.empty() || t.id.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_.-") !=
                          std::string::npos) {
    fail(ErrorKind::ConfigError, "test id must be alphanumeric: '" + t.id + "'");
  }
  const auto parts = split(text.substr(eq + 1), '/');
  if (parts.size() < 2 || parts.size() > 3) {
    fail(ErrorKind::ConfigError, "test descriptor must be id=criterion/mode[/prior]: '" + text + "'");
  }
  try {
    t.criterion = parse_criterion(trim(parts[0]));
  } catch (const Error& e) {
    fail(ErrorKind::ConfigError, e.what());
  }
  t.mode = parse_mode(parts[1]);
  if (parts.size() == 3) {
    t.panel = parse_panel(parts[2]);
  } else if (t.mode == TestMode::Composite) {
    t.panel = canonical_panel();
  }
  return t;
}

int SimConfig::N() const {
  int total = 0;
  for (int g : group_sizes) total += g;
  return total;
}

void validate_config(const SimConfig& cfg) {
  if (cfg.p < 2) fail(ErrorKind::ConfigError, "p must be at least 2");
  if (cfg.k < 2) fail(ErrorKind::ConfigError, "k must be at least 2");
  if (static_cast<int>(cfg.group_sizes.size()) != cfg.k) {
    fail(ErrorKind::ConfigError, "number of group sizes must equal k");
  }
  for (int g : cfg.group_sizes) {
    if (g < 1) fail(ErrorKind::ConfigError, "group sizes must be positive");
  }
  if (cfg.N() - cfg.k < 1) fail(ErrorKind::ConfigError, "need N > k");
  if (cfg.replicates < 100) fail(ErrorKind::ConfigError, "replicates must be at least 100");
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) fail(ErrorKind::ConfigError, "alpha must lie in (0, 1]");
  if (cfg.tests.empty()) fail(ErrorKind::ConfigError, "no tests configured");
  if (cfg.identity_nodes < 64) fail(ErrorKind::ConfigError, "identity_nodes must be at least 64");
  if (cfg.threads < 1) fail(ErrorKind::ConfigError, "threads must be positive");
  if (!(cfg.alt.density > 0.0 && cfg.alt.density <= 1.0)) {
    fail(ErrorKind::ConfigError, "sparse density must lie in (0, 1]");
  }
  if (!(cfg.alt.c >= 0.0)) fail(ErrorKind::ConfigError, "signal scale must be nonnegative");
  std::set<std::string> ids;
  for (const auto& t : cfg.tests) {
    if (!ids.insert(t.id).second) fail(ErrorKind::ConfigError, "duplicate test id '" + t.id + "'");
    if (t.panel.empty()) fail(ErrorKind::ConfigError, "test '" + t.id + "' has no prior");
    if (t.mode != TestMode::Composite && t.panel.size() != 1) {
      fail(ErrorKind::ConfigError, "test '" + t.id + "' takes exactly one prior");
    }
    if (t.mode == TestMode::Composite && cfg.bootstrap_G < 1000) {
      fail(ErrorKind::ConfigError, "bootstrap size must be at least 1000");
    }
  }
}

std::vector<std::pair<std::string, std::string>> config_to_kv(const SimConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> kv = {
      {"p", std::to_string(cfg.p)},
      {"k", std::to_string(cfg.k)},
      {"group_sizes", join_ints(cfg.group_sizes)},
      {"cov", cfg.cov.describe()},
      {"alt", cfg.alt.describe()},
      {"replicates", std::to_string(cfg.replicates)},
      {"alpha", fmt(cfg.alpha)},
      {"seed", std::to_string(cfg.seed)},
      {"size_adjusted", cfg.size_adjusted ? "true" : "false"},
      {"bootstrap_G", std::to_string(cfg.bootstrap_G)},
      {"identity_nodes", std::to_string(cfg.identity_nodes)},
  };
  for (const auto& t : cfg.tests) kv.emplace_back("test", t.id + "=" + t.spec_string());
  return kv;
}

SimConfig config_from_kv(const std::vector<std::pair<std::string, std::string>>& kv) {
  SimConfig cfg;
  cfg.tests.clear();
  bool sizes_given = false;
  for (const auto& [key, value] : kv) {
    if (key == "p") {
      cfg.p = static_cast<int>(parse_int(value, key));
    } else if (key == "k") {
      cfg.k = static_cast<int>(parse_int(value, key));
    } else if (key == "group_sizes") {
      cfg.group_sizes.clear();
      for (const auto& s : split(value, ',')) cfg.group_sizes.push_back(static_cast<int>(parse_int(s, key)));
      sizes_given = true;
    } else if (key == "cov") {
      cfg.cov = CovModel::parse(value);
    } else if (key == "alt") {
      cfg.alt = AlternativeModel::parse(value);
    } else if (key == "replicates") {
      cfg.replicates = static_cast<int>(parse_int(value, key));
    } else if (key == "alpha") {
      cfg.alpha = parse_double(value, key);
    } else if (key == "seed") {
      cfg.seed = parse_u64(value, key);
    } else if (key == "size_adjusted") {
      cfg.size_adjusted = parse_bool(value);
    } else if (key == "bootstrap_G") {
      cfg.bootstrap_G = static_cast<int>(parse_int(value, key));
    } else if (key == "identity_nodes") {
      cfg.identity_nodes = static_cast<int>(parse_int(value, key));
    } else if (key == "threads") {
      cfg.threads = static_cast<int>(parse_int(value, key));
    } else if (key == "test") {
      cfg.tests.push_back(TestDescriptor::parse(value));
    } else if (key == "c_grid") {
      // Consumed by the power-curve driver.
    } else if (key == "digest" || key == "wall_seconds") {
      // Result metadata written next to a persisted config echo.
    } else {
      fail(ErrorKind::ConfigError, "unknown config key '" + key + "'");
    }
  }
  if (!sizes_given && static_cast<int>(cfg.group_sizes.size()) != cfg.k) {
    fail(ErrorKind::ConfigError, "group_sizes is required when k differs from the default");
  }
  return cfg;
}

std::vector<std::pair<std::string, std::string>> read_kv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open config file " + path.string());
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) fail(ErrorKind::ConfigError, "config line lacks '=': " + t);
    kv.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return kv;
}

SimConfig load_config(const std::filesystem::path& path) { return config_from_kv(read_kv_file(path)); }

std::vector<double> parse_c_grid(const std::string& text) {
  std::vector<double> out;
  for (const auto& s : split(text, ',')) out.push_back(parse_double(s, "signal grid"));
  return out;
}

std::string config_digest(const SimConfig& cfg) { return digest_of(config_to_kv(cfg)); }

bool SimResult::operator==(const SimResult& other) const {
  return digest == other.digest && config == other.config && rows == other.rows &&
         wall_seconds == other.wall_seconds;
}

SimResult empirical_size(const SimConfig& cfg) {
  validate_config(cfg);
  if (cfg.alt.kind != AltKind::Null) {
    fail(ErrorKind::ConfigError, "empirical size needs the null alternative");
  }
  return simulate(cfg, {0.0}, false, config_to_kv(cfg));
}

SimResult power_curve(const SimConfig& cfg, const std::vector<double>& c_grid) {
  validate_config(cfg);
  if (cfg.alt.kind == AltKind::Null) fail(ErrorKind::ConfigError, "power curve needs an alternative");
  if (c_grid.empty() || c_grid.front() != 0.0) {
    fail(ErrorKind::ConfigError, "signal grid must start at 0");
  }
  for (std::size_t i = 1; i < c_grid.size(); ++i) {
    if (!(c_grid[i] > c_grid[i - 1])) fail(ErrorKind::ConfigError, "signal grid must be ascending");
  }
  auto echo = config_to_kv(cfg);
  echo.emplace_back("c_grid", join_doubles(c_grid));
  return simulate(cfg, c_grid, cfg.size_adjusted, std::move(echo));
}

std::string results_csv(const SimResult& result) {
  std::ostringstream os;
  os << "test_id,criterion,shrinkage,prior,c,signal,rate,se,replicates,seed\n";
  for (const auto& r : result.rows) {
    os << r.test_id << ',' << r.criterion << ',' << r.shrinkage << ',' << r.prior << ','
       << fmt(r.c) << ',' << fmt(r.signal) << ',' << fmt(r.rate) << ',' << fmt(r.se) << ','
       << r.replicates << ',' << r.seed << '\n';
  }
  return os.str();
}

void persist(const SimResult& result, const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) fail(ErrorKind::IoError, "cannot create directory " + path.parent_path().string());

  auto write = [](const std::filesystem::path& file, const std::string& body) {
    std::ofstream out(file, std::ios::binary);
    if (!out) fail(ErrorKind::IoError, "cannot write " + file.string());
    out << body;
    if (!out) fail(ErrorKind::IoError, "write failed for " + file.string());
  };
  write(path, results_csv(result));

  std::ostringstream cfg;
  for (const auto& [k, v] : result.config) cfg << k << '=' << v << '\n';
  cfg << "digest=" << result.digest << '\n';
  cfg << "wall_seconds=" << fmt(result.wall_seconds) << '\n';
  write(path.string() + ".config", cfg.str());

  std::vector<std::string> ids;
  for (const auto& r : result.rows) {
    if (std::find(ids.begin(), ids.end(), r.test_id) == ids.end()) ids.push_back(r.test_id);
  }
  for (const auto& id : ids) {
    std::ostringstream plot;
    plot << "signal,rate\n";
    for (const auto& r : result.rows) {
      if (r.test_id == id) plot << fmt(r.signal) << ',' << fmt(r.rate) << '\n';
    }
    const auto file = path.parent_path() / (path.stem().string() + "_" + id + "_plot.csv");
    write(file, plot.str());
  }
}

SimResult load_result(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path.string());
  SimResult out;
  std::string line;
  if (!std::getline(in, line) ||
      line != "test_id,criterion,shrinkage,prior,c,signal,rate,se,replicates,seed") {
    fail(ErrorKind::IoError, "unexpected results header in " + path.string());
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 10) fail(ErrorKind::IoError, "malformed results row: " + line);
    SimRow r;
    r.test_id = f[0];
    r.criterion = f[1];
    r.shrinkage = f[2];
    r.prior = f[3];
    r.c = parse_double(f[4], "c");
    r.signal = parse_double(f[5], "signal");
    r.rate = parse_double(f[6], "rate");
    r.se = parse_double(f[7], "se");
    r.replicates = static_cast<int>(parse_int(f[8], "replicates"));
    r.seed = parse_u64(f[9], "seed");
    out.rows.push_back(r);
  }

  std::ifstream cfg(path.string() + ".config");
  if (!cfg) fail(ErrorKind::IoError, "cannot open " + path.string() + ".config");
  while (std::getline(cfg, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::IoError, "malformed config line: " + line);
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "digest") {
      out.digest = value;
    } else if (key == "wall_seconds") {
      out.wall_seconds = parse_double(value, key);
    } else {
      out.config.emplace_back(key, value);
    }
  }
  return out;
}

}  // namespace shrinkglht
