#pragma once

// Monte Carlo harness: covariance models, MANOVA designs, alternatives,
// empirical size and size-adjusted power, and a CSV results format.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "shrinkglht/glht.hpp"
#include "shrinkglht/random.hpp"

namespace shrinkglht {

enum class CovKind { Identity, DenseSpectrum, Toeplitz, Discrete };

struct CovModel {
  CovKind kind = CovKind::Identity;
  double rho = 0.5;  // Toeplitz only
  bool normalize_trace = true;

  std::string describe() const;
  static CovModel parse(const std::string& text);
};

/// Sigma together with its spectral factorization Sigma = V diag(eigs) V^T.
struct SigmaFactor {
  Matrix sigma;
  Vector eigenvalues;  // ascending
  Matrix rotation;
  Matrix root;         // rotation * diag(sqrt(eigs)); empty for the identity
  bool identity = false;

  /// root * z, or z itself for the identity.
  Matrix apply(const Matrix& z) const;
};

SigmaFactor make_sigma(const CovModel& model, int p, Rng& rng);

/// Haar-distributed orthogonal matrix (QR with sign-fixed R diagonal).
Matrix haar_orthogonal(int p, Rng& rng);

struct Design {
  Matrix X;  // k x N one-hot group indicators
  Matrix C;  // k x (k - 1) successive contrasts
};

Design make_design(int k, const std::vector<int>& group_sizes);

enum class AltKind { Null, Dense, Sparse };

struct AlternativeModel {
  AltKind kind = AltKind::Null;
  double c = 0.0;
  double density = 0.1;
  double magnitude = 3.1622776601683795;  // sqrt(10)

  std::string describe() const;
  static AlternativeModel parse(const std::string& text);
};

Matrix make_B(const AlternativeModel& alt, int p, int k, Rng& rng);

/// B X + sigma.apply(Z) for fresh standard normal Z.
Matrix generate_Y(const Matrix& B, const Matrix& X, const SigmaFactor& sigma, Rng& rng);

/// "canonical" or "t0:t1:t2" items joined by ';'. Parsing also accepts ','
/// inside an item.
std::string format_panel(const std::vector<PriorWeights>& panel);
std::vector<PriorWeights> parse_panel(const std::string& text);

enum class TestMode { SelectedRidge, HigherOrder, Composite, Identity };

std::string to_string(TestMode mode);
TestMode parse_mode(const std::string& text);

struct TestDescriptor {
  std::string id;
  Criterion criterion = Criterion::LR;
  TestMode mode = TestMode::SelectedRidge;
  std::vector<PriorWeights> panel = {PriorWeights{}};

  /// "crit/mode/prior", prior being "t0,t1,t2" or "canonical".
  std::string spec_string() const;
  /// Parses "id=crit/mode/prior".
  static TestDescriptor parse(const std::string& text);
};

struct SimConfig {
  int p = 150;
  int k = 3;
  std::vector<int> group_sizes = {75, 90, 135};
  CovModel cov;
  AlternativeModel alt;
  std::vector<TestDescriptor> tests;
  int replicates = 2000;
  double alpha = 0.05;
  std::uint64_t seed = kDefaultSeed;
  bool size_adjusted = true;
  int bootstrap_G = 1000;
  int identity_nodes = 256;
  int threads = 1;

  int N() const;
};

/// Throws ConfigError on inconsistent settings.
void validate_config(const SimConfig& cfg);

/// Key=value rendering and parsing; `threads` is not part of the echo.
std::vector<std::pair<std::string, std::string>> config_to_kv(const SimConfig& cfg);
SimConfig config_from_kv(const std::vector<std::pair<std::string, std::string>>& kv);
SimConfig load_config(const std::filesystem::path& path);
/// Key=value lines; blank lines and '#' comments are skipped.
std::vector<std::pair<std::string, std::string>> read_kv_file(const std::filesystem::path& path);
/// Comma-separated list of signal scales.
std::vector<double> parse_c_grid(const std::string& text);

/// Hex digest of the config echo.
std::string config_digest(const SimConfig& cfg);

struct SimRow {
  std::string test_id;
  std::string criterion;
  std::string shrinkage;
  std::string prior;
  double c = 0.0;
  double signal = 0.0;
  double rate = 0.0;
  double se = 0.0;
  int replicates = 0;
  std::uint64_t seed = 0;

  bool operator==(const SimRow&) const = default;
};

struct TestSamples {
  std::string test_id;
  /// statistics[g][r] and p_values[g][r] for grid point g and replicate r.
  std::vector<std::vector<double>> statistics;
  std::vector<std::vector<double>> p_values;
  double cutoff = 0.0;  // size-adjusted cutoff, if used
};

struct SimResult {
  std::string digest;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<SimRow> rows;
  double wall_seconds = 0.0;
  std::vector<TestSamples> samples;  // in memory only

  /// Compares everything that is persisted.
  bool operator==(const SimResult& other) const;
};

SimResult empirical_size(const SimConfig& cfg);
SimResult power_curve(const SimConfig& cfg, const std::vector<double>& c_grid);

/// Writes `path` (results CSV), `path` + ".config" (key=value echo) and one
/// "<stem>_<test_id>_plot.csv" per test next to it. Creates parent
/// directories.
void persist(const SimResult& result, const std::filesystem::path& path);
SimResult load_result(const std::filesystem::path& path);

/// Results CSV body alone.
std::string results_csv(const SimResult& result);

}  // namespace shrinkglht
