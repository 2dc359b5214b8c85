#include "shrinkglht_cli/commands.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>

#include "shrinkglht/composite.hpp"
#include "shrinkglht/error.hpp"
#include "shrinkglht/glht.hpp"
#include "shrinkglht/selector.hpp"
#include "shrinkglht/simlab.hpp"
#include "shrinkglht_cli/matrix_io.hpp"

namespace shrinkglht::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

struct InputArgs {
  std::string y, x, c;
};

void add_inputs(CLI::App* sub, InputArgs& in) {
  sub->add_option("--Y", in.y, "p x N response matrix (CSV)")->required();
  sub->add_option("--X", in.x, "k x N design matrix (CSV)")->required();
  sub->add_option("--C", in.c, "k x q constraint matrix (CSV)")->required();
}

Matrix load(const std::string& path, const char* name) {
  if (!fs::exists(path)) {
    fail(ErrorKind::IoError, std::string("missing ") + name + " file: " + path);
  }
  return read_matrix_csv(path);
}

GlhtProblem load_problem(const InputArgs& in) {
  GlhtProblem problem{load(in.y, "Y"), load(in.x, "X"), load(in.c, "C")};
  validate_problem(problem);
  return problem;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::InvalidArgument, "--alpha must lie in (0, 1)");
}

PriorWeights single_prior(const std::string& text) {
  const auto panel = parse_panel(text);
  if (panel.size() != 1) fail(ErrorKind::InvalidArgument, "expected a single prior t0,t1,t2");
  return panel.front();
}

void write_json(const json& record, const std::string& path) {
  if (path.empty()) return;
  const fs::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
  std::ofstream out(p);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path);
  out << record.dump(2) << '\n';
}

json prior_json(const PriorWeights& w) { return json::array({w.t0, w.t1, w.t2}); }

json spec_json(const ShrinkageSpec& f) {
  json j;
  j["description"] = f.describe();
  if (f.is<ShrinkageSpec::Ridge>()) {
    j["ell"] = f.as<ShrinkageSpec::Ridge>().ell;
  } else if (f.is<ShrinkageSpec::RidgeMixture>()) {
    json terms = json::array();
    for (const auto& t : f.as<ShrinkageSpec::RidgeMixture>().terms) {
      terms.push_back({{"root", t.root}, {"weight", t.weight}});
    }
    j["terms"] = terms;
  }
  return j;
}

RidgeBounds resolve_bounds(const SpectralSummary& spec, std::optional<double> lo,
                           std::optional<double> hi, std::optional<int> grid) {
  RidgeBounds b = default_ridge_bounds(spec);
  if (lo) b.lo = *lo;
  if (hi) b.hi = *hi;
  if (grid) b.grid_size = *grid;
  validate_bounds(b);
  return b;
}

struct SelectionArgs {
  std::string prior = "1,0,0";
  std::optional<double> lo, hi;
  std::optional<int> grid;
  int roots = 12;
};

void add_selection(CLI::App* sub, SelectionArgs& s) {
  sub->add_option("--prior", s.prior, "prior weights t0,t1,t2");
  sub->add_option("--lo", s.lo, "most negative ridge parameter");
  sub->add_option("--hi", s.hi, "least negative ridge parameter");
  sub->add_option("--grid", s.grid, "ridge grid size");
  sub->add_option("--roots", s.roots, "root grid size for --shrinkage higher");
}

// ---------------------------------------------------------------- test

struct TestArgs {
  InputArgs in;
  SelectionArgs sel;
  std::string criterion = "LR";
  std::string shrinkage = "ridge";
  std::optional<double> ell;
  double alpha = 0.05;
  int nodes = 2048;
  std::string out;
};

int cmd_test(const TestArgs& a, int threads, std::ostream& out) {
  const Criterion crit = parse_criterion(a.criterion);
  check_alpha(a.alpha);
  const PriorWeights prior = single_prior(a.sel.prior);
  const GlhtProblem problem = load_problem(a.in);
  const FitArtifacts f = fit(problem);

  json record;
  record["command"] = "test";
  record["criterion"] = std::string(to_string(crit));
  record["shrinkage_mode"] = a.shrinkage;
  record["p"] = problem.Y.rows();
  record["n"] = f.n;
  record["q"] = f.q();

  if (a.shrinkage == "classical") {
    const std::vector<double> eigs = symmetric_eigenvalues(m_matrix(f, ShrinkageSpec::classical_inverse()));
    const double raw = raw_statistics(eigs).of(crit);
    out << "criterion: " << to_string(crit) << "\nshrinkage: classical\n"
        << "statistic: " << num(raw) << "\nstandardized: n/a\n";
    record["m_eigenvalues"] = eigs;
    record["raw_statistic"] = raw;
    record["standardized"] = nullptr;
    record["p_value"] = nullptr;
    write_json(record, a.out);
    return kExitOk;
  }

  ShrinkageSpec spec = ShrinkageSpec::identity();
  if (a.shrinkage == "identity") {
  } else if (a.shrinkage == "ridge" && a.ell) {
    spec = ShrinkageSpec::ridge(*a.ell);
  } else if (a.shrinkage == "ridge" || a.shrinkage == "higher") {
    const RidgeBounds b = resolve_bounds(f.spec, a.sel.lo, a.sel.hi, a.sel.grid);
    const SelectionResult s = a.shrinkage == "ridge"
                                  ? select_ridge(f.spec, prior, b, threads)
                                  : select_higher_order(f.spec, prior, b, a.sel.roots);
    spec = s.f_star;
    record["prior"] = prior_json(prior);
    record["xi_star"] = s.xi_star;
    if (spec.is<ShrinkageSpec::Ridge>()) {
      out << "ell_star: " << num(spec.as<ShrinkageSpec::Ridge>().ell) << '\n';
      record["ell_star"] = spec.as<ShrinkageSpec::Ridge>().ell;
    }
    out << "xi_star: " << num(s.xi_star) << '\n';
  } else {
    fail(ErrorKind::InvalidArgument, "unknown --shrinkage '" + a.shrinkage + "'");
  }

  const TestOutcome o = run_test(f, spec, crit, a.nodes);
  out << "criterion: " << to_string(crit) << "\nshrinkage: " << spec.describe()
      << "\nstatistic: " << num(o.standardized) << "\np_value: " << num(o.p_value)
      << "\nreject: " << (o.rejects(a.alpha) ? "yes" : "no") << " (alpha " << num(a.alpha) << ")\n";
  record["shrinkage"] = spec_json(spec);
  record["m_eigenvalues"] = o.m_eigs;
  record["raw_statistic"] = o.raw_stat;
  record["omega_hat"] = o.omega_hat;
  record["delta_hat"] = o.delta_hat;
  record["standardized"] = o.standardized;
  record["p_value"] = o.p_value;
  record["alpha"] = a.alpha;
  record["reject"] = o.rejects(a.alpha);
  write_json(record, a.out);
  return kExitOk;
}

// -------------------------------------------------------------- select

struct SelectArgs {
  InputArgs in;
  SelectionArgs sel;
  std::string shrinkage = "ridge";
  std::string out;
};

int cmd_select(const SelectArgs& a, int threads, std::ostream& out) {
  const PriorWeights prior = single_prior(a.sel.prior);
  if (a.shrinkage != "ridge" && a.shrinkage != "higher") {
    fail(ErrorKind::InvalidArgument, "--shrinkage must be ridge or higher");
  }
  const GlhtProblem problem = load_problem(a.in);
  const FitArtifacts f = fit(problem);
  const RidgeBounds b = resolve_bounds(f.spec, a.sel.lo, a.sel.hi, a.sel.grid);
  const SelectionResult s = a.shrinkage == "ridge" ? select_ridge(f.spec, prior, b, threads)
                                                   : select_higher_order(f.spec, prior, b, a.sel.roots);
  out << "shrinkage: " << s.f_star.describe() << "\nxi_star: " << num(s.xi_star) << '\n';
  json record;
  record["command"] = "select";
  record["mode"] = a.shrinkage;
  record["prior"] = prior_json(prior);
  record["bounds"] = {{"lo", b.lo}, {"hi", b.hi}, {"grid_size", b.grid_size}};
  record["f_star"] = spec_json(s.f_star);
  record["xi_star"] = s.xi_star;
  json trace = json::array();
  for (const auto& [param, xi] : s.trace) trace.push_back({param, xi});
  record["trace"] = trace;
  write_json(record, a.out);
  return kExitOk;
}

// ----------------------------------------------------------- composite

struct CompositeArgs {
  InputArgs in;
  std::string criterion = "LR";
  std::string prior = "canonical";
  int bootstrap = 10000;
  std::uint64_t seed = kDefaultSeed;
  double alpha = 0.05;
  std::string out;
};

int cmd_composite(const CompositeArgs& a, int threads, std::ostream& out) {
  CompositeConfig cfg;
  cfg.criterion = parse_criterion(a.criterion);
  cfg.panel = parse_panel(a.prior);
  cfg.bootstrap_G = a.bootstrap;
  cfg.seed = a.seed;
  cfg.threads = threads;
  check_alpha(a.alpha);
  validate_config(cfg);
  const GlhtProblem problem = load_problem(a.in);
  const CompositeOutcome o = run_composite(problem, cfg);

  json record;
  record["command"] = "composite";
  record["criterion"] = std::string(to_string(cfg.criterion));
  json per = json::array();
  for (const auto& r : o.per_prior) {
    out << "prior " << num(r.prior.t0) << ',' << num(r.prior.t1) << ',' << num(r.prior.t2)
        << ": ell_star " << num(r.ell_star) << ", statistic " << num(r.statistic) << '\n';
    per.push_back({{"prior", prior_json(r.prior)}, {"ell_star", r.ell_star}, {"statistic", r.statistic}});
  }
  out << "t_max: " << num(o.t_max) << "\np_value: " << num(o.p_value)
      << "\nreject: " << (o.p_value < a.alpha ? "yes" : "no") << " (alpha " << num(a.alpha) << ")\n";
  record["per_prior"] = per;
  record["t_max"] = o.t_max;
  auto matrix_json = [](const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      rows.push_back(row);
    }
    return rows;
  };
  record["delta_star"] = matrix_json(o.delta_star);
  record["delta_star_psd"] = matrix_json(o.delta_star_psd);
  record["bootstrap_G"] = cfg.bootstrap_G;
  record["seed"] = cfg.seed;
  record["p_value"] = o.p_value;
  write_json(record, a.out);
  return kExitOk;
}

// ------------------------------------------------------------ simulate

struct SimArgs {
  std::string config;
  std::optional<int> p, k, replicates, bootstrap, identity_nodes;
  std::string groups, cov, alt, c_grid;
  std::vector<std::string> tests;
  std::optional<double> alpha;
  std::optional<std::uint64_t> seed;
  bool no_size_adjust = false;
  std::string out;
};

void add_sim_options(CLI::App* sub, SimArgs& s, bool power) {
  sub->add_option("--config", s.config, "key=value configuration file");
  sub->add_option("--p", s.p, "dimension");
  sub->add_option("--k", s.k, "number of groups");
  sub->add_option("--groups", s.groups, "group sizes, comma separated");
  sub->add_option("--cov", s.cov, "identity | dense | toeplitz[:rho] | discrete");
  sub->add_option("--test", s.tests, "test descriptor id=criterion/mode[/prior]");
  sub->add_option("--replicates", s.replicates, "Monte Carlo replicates (>= 100)");
  sub->add_option("--alpha", s.alpha, "significance level");
  sub->add_option("--seed", s.seed, "random seed");
  sub->add_option("--bootstrap", s.bootstrap, "bootstrap draws for composite tests");
  sub->add_option("--identity-nodes", s.identity_nodes, "quadrature nodes per side for identity tests");
  sub->add_option("--out", s.out, "output directory")->required();
  if (power) {
    sub->add_option("--alt", s.alt, "dense | sparse");
    sub->add_option("--c-grid", s.c_grid, "signal scales, comma separated, starting at 0");
    sub->add_flag("--no-size-adjust", s.no_size_adjust, "use nominal instead of size-adjusted cutoffs");
  }
}

int cmd_simulate(const SimArgs& a, bool power, int threads, std::ostream& out) {
  SimConfig cfg;
  cfg.tests.clear();
  std::vector<double> grid;
  if (!a.config.empty()) {
    const auto kv = read_kv_file(a.config);
    cfg = config_from_kv(kv);
    for (const auto& [key, value] : kv) {
      if (key == "c_grid") grid = parse_c_grid(value);
    }
  }
  if (a.p) cfg.p = *a.p;
  if (a.k) cfg.k = *a.k;
  if (!a.groups.empty()) {
    cfg.group_sizes.clear();
    for (double g : parse_c_grid(a.groups)) cfg.group_sizes.push_back(static_cast<int>(g));
  }
  if (!a.cov.empty()) cfg.cov = CovModel::parse(a.cov);
  if (!a.alt.empty()) cfg.alt = AlternativeModel::parse(a.alt);
  if (!a.tests.empty()) {
    cfg.tests.clear();
    for (const auto& t : a.tests) cfg.tests.push_back(TestDescriptor::parse(t));
  }
  if (cfg.tests.empty()) {
    cfg.tests = {TestDescriptor::parse("ridge=LR/ridge/1,0,0"), TestDescriptor::parse("zgz=LH/identity"),
                 TestDescriptor::parse("comp=LR/composite/canonical")};
  }
  if (a.replicates) cfg.replicates = *a.replicates;
  if (a.alpha) cfg.alpha = *a.alpha;
  if (a.seed) cfg.seed = *a.seed;
  if (a.bootstrap) cfg.bootstrap_G = *a.bootstrap;
  if (a.identity_nodes) cfg.identity_nodes = *a.identity_nodes;
  if (a.no_size_adjust) cfg.size_adjusted = false;
  if (!a.c_grid.empty()) grid = parse_c_grid(a.c_grid);
  cfg.threads = threads;
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) fail(ErrorKind::ConfigError, "--alpha must lie in (0, 1)");
  validate_config(cfg);
  if (power && grid.empty()) fail(ErrorKind::ConfigError, "simulate-power needs --c-grid");

  const SimResult result = power ? power_curve(cfg, grid) : empirical_size(cfg);
  const fs::path dir(a.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::IoError, "cannot create output directory " + a.out);
  const fs::path csv = dir / "results.csv";
  persist(result, csv);
  out << results_csv(result);
  out << "written: " << csv.string() << '\n';
  return kExitOk;
}

}  // namespace

int default_threads() {
  if (const char* env = std::getenv("SHRINKGLHT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 1024) return static_cast<int>(v);
    fail(ErrorKind::InvalidArgument, "SHRINKGLHT_THREADS must be a positive integer");
  }
  return 1;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Regularized high-dimensional general linear hypothesis tests"};
  app.require_subcommand(1);
  std::optional<int> threads_flag;
  app.add_option("--threads", threads_flag, "worker threads (default: SHRINKGLHT_THREADS or 1)");

  TestArgs test_args;
  auto* test = app.add_subcommand("test", "run one regularized test");
  add_inputs(test, test_args.in);
  add_selection(test, test_args.sel);
  test->add_option("--criterion", test_args.criterion, "LR | LH | BNP");
  test->add_option("--shrinkage", test_args.shrinkage, "ridge | higher | identity | classical");
  test->add_option("--ell", test_args.ell, "fixed ridge parameter (skips selection)");
  test->add_option("--alpha", test_args.alpha, "significance level");
  test->add_option("--nodes", test_args.nodes, "quadrature nodes per side for identity");
  test->add_option("--out", test_args.out, "JSON result record");
  test->add_option("--threads", threads_flag, "worker threads");

  SelectArgs select_args;
  auto* select = app.add_subcommand("select", "data-driven shrinkage selection");
  add_inputs(select, select_args.in);
  add_selection(select, select_args.sel);
  select->add_option("--shrinkage", select_args.shrinkage, "ridge | higher");
  select->add_option("--out", select_args.out, "JSON result record");
  select->add_option("--threads", threads_flag, "worker threads");

  CompositeArgs comp_args;
  auto* comp = app.add_subcommand("composite", "composite test over a prior panel");
  add_inputs(comp, comp_args.in);
  comp->add_option("--criterion", comp_args.criterion, "LR | LH | BNP");
  comp->add_option("--prior", comp_args.prior, "canonical, or t0,t1,t2 items joined by ';'");
  comp->add_option("--bootstrap", comp_args.bootstrap, "bootstrap draws (>= 1000)");
  comp->add_option("--seed", comp_args.seed, "random seed");
  comp->add_option("--alpha", comp_args.alpha, "significance level");
  comp->add_option("--out", comp_args.out, "JSON result record");
  comp->add_option("--threads", threads_flag, "worker threads");

  SimArgs size_args;
  auto* size = app.add_subcommand("simulate-size", "empirical size experiment");
  add_sim_options(size, size_args, false);
  size->add_option("--threads", threads_flag, "worker threads");

  SimArgs power_args;
  auto* power = app.add_subcommand("simulate-power", "power curve experiment");
  add_sim_options(power, power_args, true);
  power->add_option("--threads", threads_flag, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    const int threads = threads_flag ? *threads_flag : default_threads();
    if (threads < 1) fail(ErrorKind::InvalidArgument, "--threads must be positive");
    if (*test) return cmd_test(test_args, threads, out);
    if (*select) return cmd_select(select_args, threads, out);
    if (*comp) return cmd_composite(comp_args, threads, out);
    if (*size) return cmd_simulate(size_args, false, threads, out);
    if (*power) return cmd_simulate(power_args, true, threads, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_numerical(e.kind()) ? kExitNumerical : kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("shrinkglht");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace shrinkglht::cli
