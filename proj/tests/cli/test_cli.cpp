#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "helpers.hpp"
#include "shrinkglht/error.hpp"
#include "shrinkglht/glht.hpp"
#include "shrinkglht_cli/commands.hpp"
#include "shrinkglht_cli/matrix_io.hpp"

using namespace shrinkglht;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("shrinkglht_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    problem_ = support::manova(12, {20, 25, 30}, 77);
    cli::write_matrix_csv(problem_.Y, path("Y.csv"));
    cli::write_matrix_csv(problem_.X, path("X.csv"));
    cli::write_matrix_csv(problem_.C, path("C.csv"));
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::vector<std::string> inputs() const {
    return {"--Y", path("Y.csv"), "--X", path("X.csv"), "--C", path("C.csv")};
  }

  std::vector<std::string> with_inputs(std::vector<std::string> head,
                                       const std::vector<std::string>& tail = {}) const {
    const auto in = inputs();
    head.insert(head.end(), in.begin(), in.end());
    head.insert(head.end(), tail.begin(), tail.end());
    return head;
  }

  fs::path dir_;
  GlhtProblem problem_;
};

}  // namespace

TEST_F(CliTest, MatrixRoundTrip) {
  const Matrix back = cli::read_matrix_csv(path("Y.csv"));
  EXPECT_EQ(back, problem_.Y);
  {
    std::ofstream bad(path("bad.csv"));
    bad << "1,2\n3\n";
  }
  EXPECT_THROW(cli::read_matrix_csv(path("bad.csv")), Error);
  {
    std::ofstream bad(path("nan.csv"));
    bad << "1,abc\n";
  }
  EXPECT_THROW(cli::read_matrix_csv(path("nan.csv")), Error);
}

TEST_F(CliTest, ClassicalReproducesTextbookStatistic) {
  const auto r = call(with_inputs({"test"}, {"--shrinkage", "classical", "--criterion", "LH", "--out",
                                             path("classical.json")}));
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = read_json(path("classical.json"));
  const double n = static_cast<double>(problem_.Y.cols() - problem_.X.rows());
  const Matrix xxt_inv = (problem_.X * problem_.X.transpose()).inverse();
  const Matrix resid = Matrix::Identity(problem_.Y.cols(), problem_.Y.cols()) -
                       problem_.X.transpose() * xxt_inv * problem_.X;
  const Matrix sigma = problem_.Y * resid * problem_.Y.transpose() / n;
  const Matrix bc = problem_.Y * problem_.X.transpose() * xxt_inv * problem_.C;
  const Matrix hyp = bc * (problem_.C.transpose() * xxt_inv * problem_.C).inverse() * bc.transpose() / n;
  const double expected = (hyp * sigma.inverse()).trace();
  EXPECT_NEAR(j["raw_statistic"].get<double>(), expected, 1e-8 * expected);
  EXPECT_TRUE(j["p_value"].is_null());
}

TEST_F(CliTest, IdentityDispatch) {
  const auto r = call(with_inputs({"test"}, {"--shrinkage", "identity", "--criterion", "LH", "--out",
                                             path("id.json")}));
  ASSERT_EQ(r.code, 0) << r.err;
  const TestOutcome o = run_test(problem_, ShrinkageSpec::identity(), Criterion::LH);
  EXPECT_EQ(read_json(path("id.json"))["standardized"].get<double>(), o.standardized);
}

TEST_F(CliTest, RidgeSelectionAndFixedEll) {
  auto r = call(with_inputs({"test"}, {"--out", path("ridge.json")}));
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = read_json(path("ridge.json"));
  EXPECT_LT(j["ell_star"].get<double>(), 0.0);
  EXPECT_NE(r.out.find("ell_star"), std::string::npos);
  EXPECT_NE(r.out.find("p_value"), std::string::npos);

  r = call(with_inputs({"test"}, {"--ell", "-0.5", "--criterion", "BNP", "--out", path("fixed.json")}));
  ASSERT_EQ(r.code, 0) << r.err;
  const TestOutcome o = run_test(problem_, ShrinkageSpec::ridge(-0.5), Criterion::BNP);
  EXPECT_EQ(read_json(path("fixed.json"))["p_value"].get<double>(), o.p_value);

  r = call(with_inputs({"test"}, {"--shrinkage", "higher"}));
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST_F(CliTest, SelectWritesTrace) {
  const auto r = call(with_inputs({"select"}, {"--prior", "0,1,0", "--grid", "40", "--out", path("sel.json")}));
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = read_json(path("sel.json"));
  EXPECT_GE(j["trace"].size(), 40u);
  EXPECT_EQ(j["bounds"]["grid_size"].get<int>(), 40);
}

TEST_F(CliTest, MissingFileNamesPath) {
  auto args = inputs();
  args[5] = path("nope_C.csv");
  args.insert(args.begin(), "test");
  const auto r = call(args);
  EXPECT_EQ(r.code, cli::kExitValidation);
  EXPECT_NE(r.err.find("nope_C.csv"), std::string::npos);
}

TEST_F(CliTest, MalformedInputFailsFast) {
  {
    std::ofstream bad(path("Ybad.csv"));
    bad << "1,2,x\n";
  }
  auto args = inputs();
  args[1] = path("Ybad.csv");
  args.insert(args.begin(), "test");
  const auto start = std::chrono::steady_clock::now();
  const auto r = call(args);
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  EXPECT_EQ(r.code, cli::kExitValidation);
  EXPECT_LT(ms, 100.0);

  cli::write_matrix_csv(Matrix::Ones(3, 7), path("Xbad.csv"));
  args = inputs();
  args[3] = path("Xbad.csv");
  args.insert(args.begin(), "test");
  EXPECT_EQ(call(args).code, cli::kExitValidation);

  EXPECT_EQ(call(with_inputs({"test"}, {"--alpha", "1.5"})).code, cli::kExitValidation);
  EXPECT_EQ(call(with_inputs({"test"}, {"--criterion", "wilks"})).code, cli::kExitValidation);
  EXPECT_EQ(call({"test"}).code, cli::kExitValidation);
  EXPECT_EQ(call({"bogus"}).code, cli::kExitValidation);
}

TEST_F(CliTest, NumericalFailureExitCode) {
  cli::write_matrix_csv(Matrix::Zero(problem_.Y.rows(), problem_.Y.cols()), path("Yzero.csv"));
  auto args = inputs();
  args[1] = path("Yzero.csv");
  args.insert(args.begin(), "test");
  args.push_back("--ell");
  args.push_back("-1");
  const auto r = call(args);
  EXPECT_EQ(r.code, cli::kExitNumerical);
  EXPECT_NE(r.err.find("NonPositiveVariance"), std::string::npos);
}

TEST_F(CliTest, HelpExitsZero) { EXPECT_EQ(call({"--help"}).code, 0); }

TEST_F(CliTest, CompositeDeterministicBytes) {
  const auto a = call(with_inputs({"composite"}, {"--seed", "5", "--bootstrap", "2000"}));
  const auto b = call(with_inputs({"composite"}, {"--seed", "5", "--bootstrap", "2000"}));
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const auto c = call(with_inputs({"--threads", "3", "composite"}, {"--seed", "5", "--bootstrap", "2000"}));
  EXPECT_EQ(a.out, c.out);
  EXPECT_EQ(call(with_inputs({"composite"}, {"--bootstrap", "10"})).code, cli::kExitValidation);
}

TEST_F(CliTest, CompositeSinglePriorMatchesTest) {
  ASSERT_EQ(call(with_inputs({"composite"}, {"--prior", "1,0,0", "--bootstrap", "20000", "--out",
                                             path("comp.json")}))
                .code,
            0);
  ASSERT_EQ(call(with_inputs({"test"}, {"--prior", "1,0,0", "--out", path("t.json")})).code, 0);
  const double pc = read_json(path("comp.json"))["p_value"].get<double>();
  const double pt = read_json(path("t.json"))["p_value"].get<double>();
  EXPECT_LE(std::abs(pc - pt), 3.0 * std::sqrt(pt * (1 - pt) / 20000) + 1e-12);
}

TEST_F(CliTest, CompositeBootstrapSizes) {
  // A modest group effect puts the p-value near the 5% level.
  Matrix y = problem_.Y;
  y.leftCols(20).array() += 0.32;
  cli::write_matrix_csv(y, path("Ysig.csv"));
  auto args = [&](const std::string& g, const std::string& out) {
    return std::vector<std::string>{"composite", "--Y", path("Ysig.csv"), "--X", path("X.csv"), "--C",
                                    path("C.csv"), "--bootstrap", g, "--out", path(out)};
  };
  ASSERT_EQ(call(args("1000", "small.json")).code, 0);
  ASSERT_EQ(call(args("100000", "big.json")).code, 0);
  const double a = read_json(path("small.json"))["p_value"].get<double>();
  const double b = read_json(path("big.json"))["p_value"].get<double>();
  RecordProperty("p_small", std::to_string(a));
  RecordProperty("p_big", std::to_string(b));
  EXPECT_LE(std::abs(a - b), 3.0 * std::sqrt(0.05 * 0.95 / 1000));
}

TEST_F(CliTest, SimulateSize) {
  const std::string out = path("sim/deeper");
  const auto r = call({"simulate-size", "--p", "20", "--k", "3", "--groups", "10,12,14", "--replicates", "100",
                       "--test", "r=LR/ridge/1,0,0", "--test", "z=LH/identity", "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_TRUE(fs::exists(fs::path(out) / "results.csv"));
  const SimResult back = load_result(fs::path(out) / "results.csv");
  ASSERT_EQ(back.rows.size(), 2u);
  EXPECT_EQ(back.rows[0].replicates, 100);

  EXPECT_EQ(call({"simulate-size", "--p", "20", "--replicates", "99", "--out", path("x")}).code,
            cli::kExitValidation);
  EXPECT_FALSE(fs::exists(path("x") + "/results.csv"));
  EXPECT_EQ(call({"simulate-size", "--p", "20", "--groups", "10,12,14", "--alt", "dense", "--out", path("y")}).code,
            cli::kExitValidation);
}

TEST_F(CliTest, SimulateFromConfigAndThreads) {
  {
    std::ofstream cfg(path("power.cfg"));
    cfg << "p=20\nk=3\ngroup_sizes=10,12,14\nalt=dense\nreplicates=100\ntest=z=LH/identity\n"
        << "c_grid=0,0.1,0.2\n";
  }
  const auto a = call({"simulate-power", "--config", path("power.cfg"), "--out", path("p1")});
  ASSERT_EQ(a.code, 0) << a.err;
  const auto b = call({"--threads", "4", "simulate-power", "--config", path("power.cfg"), "--out", path("p2")});
  ASSERT_EQ(b.code, 0) << b.err;
  std::ifstream f1(path("p1/results.csv")), f2(path("p2/results.csv"));
  const std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  const std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  EXPECT_EQ(s1, s2);
  EXPECT_TRUE(fs::exists(path("p1/results_z_plot.csv")));
  EXPECT_EQ(call({"simulate-power", "--config", path("power.cfg"), "--c-grid", "0.1,0.2", "--out", path("p3")}).code,
            cli::kExitValidation);
}

TEST(CliThreads, EnvironmentOverride) {
  ::setenv("SHRINKGLHT_THREADS", "3", 1);
  EXPECT_EQ(cli::default_threads(), 3);
  ::setenv("SHRINKGLHT_THREADS", "zero", 1);
  EXPECT_THROW(cli::default_threads(), Error);
  ::unsetenv("SHRINKGLHT_THREADS");
  EXPECT_EQ(cli::default_threads(), 1);
}
