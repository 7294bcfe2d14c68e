#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mcfipm/cli.hpp"
#include "support.hpp"

using namespace mcfipm;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "mcfipm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mcfipm_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }

  fs::path dir_;
};

const char* tiny = "p min 2 1\nn 1 5\nn 2 -5\na 1 2 0 10 3\n";

}  // namespace

TEST_F(CliTest, SolveWithOracle) {
  const auto r = run({"solve", write("tiny.dimacs", tiny), "--check-oracle"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("status: optimal"), std::string::npos);
  EXPECT_NE(r.out.find("cost: 15"), std::string::npos);
  EXPECT_NE(r.out.find("oracle_match: yes"), std::string::npos);
}

TEST_F(CliTest, GenGridWritesEightArcs) {
  const auto r = run({"gen", "grid", "--rows", "2", "--cols", "2", "--seed", "1", "-o", path("g.dimacs")});
  EXPECT_EQ(r.code, 0) << r.err;
  const Network net = parse_dimacs_string(slurp(path("g.dimacs")));
  EXPECT_EQ(net.num_arcs(), 8u);
  EXPECT_EQ(net, gen_grid(2, 2, 1));
}

TEST_F(CliTest, GenRandomToStdout) {
  const auto r = run({"gen", "random", "--n", "16", "--seed", "3"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(parse_dimacs_string(r.out), gen_random_sparse(16, 3));
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"solve"}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"solve", write("t.dimacs", tiny), "--solver", "gmres"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(CliTest, BadInputIsUsageError) {
  const auto r = run({"solve", write("bad.dimacs", "p min 2 1\nn 1 5\na 1 2 0 10 3\n")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
  EXPECT_EQ(run({"solve", path("missing.dimacs")}).code, 2);
}

TEST_F(CliTest, InfeasibleIsSolverFailure) {
  const auto r = run({"solve", write("inf.dimacs", "p min 2 1\nn 1 5\nn 2 -5\na 1 2 0 3 1\n")});
  EXPECT_EQ(r.code, 1);
}

TEST_F(CliTest, KrylovFailureReportsHistory) {
  std::ostringstream g;
  write_dimacs(g, gen_grid(10, 10, 1));
  const auto r = run({"solve", write("g.dimacs", g.str()), "--krylov-maxit", "1", "--krylov-tol", "1e-14"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("Krylov"), std::string::npos);
  EXPECT_NE(r.err.find("history"), std::string::npos);
}

TEST_F(CliTest, Components) {
  const auto r = run({"components", write("c.dimacs", "p min 4 2\na 1 2 0 1 1\na 4 3 0 1 1\n")});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "components: 2\n1 2\n2 2\n3 4\n4 4\n");
}

TEST_F(CliTest, DiagnosticsAreJsonLines) {
  std::ostringstream g;
  write_dimacs(g, gen_grid(4, 4, 2));
  const auto r = run({"solve", write("g.dimacs", g.str()), "--check-oracle", "--diag", path("d.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(slurp(path("d.jsonl")));
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    ++lines;
    EXPECT_EQ(j.at("iter").get<std::size_t>(), lines);
    for (const char* key : {"mu", "rel_fx", "rel_fy", "linear_iterations", "active_percent", "dt", "beta",
                            "components", "amg_levels", "level_sizes", "cost", "relative_error"})
      EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_TRUE(j.at("relative_error").is_number());
  }
  EXPECT_GT(lines, 0u);
  EXPECT_NE(r.out.find("newton_iterations: " + std::to_string(lines)), std::string::npos);
}

TEST_F(CliTest, DumpMatrix) {
  const auto r = run({"solve", write("t.dimacs", tiny), "--dump-matrix", path("l.mtx")});
  ASSERT_EQ(r.code, 0);
  const std::string mtx = slurp(path("l.mtx"));
  EXPECT_EQ(mtx.rfind("%%MatrixMarket", 0), 0u);
}

TEST_F(CliTest, BenchWritesCsv) {
  const auto r = run({"bench", "grid", "--sizes", "4", "6", "8", "--out", path("b.csv")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("alpha: "), std::string::npos);
  std::istringstream in(slurp(path("b.csv")));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, bench_csv_header);
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3u);
}
