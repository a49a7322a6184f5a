#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "bayesdens/evaluation.hpp"

namespace fs = std::filesystem;
using namespace bayesdens;

namespace {

const std::string kCli = BAYESDENS_CLI_PATH;

fs::path work_dir() {
  const fs::path d = fs::temp_directory_path() / "bayesdens_cli_test";
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct RunResult {
  int code;
  std::string err;
};

RunResult run(const std::string& args) {
  const fs::path err = work_dir() / "stderr.txt";
  const std::string cmd = "'" + kCli + "' " + args + " 2> '" + err.string() + "' > /dev/null";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

fs::path write_sample(const std::string& name, std::size_t n) {
  const fs::path p = work_dir() / name;
  Rng rng(99, 0);
  std::ofstream out(p);
  out << "# mw8 sample\n";
  for (double v : mixture_sample(mw8(), n, rng)) out << v << '\n';
  return p;
}

const std::string kSmall = " --grid-size 101 --num-basis 15 --samples 200 --warmup 50 ";

}  // namespace

TEST(Cli, FitIsByteIdenticalAcrossRuns) {
  const fs::path in = write_sample("data.txt", 400);
  const fs::path a = work_dir() / "a.csv";
  const fs::path b = work_dir() / "b.csv";
  for (const auto& out : {a, b}) {
    const auto r = run("fit --input '" + in.string() + "' --output '" + out.string() + "'" +
                       kSmall + "--seed 5");
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(slurp(a), slurp(b));
  auto ja = nlohmann::json::parse(slurp(a.string() + ".json"));
  auto jb = nlohmann::json::parse(slurp(b.string() + ".json"));
  ja["config"].erase("output");
  jb["config"].erase("output");
  EXPECT_EQ(ja, jb);
  EXPECT_EQ(slurp(a).substr(0, 22), "x,density,lower,upper\n");
}

TEST(Cli, ConfigEchoListsEveryFlag) {
  const fs::path in = write_sample("data2.txt", 300);
  const fs::path out = work_dir() / "echo.csv";
  const auto r = run("fit --input '" + in.string() + "' --output '" + out.string() +
                     "' --method slice --grid-size 101 --num-basis 12 --eval-points 50"
                     " --sigma-beta 500 --s-sigma 200 --warmup 40 --samples 150 --seed 3"
                     " --level 0.9 --padding 0.1 --target-accept 0.85");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(out.string() + ".json"));
  const auto& c = j.at("config");
  for (const char* k : {"input", "output", "method", "grid_size", "num_basis", "eval_points",
                        "sigma_beta", "s_sigma", "warmup", "samples", "seed", "level",
                        "log_transform", "padding", "target_accept"}) {
    EXPECT_TRUE(c.contains(k)) << k;
  }
  EXPECT_EQ(c["num_basis"], 12);
  EXPECT_EQ(c["level"], 0.9);
  EXPECT_EQ(c["target_accept"], 0.85);
  EXPECT_EQ(j["x"].size(), 50u);
  EXPECT_TRUE(j.contains("diagnostics"));
  EXPECT_FALSE(j["diagnostics"].contains("seconds"));
}

TEST(Cli, TooFewPointsIsDataError) {
  const fs::path in = work_dir() / "tiny.txt";
  std::ofstream(in) << "1\n2\n3\n";
  const auto r = run("fit --input '" + in.string() + "' --output '" +
                     (work_dir() / "tiny.csv").string() + "'");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("TooFewPoints"), std::string::npos) << r.err;
}

TEST(Cli, ParseErrorIsDataError) {
  const fs::path in = work_dir() / "bad.txt";
  std::ofstream(in) << "1\nfoo\n";
  const auto r = run("fit --input '" + in.string() + "' --output '" +
                     (work_dir() / "bad.csv").string() + "'");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("fit --output x.csv").code, 1);
  EXPECT_EQ(run("fit --input a --output b --method gibbs").code, 1);
  const auto r = run("coverage --output c.csv --mixture mw8 --reps 10");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_EQ(run("accuracy --output c.csv --weights 0.5,0.6 --means 0,1 --sds 1,1").code, 1);
}

TEST(Cli, CoverageWritesNineDeciles) {
  const fs::path out = work_dir() / "cov.csv";
  const auto r = run("coverage --mixture mw8 --n 200 --reps 50 --output '" + out.string() + "'" +
                     kSmall);
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(slurp(out));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "engine,n,decile,coverage_pct");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 9);
}

TEST(Cli, AccuracyAcceptsCustomMixture) {
  const fs::path out = work_dir() / "acc.csv";
  const auto r = run("accuracy --weights 0.5,0.5 --means -1,1 --sds 0.5,0.5 --n 200 --reps 2"
                     " --output '" + out.string() + "'" + kSmall);
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string s = slurp(out);
  EXPECT_EQ(s.substr(0, s.find('\n')), "replication,engine,n,accuracy,seconds");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 3);
}
