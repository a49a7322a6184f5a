#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "bayesdens/io.hpp"

using namespace bayesdens;

TEST(ReadValues, SkipsBlankAndCommentLines) {
  std::istringstream in("# header\n1.5\n\n  -2e-3 \n\t# indented comment\n+4\n7\r\n");
  const auto v = read_values(in);
  ASSERT_EQ(v.size(), 4u);
  EXPECT_DOUBLE_EQ(v[0], 1.5);
  EXPECT_DOUBLE_EQ(v[1], -2e-3);
  EXPECT_DOUBLE_EQ(v[2], 4.0);
  EXPECT_DOUBLE_EQ(v[3], 7.0);
}

TEST(ReadValues, ParseErrorReportsLine) {
  std::istringstream in("1\n2\nabc\n");
  try {
    read_values(in);
    FAIL() << "expected ParseError";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  std::istringstream trailing("1.0x\n");
  EXPECT_THROW(read_values(trailing), Error);
  std::istringstream two("1 2\n");
  EXPECT_THROW(read_values(two), Error);
}

TEST(ReadValues, EmptyInput) {
  std::istringstream in("");
  EXPECT_TRUE(read_values(in).empty());
}

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.125, 0.0}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(2.0), "2");
}

TEST(Writers, EstimateCsv) {
  DensityEstimate est;
  est.x = {0.0, 0.5};
  est.density = {1.0, 0.25};
  est.lower = {0.5, 0.125};
  est.upper = {1.5, 0.375};
  std::ostringstream out;
  write_estimate_csv(out, est);
  EXPECT_EQ(out.str(), "x,density,lower,upper\n0,1,0.5,1.5\n0.5,0.25,0.125,0.375\n");
}

TEST(Writers, EstimateJsonFields) {
  DensityEstimate est;
  est.x = {0.0};
  est.density = {1.0};
  est.lower = {0.5};
  est.upper = {1.5};
  est.method = Method::Nuts;
  const auto j = estimate_json(est, 42, 1000);
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"x", "density", "lower", "upper", "level", "method",
                                            "seed", "n"}));
  EXPECT_EQ(j["method"], "nuts");
  EXPECT_EQ(j["seed"], 42);
}

TEST(Writers, AccuracyCsv) {
  std::vector<AccuracyRow> rows(2);
  rows[0] = {0, Method::Slice, 1000, 96.5, 1.25};
  rows[1] = {1, Method::Nuts, 1000, std::nan(""), 0.5};
  std::ostringstream out;
  write_accuracy_csv(out, rows);
  EXPECT_EQ(out.str(),
            "replication,engine,n,accuracy,seconds\n0,slice,1000,96.5,1.25\n1,nuts,1000,NA,0.5\n");
}

TEST(Writers, CoverageCsv) {
  CoverageTable t;
  t.coverage_pct = {95, 96, 97, 98, 99, 100, 94, 93, 92.5};
  t.n = 1000;
  std::ostringstream out;
  write_coverage_csv(out, t);
  const std::string s = out.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "engine,n,decile,coverage_pct");
  EXPECT_NE(s.find("\nslice,1000,1,95\n"), std::string::npos);
  EXPECT_NE(s.find("\nslice,1000,9,92.5\n"), std::string::npos);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 10);
}
