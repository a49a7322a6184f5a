#pragma once

// Plain-text input and CSV/JSON output.

#include <charconv>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "bayesdens/error.hpp"
#include "bayesdens/estimator.hpp"
#include "bayesdens/evaluation.hpp"

namespace bayesdens {

/// One number per line; blank lines and lines starting with '#' are skipped.
inline std::vector<double> read_values(std::istream& in) {
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    const std::string_view field(line.data() + first, last - first + 1);
    double v = 0.0;
    const auto* begin = field.data();
    const auto* end = field.data() + field.size();
    if (*begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) {
      throw Error(ErrorKind::ParseError,
                  "line " + std::to_string(lineno) + ": not a number: '" + std::string(field) + "'");
    }
    out.push_back(v);
  }
  return out;
}

/// Shortest decimal form that round-trips.
inline std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline void write_estimate_csv(std::ostream& out, const DensityEstimate& est) {
  out << "x,density,lower,upper\n";
  for (std::size_t i = 0; i < est.x.size(); ++i) {
    out << format_double(est.x[i]) << ',' << format_double(est.density[i]) << ','
        << format_double(est.lower[i]) << ',' << format_double(est.upper[i]) << '\n';
  }
}

inline nlohmann::ordered_json estimate_json(const DensityEstimate& est, std::uint64_t seed,
                                            std::size_t n) {
  nlohmann::ordered_json j;
  j["x"] = est.x;
  j["density"] = est.density;
  j["lower"] = est.lower;
  j["upper"] = est.upper;
  j["level"] = est.level;
  j["method"] = std::string(to_string(est.method));
  j["seed"] = seed;
  j["n"] = n;
  return j;
}

inline void write_accuracy_csv(std::ostream& out, std::span<const AccuracyRow> rows) {
  out << "replication,engine,n,accuracy,seconds\n";
  for (const auto& r : rows) {
    out << r.replication << ',' << to_string(r.method) << ',' << r.n << ','
        << (std::isnan(r.accuracy) ? std::string("NA") : format_double(r.accuracy)) << ','
        << format_double(r.seconds) << '\n';
  }
}

inline void write_coverage_csv(std::ostream& out, const CoverageTable& t) {
  out << "engine,n,decile,coverage_pct\n";
  for (std::size_t j = 0; j < t.coverage_pct.size(); ++j) {
    out << to_string(t.method) << ',' << t.n << ',' << (j + 1) << ','
        << format_double(t.coverage_pct[j]) << '\n';
  }
}

}  // namespace bayesdens
