#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "bayesdens/error.hpp"

namespace bayesdens {

enum class Method { Slice, Nuts };

constexpr std::string_view to_string(Method m) {
  return m == Method::Slice ? "slice" : "nuts";
}

inline Method parse_method(std::string_view s) {
  if (s == "slice") return Method::Slice;
  if (s == "nuts") return Method::Nuts;
  throw Error(ErrorKind::BadConfig, "unknown method '" + std::string(s) + "'");
}

struct FitConfig {
  Method method = Method::Slice;
  int warmup = -1;  // negative selects the per-method default
  int retained = 1000;
  std::uint64_t seed = 1;
  double slice_width = 1.0;
  int slice_max_steps = 50;
  double nuts_target_accept = 0.8;
  int nuts_max_depth = 10;

  static constexpr int default_warmup(Method m) { return m == Method::Slice ? 100 : 1000; }

  int effective_warmup() const { return warmup < 0 ? default_warmup(method) : warmup; }

  void validate() const {
    if (retained < 100) throw Error(ErrorKind::BadConfig, "retained draws must be >= 100");
    if (!(slice_width > 0.0)) throw Error(ErrorKind::BadConfig, "slice width must be > 0");
    if (slice_max_steps < 1) throw Error(ErrorKind::BadConfig, "slice max steps must be >= 1");
    if (!(nuts_target_accept > 0.0 && nuts_target_accept < 1.0)) {
      throw Error(ErrorKind::BadConfig, "target acceptance must lie in (0, 1)");
    }
    if (nuts_max_depth < 1) throw Error(ErrorKind::BadConfig, "max tree depth must be >= 1");
  }
};

using Diagnostics = std::map<std::string, double>;

/// Retained draws; row g of `coef` is (beta0, beta1, u_1..u_K) at draw g.
struct PosteriorSamples {
  Eigen::MatrixXd coef;
  Eigen::VectorXd sigma2;
  Eigen::VectorXd a;
  Diagnostics diagnostics;

  Eigen::Index size() const { return coef.rows(); }
};

}  // namespace bayesdens
