#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sseek {

using Vec2 = Eigen::Vector2d;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Likelihood floor: keeps particle weights and predictive densities finite
// even when a hypothesis is effectively impossible.
inline constexpr double kEpsPdf = 1e-300;
inline const double kLogEpsPdf = std::log(kEpsPdf);

struct invalid_input_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct degenerate_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct not_identifiable_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline bool finite(const Vec2& v) {
  return std::isfinite(v.x()) && std::isfinite(v.y());
}

// log(sum_i exp(x_i)) without overflow; -inf for an empty span.
inline double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) return -std::numeric_limits<double>::infinity();
  double m = xs[0];
  for (double x : xs)
    if (x > m) m = x;
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

inline double log_sum_exp(const VectorXd& xs) {
  return log_sum_exp(std::span<const double>(xs.data(), static_cast<size_t>(xs.size())));
}

}  // namespace sseek
