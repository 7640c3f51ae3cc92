#pragma once

#include <cmath>

#include "sseek/common.hpp"

namespace sseek {

// Step sizes gamma_t = gamma0 / (t+1)^p with p in (0.5, 1], so that
// sum gamma_t diverges while sum gamma_t^2 stays finite.
struct StepSchedule {
  double gamma0;
  double exponent;

  StepSchedule(double gamma0_, double exponent_) : gamma0(gamma0_), exponent(exponent_) {
    if (!(gamma0 > 0.0)) throw invalid_input_error("StepSchedule: gamma0 must be > 0");
    if (!(exponent > 0.5) || !(exponent <= 1.0))
      throw invalid_input_error("StepSchedule: exponent must be in (0.5, 1]");
  }

  double at(int t) const { return gamma0 / std::pow(static_cast<double>(t + 1), exponent); }
};

}  // namespace sseek
