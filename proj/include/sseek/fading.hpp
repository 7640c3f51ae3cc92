#pragma once

#include <cmath>
#include <numbers>

#include "sseek/common.hpp"
#include "sseek/rng.hpp"

namespace sseek {

// Modified Bessel functions in log space (Abramowitz & Stegun 9.8.1-9.8.4,
// |err| < 2e-7). Log forms stay finite for large arguments where I0/I1
// overflow.
inline double log_bessel_i0(double x) {
  const double ax = std::abs(x);
  if (ax < 3.75) {
    const double t = (ax / 3.75) * (ax / 3.75);
    const double p = 1.0 + t * (3.5156229 + t * (3.0899424 + t * (1.2067492 +
                     t * (0.2659732 + t * (0.0360768 + t * 0.0045813)))));
    return std::log(p);
  }
  const double t = 3.75 / ax;
  const double p = 0.39894228 + t * (0.01328592 + t * (0.00225319 + t * (-0.00157565 +
                   t * (0.00916281 + t * (-0.02057706 + t * (0.02635537 +
                   t * (-0.01647633 + t * 0.00392377)))))));
  return ax - 0.5 * std::log(ax) + std::log(p);
}

inline double log_bessel_i1(double x) {
  const double ax = std::abs(x);
  if (ax == 0.0) return -std::numeric_limits<double>::infinity();
  if (ax < 3.75) {
    const double t = (ax / 3.75) * (ax / 3.75);
    const double p = 0.5 + t * (0.87890594 + t * (0.51498869 + t * (0.15084934 +
                     t * (0.02658733 + t * (0.00301532 + t * 0.00032411)))));
    return std::log(ax * p);
  }
  const double t = 3.75 / ax;
  const double p = 0.39894228 + t * (-0.03988024 + t * (-0.00362018 + t * (0.00163801 +
                   t * (-0.01031555 + t * (0.02282967 + t * (-0.02895312 +
                   t * (0.01787654 - t * 0.00420059)))))));
  return ax - 0.5 * std::log(ax) + std::log(p);
}

// Rayleigh(sigma); Rician(nu, sigma) with noncentrality nu and scale sigma.
// Rayleigh is the nu = 0 special case throughout.

inline double rayleigh_mean(double sigma) {
  return sigma * std::sqrt(std::numbers::pi / 2.0);
}

inline double rayleigh_variance(double sigma) {
  return sigma * sigma * (4.0 - std::numbers::pi) / 2.0;
}

inline double rician_mean(double nu, double sigma) {
  // sigma*sqrt(pi/2) * L_{1/2}(-nu^2 / (2 sigma^2))
  const double s = nu * nu / (2.0 * sigma * sigma);
  const double li0 = log_bessel_i0(0.5 * s);
  const double li1 = s > 0.0 ? log_bessel_i1(0.5 * s) : -std::numeric_limits<double>::infinity();
  const double lag = (1.0 + s) * std::exp(li0 - 0.5 * s) +
                     (s > 0.0 ? s * std::exp(li1 - 0.5 * s) : 0.0);
  return sigma * std::sqrt(std::numbers::pi / 2.0) * lag;
}

inline double rician_variance(double nu, double sigma) {
  const double m = rician_mean(nu, sigma);
  return 2.0 * sigma * sigma + nu * nu - m * m;
}

inline double rician_log_pdf(double r, double nu, double sigma) {
  if (r <= 0.0) return -std::numeric_limits<double>::infinity();
  const double s2 = sigma * sigma;
  return std::log(r / s2) - (r * r + nu * nu) / (2.0 * s2) + log_bessel_i0(r * nu / s2);
}

inline double rician_pdf(double r, double nu, double sigma) {
  const double lp = rician_log_pdf(r, nu, sigma);
  return std::isfinite(lp) ? std::exp(lp) : 0.0;
}

// d/dr log pdf; 0 outside the support.
inline double rician_dlogpdf(double r, double nu, double sigma) {
  if (r <= 0.0) return 0.0;
  const double s2 = sigma * sigma;
  double ratio = 0.0;  // I1/I0 at r*nu/sigma^2
  if (nu > 0.0) {
    const double t = r * nu / s2;
    ratio = std::exp(log_bessel_i1(t) - log_bessel_i0(t));
  }
  return 1.0 / r - r / s2 + (nu / s2) * ratio;
}

// d/dr pdf; finite at r -> 0+ (limit exp(-nu^2/2sigma^2)/sigma^2).
inline double rician_dpdf(double r, double nu, double sigma) {
  if (r < 0.0) return 0.0;
  const double s2 = sigma * sigma;
  const double e = std::exp(-(r * r + nu * nu) / (2.0 * s2));
  double i0 = 1.0, i1c = 0.0;
  if (nu > 0.0 && r > 0.0) {
    const double t = r * nu / s2;
    i0 = std::exp(log_bessel_i0(t));
    i1c = (nu / s2) * r * std::exp(log_bessel_i1(t));
  }
  return (e / s2) * (i0 * (1.0 - r * r / s2) + i1c);
}

// Norm of a 2-D Gaussian with mean (nu, 0) and per-axis std sigma.
inline double rician_sample(Rng& rng, double nu, double sigma) {
  const double a = nu + sigma * normal01(rng);
  const double b = sigma * normal01(rng);
  return std::sqrt(a * a + b * b);
}

}  // namespace sseek
