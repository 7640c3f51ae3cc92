#pragma once

#include <array>
#include <cmath>

#include "sseek/common.hpp"
#include "sseek/rng.hpp"

namespace sseek {

// Per-(x, y) evaluation context. `mean` is E[z]; `loc` is the location
// parameter the noise pdf is anchored at (they differ when the noise law has
// a nonzero mean that the model subtracts); `aux` is model-specific state
// (the RSS model stores the through-wall distance there).
struct MeasPoint {
  double mean = 0.0;
  double loc = 0.0;
  double aux = 0.0;
};

// Gradient context at (x, y). When the noise law switches branches inside the
// finite-difference stencil the chain rule does not apply and `fd` is set;
// the four prepared stencil points then drive a central difference.
struct PreparedGrad {
  MeasPoint center;
  Vec2 loc_grad{0.0, 0.0};
  bool fd = false;
  std::array<MeasPoint, 4> stencil{};  // +x, -x, +y, -y
  double fd_step = 0.0;
};

// Scalar measurement model z = h(x, y) + v from the viewpoint of a sensor at
// x observing a source at y. Likelihoods are floored at kEpsPdf so the
// support never depends on x.
class MeasurementModel {
 public:
  virtual ~MeasurementModel() = default;

  virtual MeasPoint prepare(const Vec2& x, const Vec2& y) const = 0;
  virtual PreparedGrad prepare_grad(const Vec2& x, const Vec2& y) const = 0;
  virtual double log_pdf(const MeasPoint& p, double z) const = 0;
  virtual double dlogpdf_dloc(const MeasPoint& p, double z) const = 0;
  virtual double sample(const MeasPoint& p, Rng& rng) const = 0;

  double mean(const Vec2& x, const Vec2& y) const { return prepare(x, y).mean; }

  double sample(const Vec2& x, const Vec2& y, Rng& rng) const {
    return sample(prepare(x, y), rng);
  }

  double log_likelihood(double z, const Vec2& x, const Vec2& y) const {
    if (!std::isfinite(z)) throw invalid_input_error("log_likelihood: non-finite z");
    return log_pdf(prepare(x, y), z);
  }

  double likelihood(double z, const Vec2& x, const Vec2& y) const {
    return std::exp(log_likelihood(z, x, y));
  }

  // Gradient of the density p(z | y, x) with respect to the sensor position.
  // `fd_flagged` reports a stencil-straddles-discontinuity fallback.
  Vec2 likelihood_grad_x(double z, const Vec2& x, const Vec2& y,
                         bool* fd_flagged = nullptr) const {
    if (!std::isfinite(z)) throw invalid_input_error("likelihood_grad_x: non-finite z");
    const PreparedGrad pg = prepare_grad(x, y);
    if (fd_flagged) *fd_flagged = pg.fd;
    if (!pg.fd) {
      const double p = std::exp(log_pdf(pg.center, z));
      return p * dlogpdf_dloc(pg.center, z) * pg.loc_grad;
    }
    Vec2 g;
    for (int ax = 0; ax < 2; ++ax) {
      const double fp = std::exp(log_pdf(pg.stencil[2 * ax], z));
      const double fm = std::exp(log_pdf(pg.stencil[2 * ax + 1], z));
      g[ax] = (fp - fm) / (2.0 * pg.fd_step);
    }
    return g;
  }

  Vec2 grad_from_prepared(const PreparedGrad& pg, double z) const {
    // Gradient of log p; used by the MI machinery where grad(p)/p is needed.
    if (!pg.fd) return dlogpdf_dloc(pg.center, z) * pg.loc_grad;
    Vec2 g;
    for (int ax = 0; ax < 2; ++ax) {
      const double lp = log_pdf(pg.stencil[2 * ax], z);
      const double lm = log_pdf(pg.stencil[2 * ax + 1], z);
      g[ax] = (lp - lm) / (2.0 * pg.fd_step);
    }
    return g;
  }

  Vec2 log_likelihood_grad_x(double z, const Vec2& x, const Vec2& y) const {
    return grad_from_prepared(prepare_grad(x, y), z);
  }
};

}  // namespace sseek
