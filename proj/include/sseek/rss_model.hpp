#pragma once

#include <atomic>
#include <cmath>

#include "sseek/common.hpp"
#include "sseek/fading.hpp"
#include "sseek/measurement_model.hpp"
#include "sseek/occupancy_grid.hpp"

namespace sseek {

// Receivers closer than this to the source are treated as at this distance,
// which keeps the path loss (and hence the field) Lipschitz.
inline constexpr double kMinRssDistance = 0.01;

// Step for the central differences used on the multi-wall loss term.
inline constexpr double kWallFdStep = 1e-3;

namespace diag {
inline std::atomic<std::uint64_t>& rss_distance_clamps() {
  static std::atomic<std::uint64_t> count{0};
  return count;
}
}  // namespace diag

struct RssParams {
  double p_tx = 18.0;            // dBm
  double g_tx = 1.5;             // dBi
  double l_tx = 0.0;             // dB
  double g_rx = 1.5;             // dBi
  double l_rx = 0.0;             // dB
  double freq_mhz = 2400.0;      // MHz
  double alpha_multiwall = 30.0; // dB
  double beta_wall = 15.0;       // dB per meter of wall
  double rician_mu = 4.0;        // dB
  double sigma = 20.0;           // dB
  // When true, rician_mu is read as the fading-distribution mean instead of
  // the noncentrality parameter (only feasible for mu >= sigma*sqrt(pi/2)).
  bool rician_mu_is_mean = false;

  void validate() const {
    if (!(freq_mhz > 0.0)) throw config_error("signal.freq_mhz must be > 0");
    if (!(sigma > 0.0)) throw config_error("signal.sigma must be > 0");
    if (beta_wall < 0.0) throw config_error("signal.beta_wall must be >= 0");
    if (alpha_multiwall < 0.0) throw config_error("signal.alpha_multiwall must be >= 0");
    if (rician_mu_is_mean && rician_mu < rayleigh_mean(sigma))
      throw config_error(
          "signal.rician_mu_is_mean: mean below sigma*sqrt(pi/2) is not a Rician mean");
  }
};

inline double free_space_loss(const Vec2& x, const Vec2& y, double freq_mhz) {
  if (!finite(x) || !finite(y)) throw invalid_input_error("free_space_loss: non-finite input");
  double d = (x - y).norm();
  if (d < kMinRssDistance) {
    d = kMinRssDistance;
    diag::rss_distance_clamps().fetch_add(1, std::memory_order_relaxed);
  }
  return -27.55 + 20.0 * std::log10(freq_mhz) + 20.0 * std::log10(d);
}

inline double multipath_loss(const Vec2& x, const Vec2& y, const OccupancyGrid& grid,
                             const RssParams& params) {
  const double lambda = grid.wall_distance(x, y);
  return lambda > 0.0 ? params.alpha_multiwall + params.beta_wall * lambda : 0.0;
}

// Wireless received-signal-strength model: free-space loss, multi-wall
// attenuation from an occupancy grid, and Rician (LOS) / Rayleigh (NLOS)
// fading in the dB domain. The fading mean is subtracted so the residual
// noise is zero-mean.
class RssModel final : public MeasurementModel {
 public:
  RssModel(const OccupancyGrid& grid, RssParams params) : grid_(&grid), params_(params) {
    init();
  }
  explicit RssModel(RssParams params = {}) : grid_(nullptr), params_(params) { init(); }

  const RssParams& params() const { return params_; }
  double rician_fading_mean() const { return rician_mean_; }
  double rayleigh_fading_mean() const { return rayleigh_mean_; }

  // Deterministic budget before fading: P_tx + gains - losses - L_fs - L_m.
  double deterministic_rss(const Vec2& x, const Vec2& y) const {
    double loss = free_space_loss(x, y, params_.freq_mhz);
    if (grid_ && grid_->has_occupied_cells()) loss += multipath_loss(x, y, *grid_, params_);
    return params_.p_tx + params_.g_tx - params_.l_tx + params_.g_rx - params_.l_rx - loss;
  }

  MeasPoint prepare(const Vec2& x, const Vec2& y) const override {
    if (!finite(x) || !finite(y)) throw invalid_input_error("RssModel: non-finite input");
    const double lambda =
        (grid_ && grid_->has_occupied_cells()) ? grid_->wall_distance(x, y) : 0.0;
    double det = params_.p_tx + params_.g_tx - params_.l_tx + params_.g_rx - params_.l_rx -
                 free_space_loss(x, y, params_.freq_mhz);
    if (lambda > 0.0) det -= params_.alpha_multiwall + params_.beta_wall * lambda;
    const double fade_mean = lambda > 0.0 ? rayleigh_mean_ : rician_mean_;
    return {det - fade_mean, det, lambda};
  }

  double log_pdf(const MeasPoint& p, double z) const override {
    const double r = p.loc - z;
    const double nu = p.aux > 0.0 ? 0.0 : nu_;
    return std::max(rician_log_pdf(r, nu, params_.sigma), kLogEpsPdf);
  }

  double dlogpdf_dloc(const MeasPoint& p, double z) const override {
    const double r = p.loc - z;
    if (r <= 0.0) return 0.0;
    const double nu = p.aux > 0.0 ? 0.0 : nu_;
    return rician_dlogpdf(r, nu, params_.sigma);
  }

  double sample(const MeasPoint& p, Rng& rng) const override {
    const double nu = p.aux > 0.0 ? 0.0 : nu_;
    return p.loc - rician_sample(rng, nu, params_.sigma);
  }

  PreparedGrad prepare_grad(const Vec2& x, const Vec2& y) const override {
    PreparedGrad pg;
    pg.center = prepare(x, y);

    Vec2 grad_det = Vec2::Zero();
    const Vec2 diff = x - y;
    const double d = diff.norm();
    if (d >= kMinRssDistance) {
      // d/dx of -L_fs
      grad_det = -(20.0 / std::log(10.0)) * diff / (d * d);
    }

    if (grid_ && grid_->has_occupied_cells()) {
      const bool los_c = pg.center.aux == 0.0;
      double lam[4];
      bool branch_change = false;
      for (int k = 0; k < 4; ++k) {
        lam[k] = grid_->wall_distance(x + stencil_offset(k), y);
        branch_change |= (lam[k] == 0.0) != los_c;
      }
      if (branch_change) {
        pg.fd = true;
        pg.fd_step = kWallFdStep;
        for (int k = 0; k < 4; ++k) pg.stencil[k] = prepare(x + stencil_offset(k), y);
        return pg;
      }
      if (!los_c) {
        grad_det.x() -= params_.beta_wall * (lam[0] - lam[1]) / (2.0 * kWallFdStep);
        grad_det.y() -= params_.beta_wall * (lam[2] - lam[3]) / (2.0 * kWallFdStep);
      }
    }
    pg.loc_grad = grad_det;
    return pg;
  }

 private:
  void init() {
    params_.validate();
    nu_ = params_.rician_mu;
    if (params_.rician_mu_is_mean) {
      // Invert mean(nu) = mu by bisection; mean is increasing in nu.
      double lo = 0.0, hi = params_.sigma;
      while (rician_mean(hi, params_.sigma) < params_.rician_mu) hi *= 2.0;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (rician_mean(mid, params_.sigma) < params_.rician_mu ? lo : hi) = mid;
      }
      nu_ = 0.5 * (lo + hi);
    }
    rician_mean_ = rician_mean(nu_, params_.sigma);
    rayleigh_mean_ = rayleigh_mean(params_.sigma);
  }

  static Vec2 stencil_offset(int k) {
    switch (k) {
      case 0: return {kWallFdStep, 0.0};
      case 1: return {-kWallFdStep, 0.0};
      case 2: return {0.0, kWallFdStep};
      default: return {0.0, -kWallFdStep};
    }
  }

  const OccupancyGrid* grid_;
  RssParams params_;
  double nu_ = 0.0;
  double rician_mean_ = 0.0;
  double rayleigh_mean_ = 0.0;
};

inline double rss_mean(const Vec2& x, const Vec2& y, const OccupancyGrid& grid,
                       const RssParams& params) {
  return RssModel(grid, params).mean(x, y);
}

inline double rss_sample(const Vec2& x, const Vec2& y, const OccupancyGrid& grid,
                         const RssParams& params, Rng& rng) {
  return RssModel(grid, params).sample(x, y, rng);
}

inline double rss_likelihood(double z, const Vec2& x, const Vec2& y, const OccupancyGrid& grid,
                             const RssParams& params) {
  return RssModel(grid, params).likelihood(z, x, y);
}

inline Vec2 rss_likelihood_grad_x(double z, const Vec2& x, const Vec2& y,
                                  const OccupancyGrid& grid, const RssParams& params,
                                  bool* fd_flagged = nullptr) {
  return RssModel(grid, params).likelihood_grad_x(z, x, y, fd_flagged);
}

}  // namespace sseek
