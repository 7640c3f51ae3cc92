#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "sseek/common.hpp"
#include "sseek/flooding.hpp"
#include "sseek/measurement_model.hpp"
#include "sseek/particle_set.hpp"
#include "sseek/rng.hpp"
#include "sseek/step_schedule.hpp"

namespace sseek {

struct MiSampleBudget {
  int n_z;
  explicit MiSampleBudget(int n_z_) : n_z(n_z_) {
    if (n_z < 1) throw invalid_input_error("MiSampleBudget: n_z must be >= 1");
  }
};

// Prepared measurement contexts for a fixed sensor group and particle
// support. Positions do not change within a slow step, so these are computed
// once and shared by every evaluation that step (all nodes included: the
// contexts depend only on geometry, not on per-node weights).
class MbField {
 public:
  MbField(const MeasurementModel& model, std::span<const Vec2> sensors,
          std::shared_ptr<const ParticleSet::Positions> support)
      : model_(&model), sensors_(sensors.begin(), sensors.end()), support_(std::move(support)) {
    if (sensors_.empty()) throw invalid_input_error("MbField: empty sensor group");
    if (!support_ || support_->empty()) throw invalid_input_error("MbField: empty support");
    const size_t np = support_->size();
    prep_.resize(sensors_.size() * np);
    grad_.resize(sensors_.size() * np);
    for (size_t j = 0; j < sensors_.size(); ++j)
      for (size_t m = 0; m < np; ++m) {
        prep_[j * np + m] = model_->prepare(sensors_[j], (*support_)[m]);
        grad_[j * np + m] = model_->prepare_grad(sensors_[j], (*support_)[m]);
      }
  }

  const MeasurementModel& model() const { return *model_; }
  int n_sensors() const { return static_cast<int>(sensors_.size()); }
  Eigen::Index n_particles() const { return static_cast<Eigen::Index>(support_->size()); }
  const std::shared_ptr<const ParticleSet::Positions>& support() const { return support_; }
  const Vec2& sensor(int j) const { return sensors_[static_cast<size_t>(j)]; }

  const MeasPoint& point(int j, Eigen::Index m) const {
    return prep_[static_cast<size_t>(j) * support_->size() + static_cast<size_t>(m)];
  }
  const PreparedGrad& grad(int j, Eigen::Index m) const {
    return grad_[static_cast<size_t>(j) * support_->size() + static_cast<size_t>(m)];
  }

  double log_pdf(int j, Eigen::Index m, double z) const {
    return model_->log_pdf(point(j, m), z);
  }

 private:
  const MeasurementModel* model_;
  std::vector<Vec2> sensors_;
  std::shared_ptr<const ParticleSet::Positions> support_;
  std::vector<MeasPoint> prep_;
  std::vector<PreparedGrad> grad_;
};

// Monte-Carlo machinery for the mutual-information gradient over a sensor
// group: the predictive measurement density, the per-draw integrand pi, and
// the N_z-sample gradient estimate. `blocks` selects which sensors' gradient
// blocks get assembled (a single block for the per-node distributed update).
class MiEvaluator {
 public:
  MiEvaluator(const MbField& field, const VectorXd& log_weights, std::vector<int> blocks)
      : field_(&field), log_w_(&log_weights), blocks_(std::move(blocks)) {
    if (log_weights.size() != field.n_particles())
      throw invalid_input_error("MiEvaluator: weight count mismatch");
    for (int b : blocks_)
      if (b < 0 || b >= field.n_sensors())
        throw invalid_input_error("MiEvaluator: block index out of range");
    // Cumulative weights for categorical sampling of particle indices.
    cum_w_.resize(log_weights.size());
    double acc = 0.0;
    for (Eigen::Index m = 0; m < log_weights.size(); ++m) {
      acc += std::exp(log_weights(m));
      cum_w_[static_cast<size_t>(m)] = acc;
    }
    if (!(acc > 0.0)) throw degenerate_error("MiEvaluator: weights sum to zero");
  }

  // log p_t(z | x) = log sum_m w_m prod_j p(z_j | y_m, x_j).
  double log_predictive_density(std::span<const double> z) const {
    VectorXd s = joint_log_lik(z);
    s += *log_w_;
    return log_sum_exp(s);
  }

  // One evaluation of the integrand whose z-expectation is the MI gradient;
  // returns the stacked 2-vectors of the selected blocks.
  VectorXd pi(std::span<const double> z) const {
    const Eigen::Index np = field_->n_particles();
    VectorXd out = VectorXd::Zero(2 * static_cast<Eigen::Index>(blocks_.size()));
    VectorXd joint = joint_log_lik(z);
    VectorXd s = joint + *log_w_;
    const double log_p = log_sum_exp(s);
    if (log_p <= kLogEpsPdf) return out;  // predictive density at the floor

    for (Eigen::Index m = 0; m < np; ++m) {
      const double post_w = std::exp(s(m) - log_p);
      if (post_w == 0.0) continue;
      const double log_ratio = joint(m) - log_p;
      const double scale = post_w * log_ratio;
      for (size_t b = 0; b < blocks_.size(); ++b) {
        const int j = blocks_[b];
        const Vec2 g = field_->model().grad_from_prepared(field_->grad(j, m), z[j]);
        out.segment<2>(2 * static_cast<Eigen::Index>(b)) += scale * g;
      }
    }
    return out;
  }

  // Draws a group measurement from the predictive density: particle index
  // from the weights, then one sample per sensor conditioned on it.
  void sample_group_measurement(Rng& rng, std::span<double> z_out) const {
    const double u = uniform01(rng) * cum_w_.back();
    const auto it = std::upper_bound(cum_w_.begin(), cum_w_.end(), u);
    const Eigen::Index m = std::min<Eigen::Index>(
        static_cast<Eigen::Index>(it - cum_w_.begin()), field_->n_particles() - 1);
    for (int j = 0; j < field_->n_sensors(); ++j)
      z_out[j] = field_->model().sample(field_->point(j, m), rng);
  }

  // Average of pi over n_z simulated group measurements; with n_z = 1 this is
  // one unbiased stochastic-ascent direction.
  VectorXd mi_gradient(const MiSampleBudget& budget, Rng& rng) const {
    VectorXd acc = VectorXd::Zero(2 * static_cast<Eigen::Index>(blocks_.size()));
    std::vector<double> z(static_cast<size_t>(field_->n_sensors()));
    for (int l = 0; l < budget.n_z; ++l) {
      sample_group_measurement(rng, z);
      acc += pi(z);
    }
    return acc / static_cast<double>(budget.n_z);
  }

 private:
  VectorXd joint_log_lik(std::span<const double> z) const {
    if (static_cast<int>(z.size()) != field_->n_sensors())
      throw invalid_input_error("MiEvaluator: measurement dimension mismatch");
    const Eigen::Index np = field_->n_particles();
    VectorXd joint = VectorXd::Zero(np);
    for (int j = 0; j < field_->n_sensors(); ++j)
      for (Eigen::Index m = 0; m < np; ++m) joint(m) += field_->log_pdf(j, m, z[j]);
    return joint;
  }

  const MbField* field_;
  const VectorXd* log_w_;
  std::vector<int> blocks_;
  std::vector<double> cum_w_;
};

inline std::vector<int> all_blocks(int n) {
  std::vector<int> b(n);
  for (int i = 0; i < n; ++i) b[i] = i;
  return b;
}

// Convenience entry points over a one-off field (tests, small cases).

inline double predictive_density(std::span<const double> z, std::span<const Vec2> sensors,
                                 const ParticleSet& particles, const MeasurementModel& model) {
  MbField field(model, sensors, particles.shared_positions());
  MiEvaluator ev(field, particles.log_weights(), {});
  return std::exp(ev.log_predictive_density(z));
}

inline VectorXd pi_sample(std::span<const double> z, std::span<const Vec2> sensors,
                          const ParticleSet& particles, const MeasurementModel& model) {
  MbField field(model, sensors, particles.shared_positions());
  MiEvaluator ev(field, particles.log_weights(),
                 all_blocks(static_cast<int>(sensors.size())));
  return ev.pi(z);
}

inline VectorXd mi_gradient_estimate(std::span<const Vec2> sensors, const ParticleSet& particles,
                                     const MeasurementModel& model, const MiSampleBudget& budget,
                                     Rng& rng) {
  MbField field(model, sensors, particles.shared_positions());
  MiEvaluator ev(field, particles.log_weights(),
                 all_blocks(static_cast<int>(sensors.size())));
  return ev.mi_gradient(budget, rng);
}

// Joint ascent step over all sensors: x <- x + gamma_t pi_t(z_t, x_t).
inline std::vector<Vec2> centralized_mb_step(std::span<const Vec2> sensors,
                                             const ParticleSet& particles,
                                             const MeasurementModel& model,
                                             const StepSchedule& schedule, int t,
                                             const MiSampleBudget& budget, Rng& rng) {
  const VectorXd g = mi_gradient_estimate(sensors, particles, model, budget, rng);
  const double gamma = schedule.at(t);
  std::vector<Vec2> out(sensors.begin(), sensors.end());
  for (size_t i = 0; i < out.size(); ++i)
    out[i] += gamma * g.segment<2>(2 * static_cast<Eigen::Index>(i));
  return out;
}

// Sensors (excluding i) whose fields of view can overlap with sensor i's.
// Unknown states are skipped.
inline std::vector<int> overlap_set(int i, const KnownStates& known, double r_s) {
  if (i < 0 || i >= static_cast<int>(known.size()) || !known[i])
    throw invalid_input_error("overlap_set: own state must be known");
  std::vector<int> v;
  for (int j = 0; j < static_cast<int>(known.size()); ++j) {
    if (j == i || !known[j]) continue;
    if (std::isinf(r_s) || (*known[i] - *known[j]).norm() <= 2.0 * r_s) v.push_back(j);
  }
  return v;
}

// Stream shared by every node that computes a gradient over the same group
// at the same step, so overlapping computations agree draw-for-draw.
inline Rng make_group_rng(std::uint64_t base_seed, int t, std::span<const int> group) {
  std::uint64_t h = derive_seed({base_seed, static_cast<std::uint64_t>(t)});
  for (int g : group) h = derive_seed({h, static_cast<std::uint64_t>(g)});
  return Rng(h);
}

struct MbControl {
  Vec2 u{0.0, 0.0};
  std::vector<int> group;  // {i} and overlap set, ascending
};

// Per-node ascent step of the decoupled MI gradient: sensor i moves along its
// own block computed over the group {i} + V_i with its own particle weights.
inline MbControl distributed_mb_step(int i, const KnownStates& known,
                                     const ParticleSet& particles,
                                     const MeasurementModel& model,
                                     const StepSchedule& schedule, int t,
                                     const MiSampleBudget& budget, double r_s,
                                     std::uint64_t base_seed) {
  MbControl out;
  out.group = overlap_set(i, known, r_s);
  out.group.push_back(i);
  std::sort(out.group.begin(), out.group.end());

  std::vector<Vec2> xs;
  xs.reserve(out.group.size());
  int block = 0;
  for (size_t k = 0; k < out.group.size(); ++k) {
    xs.push_back(*known[out.group[k]]);
    if (out.group[k] == i) block = static_cast<int>(k);
  }

  MbField field(model, xs, particles.shared_positions());
  MiEvaluator ev(field, particles.log_weights(), {block});
  Rng rng = make_group_rng(base_seed, t, out.group);
  out.u = schedule.at(t) * ev.mi_gradient(budget, rng).segment<2>(0);
  return out;
}

}  // namespace sseek
