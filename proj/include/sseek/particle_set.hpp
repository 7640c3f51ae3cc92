#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <sstream>
#include <vector>

#include "sseek/comm_graph.hpp"
#include "sseek/common.hpp"
#include "sseek/rng.hpp"

namespace sseek {

// Weighted source-hypothesis particles. Positions are held behind a shared
// immutable array: every sensor's set aliases the same support, which is what
// the weight-only distributed update requires (no resampling anywhere).
class ParticleSet {
 public:
  using Positions = std::vector<Vec2>;

  ParticleSet() = default;

  explicit ParticleSet(std::shared_ptr<const Positions> positions)
      : positions_(std::move(positions)) {
    if (!positions_ || positions_->empty())
      throw invalid_input_error("ParticleSet: empty particle support");
    const double lw = -std::log(static_cast<double>(positions_->size()));
    log_weights_ = VectorXd::Constant(static_cast<Eigen::Index>(positions_->size()), lw);
    normalized_ = true;
  }

  static ParticleSet uniform_box(int n_particles, const Vec2& lo, const Vec2& hi, Rng& rng) {
    if (n_particles < 1) throw invalid_input_error("ParticleSet: need at least one particle");
    auto pts = std::make_shared<Positions>();
    pts->reserve(n_particles);
    for (int m = 0; m < n_particles; ++m)
      pts->push_back({uniform(rng, lo.x(), hi.x()), uniform(rng, lo.y(), hi.y())});
    return ParticleSet(std::move(pts));
  }

  Eigen::Index size() const { return log_weights_.size(); }
  const Positions& positions() const { return *positions_; }
  const std::shared_ptr<const Positions>& shared_positions() const { return positions_; }
  const VectorXd& log_weights() const { return log_weights_; }
  bool normalized() const { return normalized_; }

  void set_log_weights(VectorXd lw, bool normalized) {
    if (lw.size() != log_weights_.size())
      throw invalid_input_error("ParticleSet: weight count mismatch");
    log_weights_ = std::move(lw);
    normalized_ = normalized;
  }

  void normalize() {
    const double lse = log_sum_exp(log_weights_);
    if (!std::isfinite(lse)) throw degenerate_error("ParticleSet: weights sum to zero");
    log_weights_.array() -= lse;
    normalized_ = true;
  }

  VectorXd weights() const { return log_weights_.array().exp(); }

  double ess() const {
    const VectorXd w = weights();
    return 1.0 / w.squaredNorm();
  }

  Vec2 posterior_mean() const {
    Vec2 m = Vec2::Zero();
    const VectorXd w = weights();
    for (Eigen::Index i = 0; i < w.size(); ++i) m += w(i) * (*positions_)[i];
    return m;
  }

 private:
  std::shared_ptr<const Positions> positions_;
  VectorXd log_weights_;
  bool normalized_ = false;
};

// One synchronous round of the distributed particle filter at node i:
// geometric averaging of the neighborhood priors followed by a Bayes update
// with the private signal, all in the log domain. `log_lik(m, y)` returns the
// log likelihood of node i's new measurement under particle m at position y.
template <typename LogLik>
VectorXd dpf_step(const CommGraph& graph, int i, std::span<const ParticleSet> all_sets,
                  LogLik&& log_lik) {
  if (i < 0 || i >= graph.n() || static_cast<int>(all_sets.size()) != graph.n())
    throw invalid_input_error("dpf_step: bad node index or set count");
  const auto& support = all_sets[i].shared_positions();
  for (const auto& s : all_sets)
    if (s.shared_positions() != support)
      throw invalid_input_error("dpf_step: particle supports differ across sensors");

  const MatrixXd& a = graph.mixing();
  VectorXd lw = a(i, i) * all_sets[i].log_weights();
  for (int j : graph.neighbors(i)) lw += a(i, j) * all_sets[j].log_weights();

  const auto& pos = *support;
  double max_ll = -std::numeric_limits<double>::infinity();
  for (Eigen::Index m = 0; m < lw.size(); ++m) {
    const double ll = log_lik(m, pos[static_cast<size_t>(m)]);
    lw(m) += ll;
    if (ll > max_ll) max_ll = ll;
  }
  if (max_ll <= kLogEpsPdf) {
    std::ostringstream msg;
    msg << "dpf_step: all " << lw.size() << " particle likelihoods at the floor (max log-lik "
        << max_ll << ") at node " << i;
    throw degenerate_error(msg.str());
  }

  const double lse = log_sum_exp(lw);
  lw.array() -= lse;
  return lw;
}

}  // namespace sseek
