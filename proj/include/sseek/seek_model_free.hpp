#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sseek/comm_graph.hpp"
#include "sseek/common.hpp"
#include "sseek/consensus.hpp"
#include "sseek/info_gaussian.hpp"
#include "sseek/measurement_model.hpp"
#include "sseek/rbffd.hpp"
#include "sseek/relative_meas.hpp"
#include "sseek/rng.hpp"
#include "sseek/step_schedule.hpp"

namespace sseek {

// Centralized stochastic gradient step: every sensor translates by the same
// increment gamma_t * W(x) z, which moves the centroid along the estimated
// signal gradient while preserving the formation shape.
struct MfStepResult {
  Vec2 increment{0.0, 0.0};
  Vec2 new_centroid{0.0, 0.0};
  bool skipped = false;  // degenerate formation, step not taken
};

inline MfStepResult centralized_mf_step(const Eigen::Matrix2Xd& positions, const VectorXd& z,
                                        const StepSchedule& schedule, int t, double delta) {
  const FdWeights w = fd_weights(positions, delta);
  MfStepResult out;
  out.new_centroid = w.centroid;
  if (w.degenerate) {
    out.skipped = true;
    return out;
  }
  out.increment = schedule.at(t) * gradient_estimate(w, z);
  out.new_centroid = w.centroid + out.increment;
  return out;
}

// Per-sensor state for the distributed pipeline: an information-form belief
// over the formation state in sensor 0's frame, the running mean of own
// signal measurements, the local gradient estimate, and a consensus slice.
struct MfNodeState {
  InfoGaussian x_hat;          // over theta = (x_1 - x_0, ..., x_{n-1} - x_0)
  Eigen::Matrix2Xd x_est;      // latest reconstructed positions, col 0 = 0
  double z_sum = 0.0;
  int z_count = 0;
  Vec2 g_local{0.0, 0.0};
  Vec2 q{0.0, 0.0};            // consensus filter state
  Vec2 r{0.0, 0.0};            // latest consensus output
};

struct MfPipeline {
  const CommGraph* graph;
  const MeasurementModel* signal;
  RelMeasModel rel;
  double delta;               // RBF shape parameter
  int k_meas;                 // measurement rounds before estimates freeze
  double beta;                // consensus step size
  Eigen::Matrix2Xd nominal;   // assumed formation, used as the state prior

  MfPipeline(const CommGraph& g, const MeasurementModel& s, RelMeasModel rel_model,
             double delta_, int k_meas_, Eigen::Matrix2Xd nominal_positions,
             double beta_ = -1.0)
      : graph(&g), signal(&s), rel(rel_model), delta(delta_), k_meas(k_meas_),
        nominal(std::move(nominal_positions)) {
    if (g.n() < 2) throw invalid_input_error("MfPipeline: need at least two sensors");
    if (nominal.cols() != g.n())
      throw invalid_input_error("MfPipeline: nominal formation size mismatch");
    if (k_meas < 1) throw invalid_input_error("MfPipeline: k_meas must be >= 1");
    rel.validate();
    beta = make_consensus_state(g, 2, beta_).beta;
  }
};

inline std::vector<MfNodeState> mf_init_nodes(const MfPipeline& p) {
  const int n = p.graph->n();
  const Eigen::Index d = 2 * (n - 1);
  VectorXd theta0(d);
  for (int j = 1; j < n; ++j)
    theta0.segment<2>(2 * (j - 1)) = p.nominal.col(j) - p.nominal.col(0);

  // Near-uninformative prior centered on the nominal formation.
  MatrixXd omega0 = 1e-6 * MatrixXd::Identity(d, d);
  std::vector<MfNodeState> nodes(n);
  for (auto& node : nodes) {
    node.x_hat = InfoGaussian(omega0 * theta0, omega0);
    node.x_est.resize(2, n);
    node.x_est.col(0).setZero();
    for (int j = 1; j < n; ++j) node.x_est.col(j) = theta0.segment<2>(2 * (j - 1));
  }
  return nodes;
}

// One round of the fast time scale at a fixed measurement location. While
// k < k_meas each node fuses a fresh relative measurement, takes a signal
// sample, and refreshes its local gradient estimate from the re-computed FD
// weights; afterwards the estimates stay frozen and only the consensus
// filter keeps running.
inline void mf_fast_round(const MfPipeline& p, std::span<const Vec2> true_positions,
                          const Vec2& source, std::vector<MfNodeState>& nodes, int k,
                          Rng& rng) {
  const CommGraph& graph = *p.graph;
  const int n = graph.n();
  if (static_cast<int>(true_positions.size()) != n || static_cast<int>(nodes.size()) != n)
    throw invalid_input_error("mf_fast_round: size mismatch");

  if (k < p.k_meas) {
    const auto rel_meas = sample_relative_measurements(true_positions, graph, p.rel, rng);

    std::vector<InfoGaussian> snapshot;
    snapshot.reserve(nodes.size());
    for (const auto& node : nodes) snapshot.push_back(node.x_hat);

    for (int i = 0; i < n; ++i) {
      nodes[i].x_hat = gauss_step(graph, i, snapshot, relative_obs_matrix(graph, i),
                                  relative_obs_noise(graph, i, p.rel), rel_meas[i]);
      nodes[i].z_sum += p.signal->sample(true_positions[i], source, rng);
      nodes[i].z_count += 1;
    }

    for (int i = 0; i < n; ++i) {
      const VectorXd theta = gauss_estimate(nodes[i].x_hat);
      for (int j = 1; j < n; ++j) nodes[i].x_est.col(j) = theta.segment<2>(2 * (j - 1));
      const FdWeights w = fd_weights(nodes[i].x_est, p.delta);
      nodes[i].g_local = w.w.col(i) * (nodes[i].z_sum / nodes[i].z_count);
    }
  }

  MatrixXd q(2, n), mu(2, n);
  for (int i = 0; i < n; ++i) {
    q.col(i) = nodes[i].q;
    mu.col(i) = nodes[i].g_local;
  }
  auto [next, r] = consensus_step(ConsensusState{std::move(q), p.beta}, graph, mu);
  for (int i = 0; i < n; ++i) {
    nodes[i].q = next.q.col(i);
    nodes[i].r = r.col(i);
  }
}

// Slow-scale controls u_i = gamma_t * n * r_i: each sensor moves by its own
// scaled consensus output, which agrees across sensors up to the residual
// consensus error.
inline std::vector<Vec2> distributed_mf_controls(std::span<const MfNodeState> nodes,
                                                 const StepSchedule& schedule, int t) {
  const double gamma = schedule.at(t);
  const double n = static_cast<double>(nodes.size());
  std::vector<Vec2> u;
  u.reserve(nodes.size());
  for (const auto& node : nodes) u.push_back(gamma * n * node.r);
  return u;
}

}  // namespace sseek
