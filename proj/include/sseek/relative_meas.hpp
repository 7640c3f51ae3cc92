#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sseek/comm_graph.hpp"
#include "sseek/common.hpp"
#include "sseek/rng.hpp"

namespace sseek {

// Noise model for relative position measurements s_ij = x_j - x_i + eps,
// eps ~ N(0, cov), independent per directed edge and per round.
struct RelMeasModel {
  Eigen::Matrix2d cov = 0.4 * Eigen::Matrix2d::Identity();

  void validate() const {
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw invalid_input_error("RelMeasModel: covariance must be symmetric");
    Eigen::LLT<Eigen::Matrix2d> llt(cov);
    if (llt.info() != Eigen::Success)
      throw invalid_input_error("RelMeasModel: covariance must be positive definite");
  }

  Eigen::Matrix2d chol() const {
    validate();
    return Eigen::LLT<Eigen::Matrix2d>(cov).matrixL();
  }
};

// Per node i, the stacked measurements of its neighbors in graph order:
// rows (2k, 2k+1) hold s_{i, nb_k}.
inline std::vector<VectorXd> sample_relative_measurements(std::span<const Vec2> positions,
                                                          const CommGraph& graph,
                                                          const RelMeasModel& model, Rng& rng) {
  if (static_cast<int>(positions.size()) != graph.n())
    throw invalid_input_error("sample_relative_measurements: position count mismatch");
  const Eigen::Matrix2d l = model.chol();
  std::vector<VectorXd> out(graph.n());
  for (int i = 0; i < graph.n(); ++i) {
    const auto& nbs = graph.neighbors(i);
    VectorXd s(2 * static_cast<Eigen::Index>(nbs.size()));
    for (size_t k = 0; k < nbs.size(); ++k) {
      const Vec2 noise = l * Vec2(normal01(rng), normal01(rng));
      s.segment<2>(2 * static_cast<Eigen::Index>(k)) = positions[nbs[k]] - positions[i] + noise;
    }
    out[i] = std::move(s);
  }
  return out;
}

// Observation matrix of node i for the reduced state
// theta = (x_1 - x_0, ..., x_{n-1} - x_0) in sensor 0's frame:
// s_ij = theta_j - theta_i with theta_0 = 0.
inline MatrixXd relative_obs_matrix(const CommGraph& graph, int i) {
  const auto& nbs = graph.neighbors(i);
  MatrixXd h = MatrixXd::Zero(2 * static_cast<Eigen::Index>(nbs.size()), 2 * (graph.n() - 1));
  for (size_t k = 0; k < nbs.size(); ++k) {
    const int j = nbs[k];
    if (j >= 1) h.block<2, 2>(2 * static_cast<Eigen::Index>(k), 2 * (j - 1)) =
        Eigen::Matrix2d::Identity();
    if (i >= 1) h.block<2, 2>(2 * static_cast<Eigen::Index>(k), 2 * (i - 1)) -=
        Eigen::Matrix2d::Identity();
  }
  return h;
}

inline MatrixXd relative_obs_noise(const CommGraph& graph, int i, const RelMeasModel& model) {
  const auto deg = static_cast<Eigen::Index>(graph.neighbors(i).size());
  MatrixXd e = MatrixXd::Zero(2 * deg, 2 * deg);
  for (Eigen::Index k = 0; k < deg; ++k) e.block<2, 2>(2 * k, 2 * k) = model.cov;
  return e;
}

}  // namespace sseek
