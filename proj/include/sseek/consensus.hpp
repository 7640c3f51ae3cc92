#pragma once

#include <utility>

#include "sseek/comm_graph.hpp"
#include "sseek/common.hpp"

namespace sseek {

// High-pass dynamic consensus filter. Each node holds a state q_i, takes an
// input mu_i, and outputs r_i = q_i + mu_i; the outputs of a connected
// network track the input average. States are columns of a d x n matrix.
struct ConsensusState {
  MatrixXd q;   // d x n
  double beta;  // step size, in (0, 1/lambda_max(L))
};

inline ConsensusState make_consensus_state(const CommGraph& graph, Eigen::Index dim,
                                           double beta = -1.0) {
  const double lmax = graph.laplacian_lambda_max();
  if (beta < 0.0) beta = lmax > 0.0 ? 0.9 / lmax : 0.9;
  if (!(beta > 0.0) || (lmax > 0.0 && !(beta < 1.0 / lmax)))
    throw invalid_input_error("consensus: beta outside (0, 1/lambda_max(L))");
  return {MatrixXd::Zero(dim, graph.n()), beta};
}

// One synchronous round: outputs r_k from (q_k, mu_k), then the state update
//   q_{i,k+1} = q_{i,k} + beta sum_{j in N_i} (q_{j,k} - q_{i,k})
//                       + beta sum_{j in N_i} (mu_{j,k} - mu_{i,k}).
inline std::pair<ConsensusState, MatrixXd> consensus_step(const ConsensusState& state,
                                                          const CommGraph& graph,
                                                          const MatrixXd& mu) {
  if (mu.rows() != state.q.rows() || mu.cols() != state.q.cols() ||
      mu.cols() != graph.n())
    throw invalid_input_error("consensus_step: input dimension mismatch");
  const MatrixXd r = state.q + mu;
  // Neighbor differences of q and mu are -(q + mu) L with L symmetric.
  ConsensusState next{state.q - state.beta * (r * graph.laplacian()), state.beta};
  return {std::move(next), r};
}

}  // namespace sseek
