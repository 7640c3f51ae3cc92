#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sseek/comm_graph.hpp"
#include "sseek/common.hpp"

namespace sseek {

// Information-form Gaussian: mean Omega^{-1} omega, covariance Omega^{-1}.
struct InfoGaussian {
  VectorXd omega;
  MatrixXd Omega;

  InfoGaussian() = default;
  InfoGaussian(VectorXd w, MatrixXd o) : omega(std::move(w)), Omega(std::move(o)) {
    if (Omega.rows() != Omega.cols() || Omega.rows() != omega.size())
      throw invalid_input_error("InfoGaussian: dimension mismatch");
  }

  static InfoGaussian zero(Eigen::Index d) {
    return InfoGaussian(VectorXd::Zero(d), MatrixXd::Zero(d, d));
  }

  Eigen::Index dim() const { return omega.size(); }

  bool valid(double sym_tol = 1e-12, double psd_tol = -1e-9) const {
    if ((Omega - Omega.transpose()).cwiseAbs().maxCoeff() > sym_tol) return false;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(Omega, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0) >= psd_tol;
  }
};

// One synchronous round of the distributed linear-Gaussian estimator at node
// i: mix the neighborhood's information state, then add the private
// observation s_i = H_i theta + eps, eps ~ N(0, E_i).
inline InfoGaussian gauss_step(const CommGraph& graph, int i,
                               std::span<const InfoGaussian> all_nodes, const MatrixXd& h_i,
                               const MatrixXd& e_i, const VectorXd& s_i) {
  if (i < 0 || i >= graph.n() || static_cast<int>(all_nodes.size()) != graph.n())
    throw invalid_input_error("gauss_step: bad node index or state count");
  const Eigen::Index d = all_nodes[i].dim();
  if (h_i.cols() != d || h_i.rows() != s_i.size() || e_i.rows() != e_i.cols() ||
      e_i.rows() != h_i.rows())
    throw invalid_input_error("gauss_step: dimension mismatch");
  if ((e_i - e_i.transpose()).cwiseAbs().maxCoeff() > 1e-9)
    throw invalid_input_error("gauss_step: E_i must be symmetric");
  Eigen::LDLT<MatrixXd> e_ldlt(e_i);
  if (e_ldlt.info() != Eigen::Success || !e_ldlt.isPositive() ||
      e_ldlt.vectorD().minCoeff() <= 0.0)
    throw invalid_input_error("gauss_step: E_i must be positive definite");

  const MatrixXd& a = graph.mixing();
  InfoGaussian out = InfoGaussian::zero(d);
  out.omega = a(i, i) * all_nodes[i].omega;
  out.Omega = a(i, i) * all_nodes[i].Omega;
  for (int j : graph.neighbors(i)) {
    out.omega += a(i, j) * all_nodes[j].omega;
    out.Omega += a(i, j) * all_nodes[j].Omega;
  }
  const MatrixXd ht_einv = h_i.transpose() * e_ldlt.solve(MatrixXd::Identity(h_i.rows(), h_i.rows()));
  out.omega += ht_einv * s_i;
  out.Omega += ht_einv * h_i;
  out.Omega = 0.5 * (out.Omega + out.Omega.transpose());
  return out;
}

inline VectorXd gauss_estimate(const InfoGaussian& g) {
  Eigen::FullPivLU<MatrixXd> lu(g.Omega);
  if (!lu.isInvertible())
    throw not_identifiable_error("gauss_estimate: information matrix is singular");
  return lu.solve(g.omega);
}

}  // namespace sseek
