#pragma once

#include <algorithm>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "sseek/common.hpp"

namespace sseek {

// Undirected connected communication graph with Metropolis-Hastings mixing
// weights, Laplacian, and incidence views. Immutable after construction.
class CommGraph {
 public:
  CommGraph(int n, std::vector<std::pair<int, int>> edges) : n_(n) {
    if (n < 1) throw invalid_input_error("CommGraph: need at least one node");
    neighbors_.resize(n);
    for (auto [a, b] : edges) {
      if (a < 0 || b < 0 || a >= n || b >= n)
        throw invalid_input_error("CommGraph: edge index out of range");
      if (a == b) throw invalid_input_error("CommGraph: self loops not allowed");
      if (a > b) std::swap(a, b);
      if (std::find(neighbors_[a].begin(), neighbors_[a].end(), b) != neighbors_[a].end())
        continue;  // duplicate edge
      edges_.emplace_back(a, b);
      neighbors_[a].push_back(b);
      neighbors_[b].push_back(a);
    }
    for (auto& nb : neighbors_) std::sort(nb.begin(), nb.end());

    if (!connected()) throw invalid_input_error("CommGraph: graph is not connected");

    // Metropolis-Hastings weights: row stochastic, symmetric, positive on
    // edges and the diagonal.
    mixing_ = MatrixXd::Zero(n, n);
    for (auto [a, b] : edges_) {
      const double w = 1.0 / (1.0 + std::max(degree(a), degree(b)));
      mixing_(a, b) = w;
      mixing_(b, a) = w;
    }
    for (int i = 0; i < n; ++i) mixing_(i, i) = 1.0 - mixing_.row(i).sum();

    laplacian_ = MatrixXd::Zero(n, n);
    for (auto [a, b] : edges_) {
      laplacian_(a, a) += 1.0;
      laplacian_(b, b) += 1.0;
      laplacian_(a, b) -= 1.0;
      laplacian_(b, a) -= 1.0;
    }
    if (n == 1) {
      lambda_max_ = 0.0;
    } else {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(laplacian_, Eigen::EigenvaluesOnly);
      lambda_max_ = es.eigenvalues()(n - 1);
      lambda2_ = es.eigenvalues()(1);
    }
  }

  static CommGraph from_positions(std::span<const Vec2> positions, double radius) {
    if (!(radius > 0.0)) throw invalid_input_error("CommGraph: radius must be > 0");
    const int n = static_cast<int>(positions.size());
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if ((positions[i] - positions[j]).norm() <= radius) edges.emplace_back(i, j);
    return CommGraph(n, std::move(edges));
  }

  static CommGraph complete(int n) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
    return CommGraph(n, std::move(edges));
  }

  int n() const { return n_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const std::vector<int>& neighbors(int i) const { return neighbors_[i]; }
  int degree(int i) const { return static_cast<int>(neighbors_[i].size()); }
  const MatrixXd& mixing() const { return mixing_; }
  const MatrixXd& laplacian() const { return laplacian_; }
  double laplacian_lambda_max() const { return lambda_max_; }
  double laplacian_lambda2() const { return lambda2_; }

  // n x |E| incidence matrix; edge (a, b) with a < b gets -1 at a, +1 at b,
  // so (B^T x)_e = x_b - x_a.
  MatrixXd incidence() const {
    MatrixXd b = MatrixXd::Zero(n_, static_cast<Eigen::Index>(edges_.size()));
    for (size_t e = 0; e < edges_.size(); ++e) {
      b(edges_[e].first, static_cast<Eigen::Index>(e)) = -1.0;
      b(edges_[e].second, static_cast<Eigen::Index>(e)) = 1.0;
    }
    return b;
  }

 private:
  bool connected() const {
    std::vector<char> seen(n_, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      for (int j : neighbors_[i])
        if (!seen[j]) {
          seen[j] = 1;
          ++count;
          stack.push_back(j);
        }
    }
    return count == n_;
  }

  int n_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> neighbors_;
  MatrixXd mixing_;
  MatrixXd laplacian_;
  double lambda_max_ = 0.0;
  double lambda2_ = 0.0;
};

inline MatrixXd metropolis_mixing(const CommGraph& graph) { return graph.mixing(); }

}  // namespace sseek
