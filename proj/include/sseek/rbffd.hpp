#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "sseek/common.hpp"

namespace sseek {

// Condition estimate above which the weights are flagged (deformed or
// clustered formations; the estimate still gets used).
inline constexpr double kFdConditionWarn = 1e12;

// Singular-value cutoff for the formation-spans-the-plane check.
inline constexpr double kSubspaceSvTol = 1e-6;

// Finite-difference weights for estimating a signal gradient at the
// formation centroid from scattered samples. Exact for the Gaussian radial
// test functions centered at the nodes.
struct FdWeights {
  Eigen::Matrix2Xd w;               // d_x x n, per meter
  Vec2 centroid{0.0, 0.0};
  double shape_delta = 0.0;         // 1/m
  double condition_estimate = 0.0;
  bool degenerate = false;          // formation contained in a line or point
  bool ill_conditioned = false;     // condition_estimate > kFdConditionWarn
};

// Solves Phi^T W^T = R with Phi_ij = exp(-delta^2 |x_j - x_i|^2) and
// R_i = 2 delta^2 exp(-delta^2 |x_i - m|^2) (x_i - m)^T.
inline FdWeights fd_weights(const Eigen::Matrix2Xd& positions, double delta) {
  const Eigen::Index n = positions.cols();
  if (n < 1) throw invalid_input_error("fd_weights: need at least one position");
  if (!(delta > 0.0)) throw invalid_input_error("fd_weights: delta must be > 0");
  if (!positions.allFinite()) throw invalid_input_error("fd_weights: non-finite position");

  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if ((positions.col(i) - positions.col(j)).norm() <= 1e-9)
        throw degenerate_error("fd_weights: duplicate sensor positions");

  FdWeights out;
  out.shape_delta = delta;
  out.centroid = positions.rowwise().mean();

  const double d2 = delta * delta;
  MatrixXd phi(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    phi(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = std::exp(-d2 * (positions.col(j) - positions.col(i)).squaredNorm());
      phi(i, j) = v;
      phi(j, i) = v;
    }
  }
  MatrixXd rhs(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec2 c = positions.col(i) - out.centroid;
    rhs.row(i) = (2.0 * d2 * std::exp(-d2 * c.squaredNorm())) * c.transpose();
  }

  // Phi is symmetric positive definite in exact arithmetic; pivoted LDLT
  // keeps the solve stable when it is numerically borderline.
  out.w = phi.ldlt().solve(rhs).transpose();

  Eigen::JacobiSVD<MatrixXd> phi_svd(phi);
  const auto& sv = phi_svd.singularValues();
  out.condition_estimate =
      sv(n - 1) > 0.0 ? sv(0) / sv(n - 1) : std::numeric_limits<double>::infinity();
  out.ill_conditioned = !(out.condition_estimate <= kFdConditionWarn);

  // Gradient observability needs the formation to span the plane.
  Eigen::Matrix2Xd centered = positions.colwise() - out.centroid;
  Eigen::JacobiSVD<MatrixXd> pos_svd(centered.transpose());
  const auto& psv = pos_svd.singularValues();
  out.degenerate = psv.size() < 2 || psv(1) <= kSubspaceSvTol * psv(0) || psv(0) == 0.0;
  return out;
}

inline FdWeights fd_weights(std::span<const Vec2> positions, double delta) {
  Eigen::Matrix2Xd m(2, static_cast<Eigen::Index>(positions.size()));
  for (size_t i = 0; i < positions.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = positions[i];
  return fd_weights(m, delta);
}

inline Vec2 gradient_estimate(const FdWeights& weights, const VectorXd& z) {
  if (z.size() != weights.w.cols())
    throw invalid_input_error("gradient_estimate: measurement count mismatch");
  return weights.w * z;
}

}  // namespace sseek
