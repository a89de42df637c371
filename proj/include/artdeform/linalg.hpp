#pragma once

#include <Eigen/Core>

namespace artdeform {

/// Relative singular-value cutoff used for every pseudo-inverse in the library.
inline constexpr double kSingularCutoff = 1e-10;

/// Thin SVD A = U diag(s) V^T with a fixed sign convention: the first non-zero entry of
/// each left singular vector is positive (the matching right vector flips with it).
struct Svd {
  Eigen::MatrixXd U;
  Eigen::VectorXd s;
  Eigen::MatrixXd V;

  Eigen::MatrixXd reconstruct() const { return U * s.asDiagonal() * V.transpose(); }
};

Svd svd(const Eigen::MatrixXd& a);

/// Diagonal Sigma^+ with singular values below cutoff * sigma_max treated as zero.
Eigen::VectorXd pinv_singular_values(const Eigen::VectorXd& s, double rel_cutoff = kSingularCutoff);

/// Moore-Penrose pseudo-inverse V Sigma^+ U^T.
Eigen::MatrixXd pinv(const Eigen::MatrixXd& a, double rel_cutoff = kSingularCutoff);

/// Minimum-norm least-squares solution of A x = b.
Eigen::VectorXd lsq_min_norm(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double rel_cutoff = kSingularCutoff);

}  // namespace artdeform
