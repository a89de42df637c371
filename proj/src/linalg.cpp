#include "artdeform/linalg.hpp"

#include <Eigen/SVD>

namespace artdeform {

Svd svd(const Eigen::MatrixXd& a) {
  Svd out;
  if (a.size() == 0) {
    out.U = Eigen::MatrixXd::Zero(a.rows(), 0);
    out.s = Eigen::VectorXd::Zero(0);
    out.V = Eigen::MatrixXd::Zero(a.cols(), 0);
    return out;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> solver(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.U = solver.matrixU();
  out.s = solver.singularValues();
  out.V = solver.matrixV();
  for (Eigen::Index k = 0; k < out.U.cols(); ++k) {
    for (Eigen::Index r = 0; r < out.U.rows(); ++r) {
      const double x = out.U(r, k);
      if (x == 0.0) continue;
      if (x < 0.0) {
        out.U.col(k) *= -1.0;
        out.V.col(k) *= -1.0;
      }
      break;
    }
  }
  return out;
}

Eigen::VectorXd pinv_singular_values(const Eigen::VectorXd& s, double rel_cutoff) {
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  if (s.size() == 0) return inv;
  const double cutoff = rel_cutoff * s.maxCoeff();
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > cutoff && s[i] > 0.0) inv[i] = 1.0 / s[i];
  return inv;
}

Eigen::MatrixXd pinv(const Eigen::MatrixXd& a, double rel_cutoff) {
  const Svd d = svd(a);
  return d.V * pinv_singular_values(d.s, rel_cutoff).asDiagonal() * d.U.transpose();
}

Eigen::VectorXd lsq_min_norm(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double rel_cutoff) {
  const Svd d = svd(a);
  return d.V * (pinv_singular_values(d.s, rel_cutoff).asDiagonal() * (d.U.transpose() * b));
}

}  // namespace artdeform
