#pragma once

#include <Eigen/Core>

#include <vector>

namespace artdeform {

/// Per-convex synchronization matrices and the shared global coefficients.
/// Column i of global_coeffs is z^i.
struct SyncState {
  std::vector<Eigen::MatrixXd> S;  // M matrices, K x K
  Eigen::MatrixXd global_coeffs;   // K x |A|
  /// [0] pre-synchronization (S = I, initial z), [1] after the initial S update, then one
  /// entry per loop. Descent is not guaranteed.
  std::vector<double> objective_history;

  int num_convexes() const { return static_cast<int>(S.size()); }
  int num_targets() const { return static_cast<int>(global_coeffs.cols()); }
};

/// sum_m sum_i || B_m^T (S_m z^i - y_m^i) ||_2, with B_m of shape K x 3N_t and Y[m] of
/// shape K x |A| (column i = y_m^i). Empty `bases` measures the error in coefficient space.
double sync_objective(const std::vector<Eigen::MatrixXd>& bases, const std::vector<Eigen::MatrixXd>& S,
                      const Eigen::MatrixXd& Z, const std::vector<Eigen::MatrixXd>& Y);

/// S_m = U_m Sigma_m V_m^T V Sigma^+ U^T, with Z = U Sigma V^T and Y_m = U_m Sigma_m V_m^T.
/// Equals Y_m Z^+.
Eigen::MatrixXd optimize_sync_matrix(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Ym);

/// z^i: mean over m of the minimum-norm least-squares solutions of S_m z = y_m^i.
/// y[m] is y_m^i.
Eigen::VectorXd optimize_global_coeff(const std::vector<Eigen::MatrixXd>& S, const std::vector<Eigen::VectorXd>& y);

/// optimize_global_coeff for every target at once; returns K x |A|.
Eigen::MatrixXd optimize_global_coeffs(const std::vector<Eigen::MatrixXd>& S, const std::vector<Eigen::MatrixXd>& Y);

/// Starts from z^i = mean_m y_m^i and one S update, then `iters` loops of a z update
/// followed by an S update. |Z| is held at its initial norm between updates.
/// iters = 0 returns the state after the initial pass.
SyncState synchronize(const std::vector<Eigen::MatrixXd>& bases, const std::vector<Eigen::MatrixXd>& Y, int iters = 100,
                      int jobs = 1);

/// S_m^T B_m: the K x 3N_t operator whose transpose maps z to B_m^T S_m z.
Eigen::MatrixXd synced_bases(const Eigen::MatrixXd& bases, const Eigen::MatrixXd& S);

}  // namespace artdeform
