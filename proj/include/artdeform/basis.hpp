#pragma once

#include "artdeform/cage.hpp"
#include "artdeform/chamfer.hpp"
#include "artdeform/mesh.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace artdeform {

/// K cage-offset patterns of one convex. Row k is basis k flattened as (vertex t, axis d)
/// -> column 3t + d, so a coefficient vector z yields cage offsets reshape(B^T z).
struct BasisSet {
  Eigen::MatrixXd bases;

  int num_bases() const { return static_cast<int>(bases.rows()); }
  int num_cage_vertices() const { return static_cast<int>(bases.cols() / 3); }

  /// reshape(B^T z) as an N_t x 3 block.
  Points cage_offsets(const Eigen::VectorXd& z) const;
  /// Largest |<b_i, b_j>| / (|b_i| |b_j|) over i < j; 0 for K < 2.
  double max_normalized_dot() const;

  static BasisSet zeros(int k, int num_cage_vertices);
  static BasisSet random(int k, int num_cage_vertices, double scale, std::uint64_t seed);
};

/// Per-target coefficient vectors of one source convex, in pair order.
using CoeffSet = std::vector<Eigen::VectorXd>;

struct FitConfig {
  double lambda_orth = 1e-4;
  double lambda_sp = 1e-4;
  double lambda_phy = 1.0;
  /// Surface samples per convex for the Chamfer terms; <= 0 uses the mesh vertices.
  int chamfer_samples = 4096;
  int outer_iters = 10;
  std::uint64_t seed = 0;
  /// Alternation rounds and absolute CD-improvement tolerance of fit_coefficient.
  int coeff_rounds = 50;
  double coeff_tol = 1e-8;
  /// Early stop of fit_bases on relative L_C improvement.
  double rel_tol = 1e-6;
  /// Regularizer gradient steps after each closed-form basis solve.
  int reg_steps = 20;
  /// Standard deviation of random basis initialization, relative to the cage radius.
  double init_scale = 0.05;

  void validate() const;
};

/// A (source convex, target convex) correspondence prepared for fitting: source surface
/// samples with their interpolation rows, and target samples. When source and target
/// share connectivity the target is sampled at the same (face, barycentric) sites.
struct ConvexPair {
  Eigen::MatrixXd sample_phi;  // n_s x N_t
  Points source_points;        // n_s x 3, undeformed
  Points target_points;        // n_q x 3

  /// Source samples displaced by cage offsets.
  Points deformed(const Points& cage_offsets) const;
};

ConvexPair prepare_pair(const Cage& cage, const TriMesh& source, const TriMesh& target, int samples, std::uint64_t seed);

struct CoefficientFit {
  Eigen::VectorXd z;
  double chamfer = 0.0;
  int rounds = 0;
  bool converged = false;
  std::vector<double> history;  // CD after each round, starting with the initial value
};

/// ICP-style fit: freeze nearest-neighbour correspondences, solve the resulting linear
/// least squares for z in closed form (minimum norm), re-match, repeat until the CD
/// improvement drops below cfg.coeff_tol or cfg.coeff_rounds rounds. Never increases CD;
/// returns the best iterate. `start` (if non-empty) competes with z = 0 as initial guess.
CoefficientFit fit_coefficient(const BasisSet& bases, const ConvexPair& pair, const FitConfig& cfg,
                               const Eigen::VectorXd& start = {});

CoefficientFit fit_coefficient(const BasisSet& bases, const Cage& cage, const TriMesh& source, const TriMesh& target,
                               const FitConfig& cfg);

/// Minimum-norm least-squares solution of B^T z = vec(cage_offsets).
Eigen::VectorXd lsq_coefficient(const BasisSet& bases, const Points& cage_offsets);

struct Regularizers {
  double orth = 0.0;
  double sparsity = 0.0;
};

/// L_orth = sum_{i<j} (<b_i,b_j> / (|b_i||b_j| + 1e-12))^2, L_sp = sum_i |b_i|_1 / (K * 3 N_t).
Regularizers regularizers(const BasisSet& bases);

/// Gradient of lambda_orth * L_orth + lambda_sp * L_sp (sign subgradient, 0 at 0).
Eigen::MatrixXd regularizer_gradient(const BasisSet& bases, double lambda_orth, double lambda_sp);

/// Basis-update objective with frozen correspondences and coefficients:
/// mean over pairs of the matched Chamfer cost + lambda_orth L_orth + lambda_sp L_sp
/// + <linear_term, B>.
class BasisObjective {
 public:
  BasisObjective(const std::vector<ConvexPair>& pairs, const CoeffSet& coeffs,
                 const std::vector<ChamferMatches>& matches, double lambda_orth, double lambda_sp);

  double data(const BasisSet& b) const;
  double value(const BasisSet& b) const;
  Eigen::MatrixXd data_gradient(const BasisSet& b) const;
  Eigen::MatrixXd gradient(const BasisSet& b) const;

  /// Exact minimizer of data + linear term over B, as a minimum-norm update of `current`.
  BasisSet solve_data(const BasisSet& current) const;

  Eigen::MatrixXd linear_term;  // empty or K x 3N_t

 private:
  const std::vector<ConvexPair>& pairs_;
  const CoeffSet& coeffs_;
  const std::vector<ChamferMatches>& matches_;
  double lambda_orth_, lambda_sp_;
};

/// One basis update: closed-form data solve, then backtracking gradient steps on the full
/// regularized objective. `linear_term` (may be empty) adds a constant gradient, used for
/// the linearized physics penalty.
BasisSet update_bases(const std::vector<ConvexPair>& pairs, const BasisSet& current, const CoeffSet& coeffs,
                      const FitConfig& cfg, const Eigen::MatrixXd& linear_term = {});

/// Fits all coefficients with fixed bases; returns fits in pair order.
std::vector<CoefficientFit> fit_all_coefficients(const BasisSet& bases, const std::vector<ConvexPair>& pairs,
                                                 const FitConfig& cfg, const CoeffSet& warm = {}, int jobs = 1);

struct BasisFit {
  BasisSet bases;
  CoeffSet coeffs;
  std::vector<double> loss_history;  // L_C after each coefficient stage
  double identity_loss = 0.0;        // L_C with zero deformation
  double final_loss = 0.0;
};

/// Alternating optimization of coefficients and bases over pairs sharing one source cage.
/// Stops after cfg.outer_iters basis updates or relative L_C improvement < cfg.rel_tol;
/// always ends with a coefficient stage so coefficients match the returned bases.
/// Throws ValidationError for no pairs or a degenerate (all-zero) interpolation matrix.
BasisFit fit_bases(const std::vector<ConvexPair>& pairs, const BasisSet& init, const FitConfig& cfg, int jobs = 1);

/// Mean CD of the pairs deformed by their coefficients.
double convex_loss(const BasisSet& bases, const std::vector<ConvexPair>& pairs, const CoeffSet& coeffs);

}  // namespace artdeform
