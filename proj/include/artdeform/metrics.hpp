#pragma once

#include "artdeform/articulation.hpp"
#include "artdeform/mesh.hpp"
#include "artdeform/physics.hpp"

#include <Eigen/Core>

#include <vector>

namespace artdeform {

struct EvalSet {
  std::vector<Points> generated;
  std::vector<Points> reference;

  /// Throws ValidationError when a side is empty.
  void validate() const;
};

/// D(i, j) = chamfer_distance(a[i], b[j]).
Eigen::MatrixXd pairwise_chamfer(const std::vector<Points>& a, const std::vector<Points>& b, int jobs = 1);

/// Metrics from a precomputed |generated| x |reference| distance matrix.
double mmd(const Eigen::MatrixXd& gen_ref);
double cov(const Eigen::MatrixXd& gen_ref);
/// gen_gen and ref_ref are the within-side distance matrices; ties go to the lowest
/// pooled index (generated first).
double one_nna(const Eigen::MatrixXd& gen_ref, const Eigen::MatrixXd& gen_gen, const Eigen::MatrixXd& ref_ref);

/// Mean over reference sets of the minimum CD to any generated set.
double mmd(const EvalSet& eval, int jobs = 1);
/// Percentage of reference sets that are the nearest reference of some generated set.
double cov(const EvalSet& eval, int jobs = 1);
/// Leave-one-out 1-NN accuracy (percent) over the pooled sets.
double one_nna(const EvalSet& eval, int jobs = 1);

inline constexpr int kJsdResolution = 28;

/// Jensen-Shannon divergence (base 2) between the voxel occupancy histograms of all
/// generated and all reference points, on a res^3 grid over the bounding cube of the union.
double jsd(const EvalSet& eval, int resolution = kJsdResolution);

/// Average penetration depth: L_phy of physics_losses.
double apd(const ArticulatedObject& object, const SimConfig& cfg);

}  // namespace artdeform
