#pragma once

#include "artdeform/articulation.hpp"
#include "artdeform/cage.hpp"

#include <Eigen/Core>

#include <vector>

namespace artdeform {

/// Interpolation weights for every part of an object; cages are indexed by flattened
/// convex index (parts in order, convexes in order).
std::vector<PartWeights> object_weights(const ArticulatedObject& object, const std::vector<Cage>& cages, bool smooth,
                                        double blend_fraction = 0.05);

/// Geometry of an articulated object as an affine function of a parameter vector theta.
/// Convex m's cage offsets are reshape(maps[m] * theta) (maps[m] is 3N_t x P, row 3t + d),
/// which the part weights spread over the rest-pose vertices of its part.
class ObjectDeformer {
 public:
  ObjectDeformer(ArticulatedObject reference, std::vector<PartWeights> weights, std::vector<Eigen::MatrixXd> maps);

  int num_params() const { return num_params_; }
  const ArticulatedObject& reference() const { return reference_; }

  ArticulatedObject deform(const Eigen::VectorXd& theta) const;

  /// d(vec part vertices) / d theta; rows 3v + d over the part's convexes in order.
  const Eigen::MatrixXd& part_jacobian(int part) const { return jacobians_[part]; }

  /// Pulls a per-part rest-vertex gradient (n_p x 3 each) back to theta.
  Eigen::VectorXd pull_back(const std::vector<Points>& vertex_grads) const;

  /// Pulls a per-part rest-vertex gradient back to each convex's cage offsets (N_t x 3).
  std::vector<Points> cage_gradients(const std::vector<Points>& vertex_grads) const;

 private:
  ArticulatedObject reference_;
  std::vector<PartWeights> weights_;
  std::vector<Eigen::MatrixXd> maps_;
  std::vector<Eigen::MatrixXd> jacobians_;
  std::vector<int> part_first_convex_;
  int num_params_ = 0;
};

/// Maps for synchronized generation: theta = z, maps[m] = B_m^T S_m.
std::vector<Eigen::MatrixXd> synced_maps(const std::vector<Eigen::MatrixXd>& bases, const std::vector<Eigen::MatrixXd>& S);

/// Maps for per-convex coefficients: theta stacks y_0, ..., y_{M-1} (K each),
/// maps[m] = B_m^T restricted to block m.
std::vector<Eigen::MatrixXd> stacked_maps(const std::vector<Eigen::MatrixXd>& bases);

}  // namespace artdeform
