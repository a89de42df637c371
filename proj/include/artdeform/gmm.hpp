#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace artdeform {

/// Diagonal-covariance Gaussian mixture over coefficient vectors.
struct GaussianMixture {
  struct Component {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;  // diagonal covariance
    double weight = 0.0;
  };
  std::vector<Component> components;

  int dim() const { return components.empty() ? 0 : static_cast<int>(components.front().mean.size()); }
  double log_likelihood(const std::vector<Eigen::VectorXd>& data) const;
};

inline constexpr double kVarianceFloor = 1e-6;

struct GmmConfig {
  int max_iters = 100;
  double tol = 1e-8;
  double variance_floor = kVarianceFloor;
  std::uint64_t seed = 0;
};

/// k-means++ seeding and Lloyd refinement, then EM. Uses min(n_components, #vectors)
/// components. Throws ValidationError on an empty set, ShapeError on ragged vectors.
GaussianMixture fit_gmm(const std::vector<Eigen::VectorXd>& data, int n_components, const GmmConfig& cfg = {});

/// One draw: component by weight, then an independent normal per dimension.
Eigen::VectorXd sample_gmm(const GaussianMixture& gmm, std::uint64_t seed);

}  // namespace artdeform
