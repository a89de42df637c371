#pragma once

#include "artdeform/articulation.hpp"
#include "artdeform/mesh.hpp"
#include "artdeform/synthesis.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace artdeform {

struct SimConfig {
  int n_steps = 100;
  int n_det = 100;
  std::uint64_t seed = 0;
  int jobs = 1;

  void validate() const;
};

struct ProjConfig {
  int iters = 10;
  double eps = 1e-5;

  static ProjConfig train() { return {5, 1e-4}; }
  static ProjConfig test() { return {10, 1e-5}; }
  void validate() const;
};

struct CollisionEntry {
  int part = 0;
  int det = 0;
  double pene = 0.0;
  double proj = 0.0;
};

struct CollisionReport {
  double l_phy = 0.0;
  double l_proj = 0.0;
  std::vector<CollisionEntry> entries;  // part-major, det-minor

  std::string to_json() const;
};

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// D[v][f]: signed distance of V_v to the plane of face f, positive on the normal side.
/// Throws ValidationError naming a zero-area face.
Eigen::MatrixXd vertex_face_distance(const Points& V, const TriMesh& ref);

/// C[v][f]: the projection of V_v onto the plane of face f lies in the triangle
/// (barycentric coordinates within [-1e-9, 1 + 1e-9]).
BoolMatrix vertices_in_faces(const Points& V, const TriMesh& ref);

struct SimulationResult {
  double pene = 0.0;
  double proj = 0.0;
  /// Gradients with respect to the rest-pose moving vertices with masks, depths, normals
  /// and the reference treated as constants. Empty unless requested.
  Points grad_pene;
  Points grad_proj;
};

/// One moving part swept over its joint range against a static reference in N_s steps.
/// Both averages reduce over every vertex-face entry. Fixed joints return zeros.
SimulationResult single_simulation(const TriMesh& moving, const TriMesh& ref, const Joint& joint, int n_steps,
                                   bool gradients = false);

/// Reference state of every part for one single-part process; reproducible per
/// (seed, moving part, det).
ArticulationState sample_reference_state(const ArticulatedObject& object, int moving, int det, std::uint64_t seed);

struct PhysicsGradients {
  std::vector<Points> pene;  // per part, rest-pose vertices
  std::vector<Points> proj;
};

/// Every part moves in turn against N_det sampled placements of the others; L_phy and
/// L_proj average all part x det processes (Fixed parts contribute zeros).
CollisionReport physics_losses(const ArticulatedObject& object, const SimConfig& cfg, PhysicsGradients* grads = nullptr);

/// d L_proj / d theta of a deformed object, with geometry terms detached.
Eigen::VectorXd grad_proj_wrt_z(const ObjectDeformer& deformer, const Eigen::VectorXd& theta, const SimConfig& cfg);

struct CorrectionResult {
  Eigen::VectorXd z;
  CollisionReport before;
  CollisionReport after;
};

/// proj.iters steps of z <- z - eps dL_proj/dz. Throws NumericError on a non-finite gradient.
CorrectionResult correct_shape(const ObjectDeformer& deformer, const Eigen::VectorXd& z, const ProjConfig& proj,
                               const SimConfig& sim);

}  // namespace artdeform
