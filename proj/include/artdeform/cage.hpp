#pragma once

#include "artdeform/mesh.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <vector>

namespace artdeform {

/// Closed genus-0 sphere used as the starting shape of every cage: a once-subdivided
/// icosahedron with 42 vertices and 80 outward-oriented faces, unit radius at the origin.
struct CageTemplate {
  TriMesh mesh;

  static CageTemplate icosphere();
};

/// Coarse control mesh of one convex together with the N_c x N_t interpolation matrix
/// (row i = mean value coordinates of convex vertex i with respect to the cage).
struct Cage {
  TriMesh mesh;
  Eigen::MatrixXd phi;

  int num_cage_vertices() const { return mesh.num_vertices(); }
  int num_convex_vertices() const { return static_cast<int>(phi.rows()); }
};

inline constexpr double kDefaultCageEpsilon = 0.05;
/// Template radius as a multiple of the convex bounding-sphere radius before assignment.
inline constexpr double kTemplateInflation = 1.05;

/// Fits the template to a convex: scale to 1.05x the bounding-sphere radius around the
/// vertex centroid, assign template vertices to distinct convex vertices by minimum total
/// Euclidean distance, pull each template vertex (1 - epsilon) of the way to its match, then
/// compute mean value coordinates of the convex vertices.
/// Convexes with fewer vertices than the template get padded targets (nearest-vertex
/// duplicates) and a logged warning.
Cage build_cage(const TriMesh& convex, const CageTemplate& tmpl, double epsilon = kDefaultCageEpsilon);

/// Assignment and retraction step of build_cage for already placed template vertices:
/// each start vertex moves (1 - epsilon) of the way to its assigned convex vertex.
Points retract_to_convex(const TriMesh& convex, const Points& start, double epsilon);

/// Mean value coordinates of p with respect to a closed, consistently oriented triangle
/// cage. Exact vertex hits return an indicator; points on a face get that face's
/// barycentric weights.
Eigen::VectorXd mean_value_coordinates(const Vec3& p, const TriMesh& cage);

/// Row-wise mean value coordinates for a block of points.
Eigen::MatrixXd mean_value_coordinates(const Points& points, const TriMesh& cage);

/// Convex vertex offsets d_c = Phi * cage_offsets. Throws ShapeError on mismatched shapes.
Points apply_cage_deform(const Cage& cage, const Points& cage_offsets);

/// Interpolation weights of one part after the smoothing layer. Columns span the
/// concatenated cage vertices of all convexes of the part (convex j's cage starts at
/// column cage_offset[j]); rows follow the convex's own vertex order.
struct PartWeights {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<int> cage_offset;
  int total_cage_vertices = 0;

  /// Part-level offsets for convex j: weights[j] * stacked cage offsets.
  Points convex_offsets(int j, const Points& stacked_cage_offsets) const;
};

/// Weights without smoothing: each convex only sees its own cage.
PartWeights block_weights(const std::vector<Cage>& cages);

/// Boundary-band blending. A vertex of convex a at surface distance d < blend_radius from
/// another convex b of the same part mixes in b's mean value coordinates with weight
/// 1 - d / blend_radius (its own row has weight 1), then the row is renormalized.
/// Coincident seam vertices therefore receive identical rows. blend_radius <= 0 or a
/// single convex leaves the weights unchanged.
PartWeights smooth_weights(const std::vector<TriMesh>& convexes, const std::vector<Cage>& cages, double blend_radius);

/// 5% of the bounding-box diagonal of the merged part.
double default_blend_radius(const std::vector<TriMesh>& convexes);

/// On-disk cache of built cages keyed by (convex content hash, epsilon).
class CageCache {
 public:
  explicit CageCache(std::filesystem::path dir);

  Cage get_or_build(const TriMesh& convex, const CageTemplate& tmpl, double epsilon = kDefaultCageEpsilon);
  std::optional<Cage> load(const TriMesh& convex, double epsilon) const;
  void store(const TriMesh& convex, double epsilon, const Cage& cage) const;
  std::filesystem::path entry_path(const TriMesh& convex, double epsilon) const;

  int hits() const { return hits_; }
  int misses() const { return misses_; }

 private:
  std::filesystem::path dir_;
  int hits_ = 0;
  int misses_ = 0;
};

}  // namespace artdeform
