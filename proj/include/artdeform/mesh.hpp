#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace artdeform {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
/// N x 3 row-major block of positions (model units).
using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Faces = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// Indexed triangle surface. Construction validates: indices in range, three distinct
/// indices per face, finite coordinates. Immutable afterwards.
class TriMesh {
 public:
  TriMesh() = default;
  TriMesh(Points vertices, Faces faces);

  const Points& vertices() const { return vertices_; }
  const Faces& faces() const { return faces_; }
  int num_vertices() const { return static_cast<int>(vertices_.rows()); }
  int num_faces() const { return static_cast<int>(faces_.rows()); }
  bool empty() const { return vertices_.rows() == 0; }

  Vec3 vertex(int i) const { return vertices_.row(i).transpose(); }

  /// Same connectivity, new positions. Throws ShapeError on row-count mismatch.
  TriMesh with_vertices(Points vertices) const;

  /// Unit face normals (right-hand rule). Throws ValidationError on a zero-area face.
  Points face_normals() const;
  Eigen::VectorXd face_areas() const;
  double total_area() const;
  Vec3 centroid() const;
  /// Length of the axis-aligned bounding-box diagonal.
  double bbox_diagonal() const;

  /// Closed and consistently oriented: every directed edge appears once and its reverse
  /// appears once.
  bool is_watertight() const;

  /// FNV-1a over positions and indices; used to key cached cages.
  std::uint64_t content_hash() const;

 private:
  Points vertices_;
  Faces faces_;
};

/// Concatenates meshes, offsetting face indices.
TriMesh merge_meshes(const std::vector<TriMesh>& meshes);

/// Reads `v`/`f` records. Polygons are fan-triangulated, `a/b/c` index forms and negative
/// (relative) indices accepted, other records ignored.
/// Throws ParseError (with line number) or ValidationError for degenerate faces.
TriMesh load_obj(const std::filesystem::path& path);

/// Writes with round-trip precision. Throws ValidationError for a mesh without faces,
/// IoError when the file cannot be written.
void save_obj(const TriMesh& mesh, const std::filesystem::path& path);

/// Area-weighted surface samples, kept with their (face, barycentric) provenance so
/// the same samples can be re-evaluated on any mesh sharing the connectivity.
struct SurfaceSamples {
  Points points;
  std::vector<int> face;
  Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> bary;

  int size() const { return static_cast<int>(points.rows()); }
};

/// n area-weighted samples; deterministic for a fixed seed.
/// Throws ValidationError if n < 1 or the mesh has zero total area.
SurfaceSamples sample_surface(const TriMesh& mesh, int n, std::uint64_t seed);

/// Evaluates the stored (face, barycentric) pairs on `mesh`. Requires the same face list.
Points evaluate_samples(const TriMesh& mesh, const SurfaceSamples& samples);

bool same_connectivity(const TriMesh& a, const TriMesh& b);

/// Unsigned distance from p to triangle (a, b, c).
double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);
/// Minimum point-triangle distance over all faces.
double point_mesh_distance(const Vec3& p, const TriMesh& mesh);

}  // namespace artdeform
