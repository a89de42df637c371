#pragma once

#include "artdeform/mesh.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace artdeform {

enum class JointKind { Fixed, Revolute, Prismatic };

const char* to_string(JointKind kind);
JointKind joint_kind_from_string(const std::string& s);

/// Joint connecting a part to the fixed root. Range is radians (revolute) or model
/// units (prismatic) and is ignored for Fixed joints.
struct Joint {
  JointKind kind = JointKind::Fixed;
  Vec3 axis = Vec3::UnitZ();
  Vec3 pivot = Vec3::Zero();
  double lower = 0.0;
  double upper = 0.0;

  static Joint fixed() { return {}; }
  static Joint revolute(const Vec3& axis, const Vec3& pivot, double lower, double upper);
  static Joint prismatic(const Vec3& axis, double lower, double upper);

  /// Throws ValidationError unless the axis is unit within 1e-9 and lower <= upper.
  void validate() const;
  bool moves() const { return kind != JointKind::Fixed; }
  bool in_range(double s) const;
};

/// x -> rotation * x + translation.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& x) const { return rotation * x + translation; }
  Points apply(const Points& p) const;
};

/// Rigid motion of `joint` at state s (Rodrigues rotation about the pivot, or translation
/// along the axis). Throws ValidationError when s is outside the joint range.
RigidTransform joint_transform(const Joint& joint, double s);

/// Poses `mesh` at state s. Fixed joints return the input unchanged.
TriMesh articulate(const TriMesh& mesh, double s, const Joint& joint);

struct Part {
  std::string name;
  std::vector<TriMesh> convexes;
  Joint joint;

  /// All convexes merged, in order.
  TriMesh mesh() const;
  int num_vertices() const;
};

/// A named full or partial assignment of joint values, keyed by part name.
struct ChainState {
  std::string name;
  std::map<std::string, double> states;
};

/// Per-part scalar joint values, indexed like ArticulatedObject::parts().
using ArticulationState = std::vector<double>;

class ArticulatedObject {
 public:
  ArticulatedObject() = default;
  /// Validates: >= 1 convex per part, exactly one Fixed root, chain states name declared
  /// parts and stay inside each joint range.
  ArticulatedObject(std::vector<Part> parts, std::vector<ChainState> chain_states);

  const std::vector<Part>& parts() const { return parts_; }
  const std::vector<ChainState>& chain_states() const { return chain_states_; }
  int num_parts() const { return static_cast<int>(parts_.size()); }
  int num_convexes() const;
  int part_index(const std::string& name) const;

  /// Per-part discrete candidate states collected from chain_states; empty when the part
  /// is never named.
  std::vector<double> discrete_states(int part) const;

  /// Same structure with replaced convex geometry (one vector of meshes per part).
  ArticulatedObject with_convexes(std::vector<std::vector<TriMesh>> convexes) const;

  /// Every part posed at `state`.
  std::vector<TriMesh> posed_parts(const ArticulationState& state) const;
  TriMesh merged_mesh() const;

 private:
  std::vector<Part> parts_;
  std::vector<ChainState> chain_states_;
};

/// Same part count, joint kinds and per-part convex counts.
bool same_kinematic_chain(const ArticulatedObject& a, const ArticulatedObject& b);

/// JSON manifest: {parts:[{name, convex_objs:[path], joint:{kind, axis, pivot, range}}],
/// chain_states:[{name, states:{part: s}}]}. Relative OBJ paths resolve against the
/// manifest directory. Non-unit axes are normalized; a zero axis is rejected.
ArticulatedObject load_manifest(const std::filesystem::path& path);

/// Writes the manifest plus one OBJ per convex (`<stem>_p<i>_c<j>.obj`) next to it.
void save_manifest(const ArticulatedObject& object, const std::filesystem::path& path);

}  // namespace artdeform
