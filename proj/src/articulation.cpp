#include "artdeform/articulation.hpp"

#include "artdeform/error.hpp"

#include <json.hpp>

#include <Eigen/Geometry>

#include <cmath>
#include <fstream>
#include <set>
#include <algorithm>

namespace artdeform {

using nlohmann::json;

const char* to_string(JointKind kind) {
  switch (kind) {
    case JointKind::Fixed:
      return "fixed";
    case JointKind::Revolute:
      return "revolute";
    case JointKind::Prismatic:
      return "prismatic";
  }
  return "fixed";
}

JointKind joint_kind_from_string(const std::string& s) {
  if (s == "fixed" || s == "Fixed") return JointKind::Fixed;
  if (s == "revolute" || s == "Revolute") return JointKind::Revolute;
  if (s == "prismatic" || s == "Prismatic") return JointKind::Prismatic;
  throw ValidationError("unknown joint kind '" + s + "'");
}

Joint Joint::revolute(const Vec3& axis, const Vec3& pivot, double lower, double upper) {
  Joint j{JointKind::Revolute, axis, pivot, lower, upper};
  j.validate();
  return j;
}

Joint Joint::prismatic(const Vec3& axis, double lower, double upper) {
  Joint j{JointKind::Prismatic, axis, Vec3::Zero(), lower, upper};
  j.validate();
  return j;
}

void Joint::validate() const {
  if (kind == JointKind::Fixed) return;
  if (!axis.allFinite() || std::abs(axis.norm() - 1.0) > 1e-9)
    throw ValidationError("joint axis must be a unit vector");
  if (!pivot.allFinite()) throw ValidationError("joint pivot must be finite");
  if (!(lower <= upper)) throw ValidationError("joint range requires lower <= upper");
}

bool Joint::in_range(double s) const {
  if (kind == JointKind::Fixed) return true;
  const double tol = 1e-12 * (1.0 + std::max(std::abs(lower), std::abs(upper)));
  return s >= lower - tol && s <= upper + tol;
}

Points RigidTransform::apply(const Points& p) const {
  Points out = p * rotation.transpose();
  out.rowwise() += translation.transpose();
  return out;
}

RigidTransform joint_transform(const Joint& joint, double s) {
  RigidTransform t;
  if (joint.kind == JointKind::Fixed) return t;
  if (!joint.in_range(s))
    throw ValidationError("articulation state " + std::to_string(s) + " outside joint range [" +
                          std::to_string(joint.lower) + ", " + std::to_string(joint.upper) + "]");
  if (joint.kind == JointKind::Revolute) {
    t.rotation = Eigen::AngleAxisd(s, joint.axis).toRotationMatrix();
    t.translation = joint.pivot - t.rotation * joint.pivot;
  } else {
    t.translation = s * joint.axis;
  }
  return t;
}

TriMesh articulate(const TriMesh& mesh, double s, const Joint& joint) {
  if (joint.kind == JointKind::Fixed) return mesh;
  return mesh.with_vertices(joint_transform(joint, s).apply(mesh.vertices()));
}

TriMesh Part::mesh() const { return merge_meshes(convexes); }

int Part::num_vertices() const {
  int n = 0;
  for (const auto& c : convexes) n += c.num_vertices();
  return n;
}

ArticulatedObject::ArticulatedObject(std::vector<Part> parts, std::vector<ChainState> chain_states)
    : parts_(std::move(parts)), chain_states_(std::move(chain_states)) {
  if (parts_.empty()) throw ValidationError("articulated object needs at least one part");
  int fixed = 0;
  std::set<std::string> names;
  for (const auto& p : parts_) {
    if (p.convexes.empty()) throw ValidationError("part '" + p.name + "' has no convexes");
    if (!names.insert(p.name).second) throw ValidationError("duplicate part name '" + p.name + "'");
    p.joint.validate();
    if (p.joint.kind == JointKind::Fixed) ++fixed;
  }
  if (fixed != 1)
    throw ValidationError("articulated object needs exactly one fixed root part, found " + std::to_string(fixed));
  for (const auto& cs : chain_states_) {
    for (const auto& [name, s] : cs.states) {
      const int idx = part_index(name);
      if (idx < 0) throw ValidationError("chain state '" + cs.name + "' references unknown part '" + name + "'");
      if (!parts_[idx].joint.in_range(s))
        throw ValidationError("chain state '" + cs.name + "' puts part '" + name + "' outside its joint range");
    }
  }
}

int ArticulatedObject::num_convexes() const {
  int n = 0;
  for (const auto& p : parts_) n += static_cast<int>(p.convexes.size());
  return n;
}

int ArticulatedObject::part_index(const std::string& name) const {
  for (int i = 0; i < num_parts(); ++i)
    if (parts_[i].name == name) return i;
  return -1;
}

std::vector<double> ArticulatedObject::discrete_states(int part) const {
  std::vector<double> out;
  for (const auto& cs : chain_states_) {
    if (auto it = cs.states.find(parts_[part].name); it != cs.states.end()) {
      if (std::find(out.begin(), out.end(), it->second) == out.end()) out.push_back(it->second);
    }
  }
  return out;
}

ArticulatedObject ArticulatedObject::with_convexes(std::vector<std::vector<TriMesh>> convexes) const {
  if (convexes.size() != parts_.size()) throw ShapeError("with_convexes: part count mismatch");
  std::vector<Part> parts = parts_;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (convexes[i].size() != parts[i].convexes.size()) throw ShapeError("with_convexes: convex count mismatch");
    parts[i].convexes = std::move(convexes[i]);
  }
  return ArticulatedObject(std::move(parts), chain_states_);
}

std::vector<TriMesh> ArticulatedObject::posed_parts(const ArticulationState& state) const {
  if (state.size() != parts_.size()) throw ShapeError("articulation state size != part count");
  std::vector<TriMesh> out;
  out.reserve(parts_.size());
  for (std::size_t i = 0; i < parts_.size(); ++i) out.push_back(articulate(parts_[i].mesh(), state[i], parts_[i].joint));
  return out;
}

TriMesh ArticulatedObject::merged_mesh() const {
  std::vector<TriMesh> meshes;
  for (const auto& p : parts_) meshes.push_back(p.mesh());
  return merge_meshes(meshes);
}

bool same_kinematic_chain(const ArticulatedObject& a, const ArticulatedObject& b) {
  if (a.num_parts() != b.num_parts()) return false;
  for (int i = 0; i < a.num_parts(); ++i) {
    if (a.parts()[i].joint.kind != b.parts()[i].joint.kind) return false;
    if (a.parts()[i].convexes.size() != b.parts()[i].convexes.size()) return false;
  }
  return true;
}

namespace {

Vec3 read_vec3(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw ParseError(what + " must be an array of three numbers");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Joint read_joint(const json& j, const std::string& part) {
  Joint joint;
  joint.kind = joint_kind_from_string(j.value("kind", std::string("fixed")));
  if (joint.kind == JointKind::Fixed) return joint;
  if (!j.contains("axis")) throw ValidationError("joint of part '" + part + "' lacks an axis");
  Vec3 axis = read_vec3(j.at("axis"), "joint axis");
  const double len = axis.norm();
  if (!(len > 1e-12) || !std::isfinite(len))
    throw ValidationError("invalid joint axis for part '" + part + "' (zero length)");
  joint.axis = axis / len;
  if (j.contains("pivot")) joint.pivot = read_vec3(j.at("pivot"), "joint pivot");
  if (!j.contains("range") || !j.at("range").is_array() || j.at("range").size() != 2)
    throw ValidationError("joint of part '" + part + "' needs range [lower, upper]");
  joint.lower = j.at("range")[0].get<double>();
  joint.upper = j.at("range")[1].get<double>();
  joint.validate();
  return joint;
}

}  // namespace

ArticulatedObject load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("manifest " + path.string() + ": " + e.what());
  }
  const auto base = path.parent_path();
  std::vector<Part> parts;
  try {
    for (const auto& jp : doc.at("parts")) {
      Part part;
      part.name = jp.at("name").get<std::string>();
      for (const auto& obj : jp.at("convex_objs")) {
        std::filesystem::path p = obj.get<std::string>();
        if (p.is_relative()) p = base / p;
        if (!std::filesystem::exists(p))
          throw IoError("manifest " + path.string() + ": missing convex file " + p.string());
        part.convexes.push_back(load_obj(p));
      }
      part.joint = read_joint(jp.value("joint", json::object()), part.name);
      parts.push_back(std::move(part));
    }
    std::vector<ChainState> states;
    for (const auto& jc : doc.value("chain_states", json::array())) {
      ChainState cs;
      cs.name = jc.value("name", std::string());
      for (const auto& [k, v] : jc.at("states").items()) cs.states[k] = v.get<double>();
      states.push_back(std::move(cs));
    }
    return ArticulatedObject(std::move(parts), std::move(states));
  } catch (const json::exception& e) {
    throw ParseError("manifest " + path.string() + ": " + e.what());
  }
}

void save_manifest(const ArticulatedObject& object, const std::filesystem::path& path) {
  const auto dir = path.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  const std::string stem = path.stem().string();
  json doc;
  doc["parts"] = json::array();
  for (int i = 0; i < object.num_parts(); ++i) {
    const auto& part = object.parts()[i];
    json jp;
    jp["name"] = part.name;
    jp["convex_objs"] = json::array();
    for (std::size_t c = 0; c < part.convexes.size(); ++c) {
      const std::string file = stem + "_p" + std::to_string(i) + "_c" + std::to_string(c) + ".obj";
      save_obj(part.convexes[c], dir / file);
      jp["convex_objs"].push_back(file);
    }
    json jj;
    jj["kind"] = to_string(part.joint.kind);
    if (part.joint.moves()) {
      jj["axis"] = {part.joint.axis.x(), part.joint.axis.y(), part.joint.axis.z()};
      jj["pivot"] = {part.joint.pivot.x(), part.joint.pivot.y(), part.joint.pivot.z()};
      jj["range"] = {part.joint.lower, part.joint.upper};
    }
    jp["joint"] = jj;
    doc["parts"].push_back(jp);
  }
  doc["chain_states"] = json::array();
  for (const auto& cs : object.chain_states()) doc["chain_states"].push_back({{"name", cs.name}, {"states", cs.states}});
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace artdeform
