#include "artdeform/fixtures.hpp"

#include "artdeform/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <tuple>

namespace artdeform {

TriMesh box_mesh(const Vec3& lo, const Vec3& hi, int n) {
  if (n < 1) throw ValidationError("box_mesh: subdivisions must be >= 1");
  if (!((hi - lo).array() > 0).all()) throw ValidationError("box_mesh: empty box");
  // Lattice points on the box surface, welded by integer coordinates.
  std::map<std::tuple<int, int, int>, int> index;
  std::vector<Vec3> verts;
  std::vector<Eigen::Vector3i> tris;
  auto vid = [&](int i, int j, int k) {
    const auto key = std::make_tuple(i, j, k);
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    const Vec3 t(i / static_cast<double>(n), j / static_cast<double>(n), k / static_cast<double>(n));
    verts.push_back(lo + (hi - lo).cwiseProduct(t));
    index.emplace(key, static_cast<int>(verts.size()) - 1);
    return static_cast<int>(verts.size()) - 1;
  };
  // For each axis and side, walk the grid; (u, v) axes chosen so u x v points outward.
  for (int axis = 0; axis < 3; ++axis)
    for (int side = 0; side < 2; ++side) {
      int u = (axis + 1) % 3, v = (axis + 2) % 3;
      if (side == 0) std::swap(u, v);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          auto corner = [&](int da, int db) {
            int c[3];
            c[axis] = side * n;
            c[u] = a + da;
            c[v] = b + db;
            return vid(c[0], c[1], c[2]);
          };
          const int p00 = corner(0, 0), p10 = corner(1, 0), p11 = corner(1, 1), p01 = corner(0, 1);
          tris.emplace_back(p00, p10, p11);
          tris.emplace_back(p00, p11, p01);
        }
    }
  Points V(verts.size(), 3);
  for (std::size_t i = 0; i < verts.size(); ++i) V.row(i) = verts[i].transpose();
  Faces F(tris.size(), 3);
  for (std::size_t i = 0; i < tris.size(); ++i) F.row(i) = tris[i].transpose();
  return {std::move(V), std::move(F)};
}

ArticulatedObject toy_eyeglasses(int variant) {
  // proportions vary smoothly with the variant index
  const double k = static_cast<double>(variant);
  const double rim_w = 1.0 + 0.08 * std::sin(1.3 * k + 0.4);
  const double rim_h = 0.7 + 0.06 * std::cos(0.9 * k);
  const double depth = 0.1 + 0.01 * std::sin(2.1 * k);
  const double leg_len = 0.85 * rim_w + 0.04 * std::cos(1.7 * k);
  const double leg_t = 0.06;
  const double leg_h = 0.12 + 0.01 * std::sin(k);
  const double gap = 0.02;
  const double half = 0.5 * depth;

  Part frame{"frame",
             {box_mesh({-rim_w, -rim_h / 2, -half}, {0.0, rim_h / 2, half}),
              box_mesh({0.0, -rim_h / 2, -half}, {rim_w, rim_h / 2, half})},
             Joint::fixed()};
  const double z0 = -half - gap;
  Part left{"left_leg",
            {box_mesh({-rim_w - leg_t, -leg_h / 2, z0 - leg_len}, {-rim_w, leg_h / 2, z0})},
            Joint::revolute(-Vec3::UnitY(), {-rim_w, 0.0, z0}, 0.0, std::numbers::pi / 2)};
  Part right{"right_leg",
             {box_mesh({rim_w, -leg_h / 2, z0 - leg_len}, {rim_w + leg_t, leg_h / 2, z0})},
             Joint::revolute(Vec3::UnitY(), {rim_w, 0.0, z0}, 0.0, std::numbers::pi / 2)};
  std::vector<ChainState> states{{"open", {{"left_leg", 0.0}, {"right_leg", 0.0}}},
                                 {"folded", {{"left_leg", std::numbers::pi / 2}, {"right_leg", std::numbers::pi / 2}}}};
  return ArticulatedObject({frame, left, right}, states);
}

ArticulatedObject hinge_fixture(double rod_length, double wall_thickness) {
  if (!(rod_length > 0.0) || !(wall_thickness > 0.0)) throw ValidationError("hinge_fixture: sizes must be positive");
  const double t = 0.05;
  Part wall{"wall", {box_mesh({-0.2, 0.5, -0.5}, {2.0, 0.5 + wall_thickness, 0.5})}, Joint::fixed()};
  Part rod{"rod",
           {box_mesh({0.05, -t / 2, -t / 2}, {0.05 + rod_length, t / 2, t / 2}, 4)},
           Joint::revolute(Vec3::UnitZ(), Vec3::Zero(), 0.0, std::numbers::pi / 2)};
  return ArticulatedObject({wall, rod}, {{"rest", {{"rod", 0.0}}}});
}

ArticulatedObject disjoint_fixture() {
  Part base{"base", {box_mesh({-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5})}, Joint::fixed()};
  Part far{"far",
           {box_mesh({17.0, -0.5, -0.5}, {18.0, 0.5, 0.5})},
           Joint::revolute(Vec3::UnitZ(), {17.5, 0.0, 0.0}, 0.0, std::numbers::pi)};
  return ArticulatedObject({base, far}, {});
}

ArticulatedObject box_object(const Vec3& size) {
  Part body{"body", {box_mesh(-0.5 * size, 0.5 * size)}, Joint::fixed()};
  return ArticulatedObject({body}, {});
}

std::filesystem::path write_dataset(const std::vector<ArticulatedObject>& objects, const std::filesystem::path& dir,
                                    const std::string& role, const std::string& prefix) {
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["role"] = role;
  j["objects"] = nlohmann::json::array();
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto rel = std::filesystem::path(prefix + std::to_string(i)) / "object.json";
    std::filesystem::create_directories(dir / rel.parent_path());
    save_manifest(objects[i], dir / rel);
    j["objects"].push_back(rel.generic_string());
  }
  const auto path = dir / (role + ".json");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  return path;
}

}  // namespace artdeform
