#include "helpers.hpp"

#include "artdeform/articulation.hpp"
#include "artdeform/assignment.hpp"
#include "artdeform/error.hpp"
#include "artdeform/fixtures.hpp"
#include "artdeform/kdtree.hpp"
#include "artdeform/mesh.hpp"

#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <numbers>

using namespace artdeform;
using namespace testing_util;

TEST_CASE("load_obj reads a single triangle") {
  const auto dir = scratch_dir("obj_min");
  write_text(dir / "t.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  const TriMesh m = load_obj(dir / "t.obj");
  CHECK(m.num_vertices() == 3);
  CHECK(m.num_faces() == 1);
}

TEST_CASE("load_obj fan-triangulates polygons") {
  const auto dir = scratch_dir("obj_quad");
  write_text(dir / "q.obj", "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
  const TriMesh m = load_obj(dir / "q.obj");
  REQUIRE(m.num_faces() == 2);
  CHECK(m.faces().row(0) == Eigen::RowVector3i(0, 1, 2));
  CHECK(m.faces().row(1) == Eigen::RowVector3i(0, 2, 3));
}

TEST_CASE("load_obj accepts slash forms and negative indices") {
  const auto dir = scratch_dir("obj_forms");
  write_text(dir / "f.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nf 1/1 2/1/1 -1\n");
  const TriMesh m = load_obj(dir / "f.obj");
  CHECK(m.faces().row(0) == Eigen::RowVector3i(0, 1, 2));
}

TEST_CASE("load_obj reports out-of-range indices with a line number") {
  const auto dir = scratch_dir("obj_bad");
  write_text(dir / "b.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n");
  try {
    load_obj(dir / "b.obj");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
}

TEST_CASE("load_obj rejects degenerate faces and missing files") {
  const auto dir = scratch_dir("obj_degen");
  write_text(dir / "d.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 1 2\n");
  CHECK_THROWS_AS(load_obj(dir / "d.obj"), ValidationError);
  CHECK_THROWS_AS(load_obj(dir / "nope.obj"), IoError);
}

TEST_CASE("TriMesh constructor enforces invariants") {
  Points v(3, 3);
  v << 0, 0, 0, 1, 0, 0, 0, 1, 0;
  Faces f(1, 3);
  f << 0, 1, 3;
  CHECK_THROWS_AS(TriMesh(v, f), ValidationError);
  f << 0, 1, 1;
  CHECK_THROWS_AS(TriMesh(v, f), ValidationError);
  v(0, 0) = std::numeric_limits<double>::quiet_NaN();
  f << 0, 1, 2;
  CHECK_THROWS_AS(TriMesh(v, f), ValidationError);
}

TEST_CASE("save_obj round trips") {
  const auto dir = scratch_dir("obj_rt");
  const TriMesh cube = box_mesh({0, 0, 0}, {1, 1, 1}, 1);
  save_obj(cube, dir / "c.obj");
  const TriMesh back = load_obj(dir / "c.obj");
  CHECK(back.faces() == cube.faces());
  CHECK((back.vertices() - cube.vertices()).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(save_obj(TriMesh(Points::Zero(3, 3), Faces(0, 3)), dir / "e.obj"), ValidationError);

  // 4096 random vertices over a fan of faces
  const Points v = random_points(4096, 7, -100.0, 100.0);
  Faces f(4094, 3);
  for (int i = 0; i < 4094; ++i) f.row(i) << 0, i + 1, i + 2;
  const TriMesh big(v, f);
  save_obj(big, dir / "big.obj");
  const TriMesh big_back = load_obj(dir / "big.obj");
  CHECK((big_back.vertices() - v).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(big_back.faces() == f);
}

TEST_CASE("articulate: identity, half turn, prismatic shift") {
  const TriMesh m = box_mesh({1, 0, 0}, {2, 1, 1}, 1);
  const Joint rz = Joint::revolute(Vec3::UnitZ(), Vec3::Zero(), -4.0, 4.0);
  CHECK((articulate(m, 0.0, rz).vertices() - m.vertices()).cwiseAbs().maxCoeff() < 1e-15);

  Points one(1, 3);
  one << 1, 0, 0;
  Faces none(0, 3);
  const TriMesh pt(one, none);
  const Points turned = articulate(pt, std::numbers::pi, rz).vertices();
  CHECK((turned.row(0) - Eigen::RowVector3d(-1, 0, 0)).norm() < 1e-9);

  const Joint py = Joint::prismatic(Vec3::UnitY(), 0.0, 1.0);
  const Points shifted = articulate(m, 0.5, py).vertices();
  CHECK(((shifted - m.vertices()).rowwise() - Eigen::RowVector3d(0, 0.5, 0)).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(articulate(m, 2.0, py), ValidationError);
  CHECK((articulate(m, 0.3, Joint::fixed()).vertices() - m.vertices()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("articulate is rigid and composes") {
  const TriMesh m(random_points(30, 3), Faces(0, 3));
  const Vec3 axis = Vec3(1, 2, -0.5).normalized();
  const Joint j = Joint::revolute(axis, Vec3(0.3, -0.2, 1.0), -3.0, 3.0);
  const TriMesh a = articulate(m, 0.7, j);
  for (int i = 0; i < 30; ++i)
    for (int k = i + 1; k < 30; ++k)
      CHECK(std::abs((a.vertex(i) - a.vertex(k)).norm() - (m.vertex(i) - m.vertex(k)).norm()) < 1e-9);
  const TriMesh twice = articulate(articulate(m, 0.7, j), 1.1, j);
  const TriMesh once = articulate(m, 1.8, j);
  CHECK((twice.vertices() - once.vertices()).cwiseAbs().maxCoeff() < 1e-9);

  const Joint p = Joint::prismatic(axis, -2.0, 2.0);
  const TriMesh b = articulate(m, 1.3, p);
  for (int i = 0; i < 30; ++i)
    for (int k = i + 1; k < 30; ++k)
      CHECK(std::abs((b.vertex(i) - b.vertex(k)).norm() - (m.vertex(i) - m.vertex(k)).norm()) < 1e-12);
}

TEST_CASE("joint validation") {
  CHECK_THROWS_AS(Joint::revolute(Vec3(1, 1, 0), Vec3::Zero(), 0, 1).validate(), ValidationError);
  CHECK_THROWS_AS(Joint::revolute(Vec3::UnitX(), Vec3::Zero(), 1, 0).validate(), ValidationError);
  CHECK_NOTHROW(Joint::prismatic(Vec3::UnitX(), 0, 1).validate());
}

TEST_CASE("manifests: two parts, zero axis, eyeglasses fixture") {
  const auto dir = scratch_dir("manifest");
  const ArticulatedObject hinge = hinge_fixture();
  save_manifest(hinge, dir / "hinge.json");
  const ArticulatedObject back = load_manifest(dir / "hinge.json");
  CHECK(back.num_parts() == 2);
  CHECK(back.parts()[1].joint.kind == JointKind::Revolute);
  CHECK(same_kinematic_chain(back, hinge));

  nlohmann::json j;
  {
    std::ifstream in(dir / "hinge.json");
    in >> j;
  }
  j["parts"][1]["joint"]["axis"] = {0.0, 0.0, 0.0};
  write_text(dir / "zero.json", j.dump());
  CHECK_THROWS_AS(load_manifest(dir / "zero.json"), ValidationError);

  j["parts"][1]["joint"]["axis"] = {0.0, 0.0, 1.0};
  j["chain_states"][0]["states"]["rod"] = 5.0;
  write_text(dir / "range.json", j.dump());
  CHECK_THROWS_AS(load_manifest(dir / "range.json"), ValidationError);

  j["chain_states"][0]["states"]["rod"] = 0.0;
  j["parts"][0]["convex_objs"][0] = "missing.obj";
  write_text(dir / "missing.json", j.dump());
  CHECK_THROWS_AS(load_manifest(dir / "missing.json"), IoError);

  save_manifest(toy_eyeglasses(0), dir / "glasses.json");
  const ArticulatedObject glasses = load_manifest(dir / "glasses.json");
  CHECK(glasses.num_parts() == 3);
  CHECK(glasses.num_convexes() == 4);
  CHECK(glasses.discrete_states(1).size() == 2);
}

TEST_CASE("ArticulatedObject requires exactly one fixed root") {
  const TriMesh box = box_mesh({0, 0, 0}, {1, 1, 1}, 1);
  Part a{"a", {box}, Joint::fixed()}, b{"b", {box}, Joint::fixed()};
  CHECK_THROWS_AS(ArticulatedObject({a, b}, {}), ValidationError);
  Part c{"c", {box}, Joint::revolute(Vec3::UnitZ(), Vec3::Zero(), 0, 1)};
  CHECK_NOTHROW(ArticulatedObject({a, c}, {}));
  CHECK_THROWS_AS(ArticulatedObject({a, c}, {{"s", {{"nope", 0.0}}}}), ValidationError);
}

TEST_CASE("sample_surface: membership, area weighting, determinism") {
  Points v(3, 3);
  v << 0, 0, 0, 1, 0, 0, 0, 1, 0;
  Faces f(1, 3);
  f << 0, 1, 2;
  const TriMesh tri(v, f);
  const SurfaceSamples s = sample_surface(tri, 1000, 1);
  for (int i = 0; i < 1000; ++i) {
    CHECK(s.points(i, 2) == 0.0);
    CHECK(s.points(i, 0) >= 0.0);
    CHECK(s.points(i, 1) >= 0.0);
    CHECK(s.points(i, 0) + s.points(i, 1) <= 1.0 + 1e-12);
  }

  // areas 1 and 3
  Points v2(6, 3);
  v2 << 0, 0, 0, 2, 0, 0, 0, 1, 0, 10, 0, 0, 13, 0, 0, 10, 2, 0;
  Faces f2(2, 3);
  f2 << 0, 1, 2, 3, 4, 5;
  const TriMesh two(v2, f2);
  const SurfaceSamples s2 = sample_surface(two, 10000, 2);
  const double frac = static_cast<double>(std::count(s2.face.begin(), s2.face.end(), 1)) / 10000.0;
  CHECK(frac == doctest::Approx(0.75).epsilon(0.04));
  CHECK(std::abs(frac - 0.75) < 0.03);

  const SurfaceSamples again = sample_surface(two, 10000, 2);
  CHECK(again.points == s2.points);

  const TriMesh box = box_mesh({0, 0, 0}, {1, 2, 3}, 2);
  const SurfaceSamples sb = sample_surface(box, 500, 3);
  for (int i = 0; i < 500; ++i) CHECK(point_mesh_distance(sb.points.row(i).transpose(), box) < 1e-9);

  CHECK_THROWS_AS(sample_surface(TriMesh(Points::Zero(3, 3), Faces(0, 3)), 5, 1), ValidationError);
}

TEST_CASE("kd-tree nearest matches brute force") {
  const Points p = random_points(500, 11);
  const Points q = random_points(200, 12);
  const KdTree tree(p);
  for (int i = 0; i < q.rows(); ++i) {
    int best = 0;
    double bd = 1e300;
    for (int k = 0; k < p.rows(); ++k) {
      const double d = (p.row(k) - q.row(i)).squaredNorm();
      if (d < bd) bd = d, best = k;
    }
    const auto hit = tree.nearest(q.row(i).transpose());
    CHECK(hit.index == best);
    CHECK(hit.squared_distance == bd);
  }
}

TEST_CASE("linear_sum_assignment is optimal on small instances") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Eigen::MatrixXd cost = random_matrix(4, 6, seed).cwiseAbs();
    const auto a = linear_sum_assignment(cost);
    double got = 0.0;
    for (int i = 0; i < 4; ++i) got += cost(i, a[i]);
    std::vector<int> cols{0, 1, 2, 3, 4, 5};
    double best = 1e300;
    do {
      double c = 0.0;
      for (int i = 0; i < 4; ++i) c += cost(i, cols[i]);
      best = std::min(best, c);
    } while (std::next_permutation(cols.begin(), cols.end()));
    CHECK(got == doctest::Approx(best).epsilon(1e-12));
    std::vector<int> sorted = a;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
  }
}

TEST_CASE("watertight check") {
  const TriMesh box = box_mesh({0, 0, 0}, {1, 2, 3}, 3);
  CHECK(box.is_watertight());
  CHECK(box.num_vertices() == 56);
  Faces open = box.faces().topRows(box.num_faces() - 1);
  CHECK_FALSE(TriMesh(box.vertices(), open).is_watertight());
  Faces flipped = box.faces();
  std::swap(flipped(0, 1), flipped(0, 2));
  CHECK_FALSE(TriMesh(box.vertices(), flipped).is_watertight());
  CHECK_FALSE(TriMesh().is_watertight());
}
