#include "artdeform/cage.hpp"

#include "artdeform/assignment.hpp"
#include "artdeform/error.hpp"
#include "artdeform/log.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <numeric>
#include <array>
#include <sstream>

namespace artdeform {

CageTemplate CageTemplate::icosphere() {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                         {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  const std::vector<std::array<int, 3>> ico = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};

  std::map<std::pair<int, int>, int> midpoints;
  auto midpoint = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    if (auto it = midpoints.find(key); it != midpoints.end()) return it->second;
    v.push_back((v[a] + v[b]).normalized());
    const int id = static_cast<int>(v.size()) - 1;
    midpoints.emplace(key, id);
    return id;
  };
  std::vector<std::array<int, 3>> faces;
  for (const auto& f : ico) {
    const int a = midpoint(f[0], f[1]), b = midpoint(f[1], f[2]), c = midpoint(f[2], f[0]);
    faces.push_back({f[0], a, c});
    faces.push_back({f[1], b, a});
    faces.push_back({f[2], c, b});
    faces.push_back({a, b, c});
  }

  Points pts(v.size(), 3);
  for (std::size_t i = 0; i < v.size(); ++i) pts.row(i) = v[i].transpose();
  Faces fs(faces.size(), 3);
  for (std::size_t i = 0; i < faces.size(); ++i) {
    const Vec3 a = v[faces[i][0]], b = v[faces[i][1]], c = v[faces[i][2]];
    if ((b - a).cross(c - a).dot(a + b + c) < 0) std::swap(faces[i][1], faces[i][2]);
    fs.row(i) << faces[i][0], faces[i][1], faces[i][2];
  }
  return CageTemplate{TriMesh(std::move(pts), std::move(fs))};
}

Cage build_cage(const TriMesh& convex, const CageTemplate& tmpl, double epsilon) {
  if (convex.empty()) throw ValidationError("build_cage: empty convex");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ValidationError("build_cage: epsilon must lie in [0, 1]");

  const Vec3 center = convex.centroid();
  double radius = 0.0;
  for (int i = 0; i < convex.num_vertices(); ++i) radius = std::max(radius, (convex.vertex(i) - center).norm());
  if (!(radius > 0.0)) throw ValidationError("build_cage: convex collapses to a point");

  Points start = tmpl.mesh.vertices() * (kTemplateInflation * radius);
  start.rowwise() += center.transpose();

  Cage cage{TriMesh(retract_to_convex(convex, start, epsilon), tmpl.mesh.faces()), {}};
  cage.phi = mean_value_coordinates(convex.vertices(), cage.mesh);
  return cage;
}

Points retract_to_convex(const TriMesh& convex, const Points& start, double epsilon) {
  if (convex.empty()) throw ValidationError("retract_to_convex: empty convex");
  const int nt = static_cast<int>(start.rows());

  // Assignment targets: the convex vertices, padded with nearest-vertex duplicates when
  // the convex has fewer vertices than the template.
  std::vector<int> target_vertex(convex.num_vertices());
  std::iota(target_vertex.begin(), target_vertex.end(), 0);
  if (convex.num_vertices() < nt) {
    log_warning("build_cage: convex has " + std::to_string(convex.num_vertices()) + " vertices, fewer than the " +
                std::to_string(nt) + "-vertex template; padding assignment targets with nearest-vertex duplicates");
    for (int t = 0; t < nt; ++t) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int i = 0; i < convex.num_vertices(); ++i) {
        const double d = (convex.vertex(i) - start.row(t).transpose()).squaredNorm();
        if (d < best_d) best_d = d, best = i;
      }
      target_vertex.push_back(best);
    }
  }

  Eigen::MatrixXd cost(nt, static_cast<Eigen::Index>(target_vertex.size()));
  for (int t = 0; t < nt; ++t)
    for (std::size_t j = 0; j < target_vertex.size(); ++j)
      cost(t, j) = (convex.vertex(target_vertex[j]) - start.row(t).transpose()).norm();
  const std::vector<int> match = linear_sum_assignment(cost);

  Points cage_vertices(nt, 3);
  for (int t = 0; t < nt; ++t) {
    const Vec3 vt = start.row(t).transpose();
    const Vec3 m = convex.vertex(target_vertex[match[t]]);
    cage_vertices.row(t) = (vt + (1.0 - epsilon) * (m - vt)).transpose();
  }
  return cage_vertices;
}

Eigen::VectorXd mean_value_coordinates(const Vec3& p, const TriMesh& cage) {
  constexpr double kEps = 1e-12;
  const int n = cage.num_vertices();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  std::vector<double> d(n);
  std::vector<Vec3> u(n);
  for (int j = 0; j < n; ++j) {
    const Vec3 diff = cage.vertex(j) - p;
    d[j] = diff.norm();
    if (d[j] < kEps) {
      w[j] = 1.0;
      return w;
    }
    u[j] = diff / d[j];
  }

  const auto& faces = cage.faces();
  for (int f = 0; f < faces.rows(); ++f) {
    const int idx[3] = {faces(f, 0), faces(f, 1), faces(f, 2)};
    double theta[3], c[3], s[3];
    for (int i = 0; i < 3; ++i) {
      const double l = (u[idx[(i + 1) % 3]] - u[idx[(i + 2) % 3]]).norm();
      theta[i] = 2.0 * std::asin(std::clamp(l / 2.0, -1.0, 1.0));
    }
    const double h = (theta[0] + theta[1] + theta[2]) / 2.0;
    if (std::numbers::pi - h < 1e-10) {
      // p lies inside this triangle: fall back to its 2-d barycentric coordinates.
      w.setZero();
      for (int i = 0; i < 3; ++i) w[idx[i]] = std::sin(theta[i]) * d[idx[(i + 2) % 3]] * d[idx[(i + 1) % 3]];
      return w / w.sum();
    }
    Mat3 m;
    m << u[idx[0]], u[idx[1]], u[idx[2]];
    const double sign = m.determinant() < 0 ? -1.0 : 1.0;
    bool degenerate = false;
    for (int i = 0; i < 3; ++i) {
      c[i] = 2.0 * std::sin(h) * std::sin(h - theta[i]) / (std::sin(theta[(i + 1) % 3]) * std::sin(theta[(i + 2) % 3])) -
             1.0;
      s[i] = sign * std::sqrt(std::max(0.0, 1.0 - c[i] * c[i]));
      if (std::abs(s[i]) <= 1e-10) degenerate = true;
    }
    // p is coplanar with this face but outside it: the face contributes nothing.
    if (degenerate) continue;
    for (int i = 0; i < 3; ++i) {
      const int ip = (i + 1) % 3, im = (i + 2) % 3;
      w[idx[i]] += (theta[i] - c[ip] * theta[im] - c[im] * theta[ip]) / (d[idx[i]] * std::sin(theta[ip]) * s[im]);
    }
  }
  const double total = w.sum();
  if (!std::isfinite(total) || std::abs(total) < 1e-300)
    throw NumericError("mean_value_coordinates: weights do not normalize");
  return w / total;
}

Eigen::MatrixXd mean_value_coordinates(const Points& points, const TriMesh& cage) {
  Eigen::MatrixXd phi(points.rows(), cage.num_vertices());
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    phi.row(i) = mean_value_coordinates(Vec3(points.row(i).transpose()), cage).transpose();
  return phi;
}

Points apply_cage_deform(const Cage& cage, const Points& cage_offsets) {
  if (cage_offsets.rows() != cage.phi.cols())
    throw ShapeError("apply_cage_deform: expected " + std::to_string(cage.phi.cols()) + " cage offsets, got " +
                     std::to_string(cage_offsets.rows()));
  return cage.phi * cage_offsets;
}

Points PartWeights::convex_offsets(int j, const Points& stacked_cage_offsets) const {
  if (stacked_cage_offsets.rows() != total_cage_vertices) throw ShapeError("convex_offsets: stacked offset rows mismatch");
  return weights.at(j) * stacked_cage_offsets;
}

PartWeights block_weights(const std::vector<Cage>& cages) {
  PartWeights pw;
  for (const auto& c : cages) {
    pw.cage_offset.push_back(pw.total_cage_vertices);
    pw.total_cage_vertices += c.num_cage_vertices();
  }
  for (std::size_t j = 0; j < cages.size(); ++j) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(cages[j].phi.rows(), pw.total_cage_vertices);
    w.middleCols(pw.cage_offset[j], cages[j].num_cage_vertices()) = cages[j].phi;
    pw.weights.push_back(std::move(w));
  }
  return pw;
}

namespace {

struct Box {
  Vec3 lo, hi;
  double distance(const Vec3& p) const { return (p - p.cwiseMax(lo).cwiseMin(hi)).norm(); }
};

Box bounds(const TriMesh& m) {
  return {m.vertices().colwise().minCoeff().transpose(), m.vertices().colwise().maxCoeff().transpose()};
}

}  // namespace

PartWeights smooth_weights(const std::vector<TriMesh>& convexes, const std::vector<Cage>& cages, double blend_radius) {
  if (convexes.size() != cages.size()) throw ShapeError("smooth_weights: convex/cage count mismatch");
  PartWeights pw = block_weights(cages);
  if (!(blend_radius > 0.0) || convexes.size() < 2) return pw;

  std::vector<Box> boxes;
  for (const auto& c : convexes) boxes.push_back(bounds(c));

  for (std::size_t a = 0; a < convexes.size(); ++a) {
    if (convexes[a].num_vertices() != cages[a].phi.rows()) throw ShapeError("smooth_weights: phi rows != convex vertices");
    for (int v = 0; v < convexes[a].num_vertices(); ++v) {
      const Vec3 x = convexes[a].vertex(v);
      Eigen::RowVectorXd row = pw.weights[a].row(v);
      double total = 1.0;
      for (std::size_t b = 0; b < convexes.size(); ++b) {
        if (b == a || boxes[b].distance(x) >= blend_radius) continue;
        const double dist = point_mesh_distance(x, convexes[b]);
        if (dist >= blend_radius) continue;
        const double alpha = 1.0 - dist / blend_radius;
        row.segment(pw.cage_offset[b], cages[b].num_cage_vertices()) +=
            alpha * mean_value_coordinates(x, cages[b].mesh).transpose();
        total += alpha;
      }
      if (total > 1.0) pw.weights[a].row(v) = row / total;
    }
  }
  return pw;
}

double default_blend_radius(const std::vector<TriMesh>& convexes) {
  return 0.05 * merge_meshes(convexes).bbox_diagonal();
}

CageCache::CageCache(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

std::filesystem::path CageCache::entry_path(const TriMesh& convex, double epsilon) const {
  std::ostringstream name;
  name << std::hex << std::setw(16) << std::setfill('0') << convex.content_hash() << "_eps" << std::dec
       << std::setprecision(6) << epsilon << ".json";
  return dir_ / name.str();
}

std::optional<Cage> CageCache::load(const TriMesh& convex, double epsilon) const {
  const auto path = entry_path(convex, epsilon);
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    const auto doc = nlohmann::json::parse(in);
    const auto verts = doc.at("vertices").get<std::vector<std::array<double, 3>>>();
    const auto faces = doc.at("faces").get<std::vector<std::array<int, 3>>>();
    const auto phi = doc.at("phi").get<std::vector<std::vector<double>>>();
    Points v(verts.size(), 3);
    for (std::size_t i = 0; i < verts.size(); ++i) v.row(i) << verts[i][0], verts[i][1], verts[i][2];
    Faces f(faces.size(), 3);
    for (std::size_t i = 0; i < faces.size(); ++i) f.row(i) << faces[i][0], faces[i][1], faces[i][2];
    Eigen::MatrixXd p(phi.size(), verts.size());
    for (std::size_t i = 0; i < phi.size(); ++i) {
      if (phi[i].size() != verts.size()) return std::nullopt;
      for (std::size_t j = 0; j < verts.size(); ++j) p(i, j) = phi[i][j];
    }
    if (p.rows() != convex.num_vertices()) return std::nullopt;
    return Cage{TriMesh(std::move(v), std::move(f)), std::move(p)};
  } catch (const std::exception& e) {
    log_warning("ignoring unreadable cage cache entry " + path.string() + ": " + e.what());
    return std::nullopt;
  }
}

void CageCache::store(const TriMesh& convex, double epsilon, const Cage& cage) const {
  nlohmann::json doc;
  doc["convex_hash"] = convex.content_hash();
  doc["epsilon"] = epsilon;
  auto& v = doc["vertices"] = nlohmann::json::array();
  for (int i = 0; i < cage.mesh.num_vertices(); ++i) v.push_back({cage.mesh.vertices()(i, 0), cage.mesh.vertices()(i, 1), cage.mesh.vertices()(i, 2)});
  auto& f = doc["faces"] = nlohmann::json::array();
  for (int i = 0; i < cage.mesh.num_faces(); ++i) f.push_back({cage.mesh.faces()(i, 0), cage.mesh.faces()(i, 1), cage.mesh.faces()(i, 2)});
  auto& p = doc["phi"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < cage.phi.rows(); ++i) {
    std::vector<double> row(cage.phi.cols());
    for (Eigen::Index j = 0; j < cage.phi.cols(); ++j) row[j] = cage.phi(i, j);
    p.push_back(row);
  }
  const auto path = entry_path(convex, epsilon);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write cage cache entry " + path.string());
  out << doc.dump();
}

Cage CageCache::get_or_build(const TriMesh& convex, const CageTemplate& tmpl, double epsilon) {
  if (auto cached = load(convex, epsilon)) {
    ++hits_;
    return *cached;
  }
  ++misses_;
  Cage cage = build_cage(convex, tmpl, epsilon);
  store(convex, epsilon, cage);
  return cage;
}

}  // namespace artdeform
