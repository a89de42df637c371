#include "artdeform/mesh.hpp"

#include "artdeform/error.hpp"
#include "artdeform/log.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <string>

namespace artdeform {

namespace {

std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}

LogSink& log_sink() {
  static LogSink sink = [](LogLevel level, const std::string& message) {
    if (level == LogLevel::Warning) std::cerr << "warning: " << message << '\n';
  };
  return sink;
}

}  // namespace

void set_log_sink(LogSink sink) {
  std::lock_guard lock(log_mutex());
  log_sink() = std::move(sink);
}

void log(LogLevel level, const std::string& message) {
  std::lock_guard lock(log_mutex());
  if (log_sink()) log_sink()(level, message);
}

TriMesh::TriMesh(Points vertices, Faces faces) : vertices_(std::move(vertices)), faces_(std::move(faces)) {
  if (!vertices_.allFinite()) throw ValidationError("mesh has non-finite vertex coordinates");
  const int n = num_vertices();
  for (int f = 0; f < faces_.rows(); ++f) {
    const int a = faces_(f, 0), b = faces_(f, 1), c = faces_(f, 2);
    if (a < 0 || b < 0 || c < 0 || a >= n || b >= n || c >= n)
      throw ValidationError("face " + std::to_string(f) + " index out of range (vertex count " +
                            std::to_string(n) + ")");
    if (a == b || b == c || a == c)
      throw ValidationError("face " + std::to_string(f) + " is degenerate (repeated vertex index)");
  }
}

TriMesh TriMesh::with_vertices(Points vertices) const {
  if (vertices.rows() != vertices_.rows())
    throw ShapeError("with_vertices: expected " + std::to_string(vertices_.rows()) + " rows, got " +
                     std::to_string(vertices.rows()));
  return TriMesh(std::move(vertices), faces_);
}

Points TriMesh::face_normals() const {
  Points normals(faces_.rows(), 3);
  for (int f = 0; f < faces_.rows(); ++f) {
    const Vec3 a = vertex(faces_(f, 0)), b = vertex(faces_(f, 1)), c = vertex(faces_(f, 2));
    const Vec3 n = (b - a).cross(c - a);
    const double len = n.norm();
    if (!(len > 0.0)) throw ValidationError("face " + std::to_string(f) + " has zero area; normal undefined");
    normals.row(f) = (n / len).transpose();
  }
  return normals;
}

Eigen::VectorXd TriMesh::face_areas() const {
  Eigen::VectorXd areas(faces_.rows());
  for (int f = 0; f < faces_.rows(); ++f) {
    const Vec3 a = vertex(faces_(f, 0)), b = vertex(faces_(f, 1)), c = vertex(faces_(f, 2));
    areas[f] = 0.5 * (b - a).cross(c - a).norm();
  }
  return areas;
}

double TriMesh::total_area() const { return face_areas().sum(); }

Vec3 TriMesh::centroid() const {
  if (empty()) return Vec3::Zero();
  return vertices_.colwise().mean().transpose();
}

double TriMesh::bbox_diagonal() const {
  if (empty()) return 0.0;
  return (vertices_.colwise().maxCoeff() - vertices_.colwise().minCoeff()).norm();
}

bool TriMesh::is_watertight() const {
  if (faces_.rows() == 0) return false;
  std::vector<std::pair<int, int>> edges;
  edges.reserve(3 * faces_.rows());
  for (Eigen::Index f = 0; f < faces_.rows(); ++f)
    for (int k = 0; k < 3; ++k) edges.emplace_back(faces_(f, k), faces_(f, (k + 1) % 3));
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) return false;
  for (const auto& [a, b] : edges)
    if (!std::binary_search(edges.begin(), edges.end(), std::pair{b, a})) return false;
  return true;
}

std::uint64_t TriMesh::content_hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  const std::int64_t nv = vertices_.rows(), nf = faces_.rows();
  mix(&nv, sizeof nv);
  mix(&nf, sizeof nf);
  mix(vertices_.data(), sizeof(double) * vertices_.size());
  mix(faces_.data(), sizeof(int) * faces_.size());
  return h;
}

TriMesh merge_meshes(const std::vector<TriMesh>& meshes) {
  Eigen::Index nv = 0, nf = 0;
  for (const auto& m : meshes) {
    nv += m.num_vertices();
    nf += m.num_faces();
  }
  Points v(nv, 3);
  Faces f(nf, 3);
  Eigen::Index vo = 0, fo = 0;
  for (const auto& m : meshes) {
    v.middleRows(vo, m.num_vertices()) = m.vertices();
    f.middleRows(fo, m.num_faces()) = m.faces().array() + static_cast<int>(vo);
    vo += m.num_vertices();
    fo += m.num_faces();
  }
  return TriMesh(std::move(v), std::move(f));
}

namespace {

int resolve_index(const std::string& token, int vertex_count, int line) {
  const std::string head = token.substr(0, token.find('/'));
  int idx = 0;
  try {
    std::size_t used = 0;
    idx = std::stoi(head, &used);
    if (used != head.size()) throw std::invalid_argument(head);
  } catch (const std::exception&) {
    throw ParseError("bad face index '" + token + "'", line);
  }
  if (idx == 0) throw ParseError("face index 0 is not valid in OBJ", line);
  const int resolved = idx > 0 ? idx - 1 : vertex_count + idx;
  if (resolved < 0 || resolved >= vertex_count)
    throw ParseError("face index " + std::to_string(idx) + " out of range (" + std::to_string(vertex_count) +
                         " vertices)",
                     line);
  return resolved;
}

}  // namespace

TriMesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open OBJ file " + path.string());

  std::vector<double> coords;
  std::vector<int> tris;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ss >> x >> y >> z)) throw ParseError("vertex record needs three coordinates", line_no);
      if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z))
        throw ParseError("non-finite vertex coordinate", line_no);
      coords.insert(coords.end(), {x, y, z});
    } else if (tag == "f") {
      const int nv = static_cast<int>(coords.size() / 3);
      std::vector<int> poly;
      std::string tok;
      while (ss >> tok) poly.push_back(resolve_index(tok, nv, line_no));
      if (poly.size() < 3) throw ParseError("face record needs at least three vertices", line_no);
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
        const int a = poly[0], b = poly[k], c = poly[k + 1];
        if (a == b || b == c || a == c) throw ValidationError("degenerate face at line " + std::to_string(line_no));
        tris.insert(tris.end(), {a, b, c});
      }
    }
  }

  Points v(static_cast<Eigen::Index>(coords.size() / 3), 3);
  std::copy(coords.begin(), coords.end(), v.data());
  Faces f(static_cast<Eigen::Index>(tris.size() / 3), 3);
  std::copy(tris.begin(), tris.end(), f.data());
  return TriMesh(std::move(v), std::move(f));
}

void save_obj(const TriMesh& mesh, const std::filesystem::path& path) {
  if (mesh.num_faces() == 0) throw ValidationError("refusing to write OBJ without faces: " + path.string());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write OBJ file " + path.string());
  out << std::setprecision(17);
  const auto& v = mesh.vertices();
  for (int i = 0; i < v.rows(); ++i) out << "v " << v(i, 0) << ' ' << v(i, 1) << ' ' << v(i, 2) << '\n';
  const auto& f = mesh.faces();
  for (int i = 0; i < f.rows(); ++i) out << "f " << f(i, 0) + 1 << ' ' << f(i, 1) + 1 << ' ' << f(i, 2) + 1 << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

SurfaceSamples sample_surface(const TriMesh& mesh, int n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("sample_surface: n must be >= 1");
  const Eigen::VectorXd areas = mesh.face_areas();
  const double total = areas.sum();
  if (!(total > 0.0)) throw ValidationError("sample_surface: mesh has zero total area");

  std::vector<double> cdf(areas.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < areas.size(); ++i) cdf[i] = (acc += areas[i]);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  SurfaceSamples s;
  s.points.resize(n, 3);
  s.bary.resize(n, 3);
  s.face.resize(n);
  for (int i = 0; i < n; ++i) {
    const double r = uni(rng) * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), r);
    int f = static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(), cdf.size() - 1));
    while (areas[f] <= 0.0 && f > 0) --f;
    const double r1 = std::sqrt(uni(rng)), r2 = uni(rng);
    const double b0 = 1.0 - r1, b1 = r1 * (1.0 - r2), b2 = r1 * r2;
    s.face[i] = f;
    s.bary.row(i) << b0, b1, b2;
  }
  s.points = evaluate_samples(mesh, s);
  return s;
}

Points evaluate_samples(const TriMesh& mesh, const SurfaceSamples& samples) {
  Points p(samples.face.size(), 3);
  const auto& v = mesh.vertices();
  const auto& f = mesh.faces();
  for (std::size_t i = 0; i < samples.face.size(); ++i) {
    const int fi = samples.face[i];
    if (fi >= f.rows()) throw ShapeError("evaluate_samples: face index beyond mesh");
    p.row(i) = samples.bary(i, 0) * v.row(f(fi, 0)) + samples.bary(i, 1) * v.row(f(fi, 1)) +
               samples.bary(i, 2) * v.row(f(fi, 2));
  }
  return p;
}

bool same_connectivity(const TriMesh& a, const TriMesh& b) {
  return a.num_vertices() == b.num_vertices() && a.faces().rows() == b.faces().rows() && a.faces() == b.faces();
}

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Closest-point classification over the Voronoi regions of the triangle.
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return ap.norm();
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return bp.norm();
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return (p - (a + ab * (d1 / (d1 - d3)))).norm();
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return cp.norm();
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return (p - (a + ac * (d2 / (d2 - d6)))).norm();
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
    return (p - (b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6))))).norm();
  const double denom = 1.0 / (va + vb + vc);
  return (p - (a + ab * (vb * denom) + ac * (vc * denom))).norm();
}

double point_mesh_distance(const Vec3& p, const TriMesh& mesh) {
  double best = std::numeric_limits<double>::infinity();
  const auto& f = mesh.faces();
  for (int i = 0; i < f.rows(); ++i)
    best = std::min(best, point_triangle_distance(p, mesh.vertex(f(i, 0)), mesh.vertex(f(i, 1)), mesh.vertex(f(i, 2))));
  return best;
}

}  // namespace artdeform
