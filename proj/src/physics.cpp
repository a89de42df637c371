#include "artdeform/physics.hpp"

#include "artdeform/error.hpp"
#include "artdeform/log.hpp"
#include "artdeform/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

namespace artdeform {

void SimConfig::validate() const {
  if (n_steps < 1 || n_det < 1) throw ValidationError("SimConfig: n_steps and n_det must be >= 1");
}

void ProjConfig::validate() const {
  if (iters < 0) throw ValidationError("ProjConfig: iters must be >= 0");
  if (!(eps > 0.0)) throw ValidationError("ProjConfig: eps must be > 0");
}

std::string CollisionReport::to_json() const {
  nlohmann::json j;
  j["l_phy"] = l_phy;
  j["l_proj"] = l_proj;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : entries) j["entries"].push_back({{"part", e.part}, {"det", e.det}, {"pene", e.pene}, {"proj", e.proj}});
  return j.dump(2);
}

namespace {

constexpr double kBaryTol = 1e-9;

/// Per-face data shared by the distance and in-face tests so every code path evaluates
/// them with identical arithmetic.
struct FaceFrame {
  Vec3 a, n, e0, e1;
  double d00, d01, d11, denom;
  Vec3 lo, hi;
};

std::vector<FaceFrame> face_frames(const TriMesh& ref) {
  const Points normals = ref.face_normals();
  std::vector<FaceFrame> frames(ref.num_faces());
  for (int f = 0; f < ref.num_faces(); ++f) {
    auto& fr = frames[f];
    const Vec3 a = ref.vertex(ref.faces()(f, 0)), b = ref.vertex(ref.faces()(f, 1)), c = ref.vertex(ref.faces()(f, 2));
    fr.a = a;
    fr.n = normals.row(f).transpose();
    fr.e0 = b - a;
    fr.e1 = c - a;
    fr.d00 = fr.e0.dot(fr.e0);
    fr.d01 = fr.e0.dot(fr.e1);
    fr.d11 = fr.e1.dot(fr.e1);
    fr.denom = fr.d00 * fr.d11 - fr.d01 * fr.d01;
    fr.lo = a.cwiseMin(b).cwiseMin(c);
    fr.hi = a.cwiseMax(b).cwiseMax(c);
  }
  return frames;
}

inline double signed_distance(const Vec3& v, const FaceFrame& f) { return f.n.dot(v - f.a); }

inline int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

inline bool in_face(const Vec3& v, const FaceFrame& f) {
  const Vec3 p = v - f.a;
  const double d20 = p.dot(f.e0), d21 = p.dot(f.e1);
  const double beta = (f.d11 * d20 - f.d01 * d21) / f.denom;
  const double gamma = (f.d00 * d21 - f.d01 * d20) / f.denom;
  const double alpha = 1.0 - beta - gamma;
  auto ok = [](double x) { return x >= -kBaryTol && x <= 1.0 + kBaryTol; };
  return ok(alpha) && ok(beta) && ok(gamma);
}

/// Uniform grid over face bounding boxes.
class FaceGrid {
 public:
  explicit FaceGrid(const std::vector<FaceFrame>& frames) : frames_(frames), stamp_(frames.size(), -1) {
    lo_ = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo_;
    for (const auto& f : frames) lo_ = lo_.cwiseMin(f.lo), hi = hi.cwiseMax(f.hi);
    const Vec3 ext = (hi - lo_).cwiseMax(1e-12);
    const double per_axis = std::max(1.0, std::cbrt(static_cast<double>(frames.size())));
    cell_ = ext.maxCoeff() / per_axis;
    for (int d = 0; d < 3; ++d) dims_[d] = std::max(1, std::min(256, static_cast<int>(std::ceil(ext[d] / cell_))));
    cells_.resize(static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2]);
    for (std::size_t f = 0; f < frames.size(); ++f) {
      const auto a = cell_of(frames[f].lo), b = cell_of(frames[f].hi);
      for (int x = a[0]; x <= b[0]; ++x)
        for (int y = a[1]; y <= b[1]; ++y)
          for (int z = a[2]; z <= b[2]; ++z) cells_[index(x, y, z)].push_back(static_cast<int>(f));
    }
  }

  /// Faces whose bounding box, grown by r, contains p. Appends to out.
  void query(const Vec3& p, double r, std::vector<int>& out) {
    ++query_id_;
    const auto a = cell_of(p - Vec3::Constant(r)), b = cell_of(p + Vec3::Constant(r));
    for (int x = a[0]; x <= b[0]; ++x)
      for (int y = a[1]; y <= b[1]; ++y)
        for (int z = a[2]; z <= b[2]; ++z)
          for (int f : cells_[index(x, y, z)]) {
            if (stamp_[f] == query_id_) continue;
            stamp_[f] = query_id_;
            const auto& fr = frames_[f];
            if ((p.array() >= fr.lo.array() - r).all() && (p.array() <= fr.hi.array() + r).all()) out.push_back(f);
          }
  }

 private:
  std::array<int, 3> cell_of(const Vec3& p) const {
    std::array<int, 3> c{};
    for (int d = 0; d < 3; ++d) {
      const double t = std::floor((p[d] - lo_[d]) / cell_);
      c[d] = static_cast<int>(std::clamp(t, 0.0, static_cast<double>(dims_[d] - 1)));
    }
    return c;
  }
  std::size_t index(int x, int y, int z) const {
    return (static_cast<std::size_t>(x) * dims_[1] + y) * dims_[2] + z;
  }

  const std::vector<FaceFrame>& frames_;
  Vec3 lo_;
  double cell_ = 1.0;
  std::array<int, 3> dims_{1, 1, 1};
  std::vector<std::vector<int>> cells_;
  std::vector<long> stamp_;
  long query_id_ = 0;
};

}  // namespace

Eigen::MatrixXd vertex_face_distance(const Points& V, const TriMesh& ref) {
  const auto frames = face_frames(ref);
  Eigen::MatrixXd D(V.rows(), ref.num_faces());
  for (Eigen::Index v = 0; v < V.rows(); ++v)
    for (int f = 0; f < ref.num_faces(); ++f) D(v, f) = signed_distance(V.row(v).transpose(), frames[f]);
  return D;
}

BoolMatrix vertices_in_faces(const Points& V, const TriMesh& ref) {
  const auto frames = face_frames(ref);
  BoolMatrix C(V.rows(), ref.num_faces());
  for (Eigen::Index v = 0; v < V.rows(); ++v)
    for (int f = 0; f < ref.num_faces(); ++f) C(v, f) = in_face(V.row(v).transpose(), frames[f]);
  return C;
}

SimulationResult single_simulation(const TriMesh& moving, const TriMesh& ref, const Joint& joint, int n_steps,
                                   bool gradients) {
  if (n_steps < 1) throw ValidationError("single_simulation: n_steps must be >= 1");
  SimulationResult out;
  if (gradients) {
    out.grad_pene = Points::Zero(moving.num_vertices(), 3);
    out.grad_proj = Points::Zero(moving.num_vertices(), 3);
  }
  if (!joint.moves()) return out;
  if (ref.num_faces() == 0 || moving.num_vertices() == 0) {
    log_warning("single_simulation: empty mesh, reporting zero penetration");
    return out;
  }
  const auto frames = face_frames(ref);
  FaceGrid grid(frames);
  double scale = 0.0;
  for (const auto& f : frames) scale = std::max(scale, (f.hi - f.lo).maxCoeff());
  const double margin = 1e-6 * scale + 1e-12;

  const Points& rest = moving.vertices();
  const double entries = static_cast<double>(moving.num_vertices()) * ref.num_faces();
  const double w = 1.0 / (entries * n_steps);
  Points prev = rest;
  Mat3 prev_rot = Mat3::Identity();
  std::vector<int> candidates;
  double pene_total = 0.0, proj_total = 0.0;
  for (int t = 1; t <= n_steps; ++t) {
    const double s = joint.lower + (joint.upper - joint.lower) * static_cast<double>(t) / n_steps;
    const RigidTransform tf = joint_transform(joint, s);
    const Points cur = tf.apply(rest);
    double pene = 0.0, proj = 0.0;
    for (Eigen::Index v = 0; v < cur.rows(); ++v) {
      const Vec3 x = cur.row(v).transpose(), xp = prev.row(v).transpose();
      const Vec3 dv = x - xp;
      candidates.clear();
      grid.query(x, dv.norm() + margin, candidates);
      std::sort(candidates.begin(), candidates.end());
      for (int f : candidates) {
        const auto& fr = frames[f];
        const double d = signed_distance(x, fr);
        if (sign_of(d) == sign_of(signed_distance(xp, fr)) || !in_face(x, fr)) continue;
        // C * D * S is |D| for masked entries; the clamp at zero never binds.
        pene += std::abs(d);
        proj += d * dv.dot(fr.n);
        if (gradients) {
          out.grad_pene.row(v) += (w * sign_of(d)) * (tf.rotation.transpose() * fr.n).transpose();
          out.grad_proj.row(v) += (w * d) * ((tf.rotation - prev_rot).transpose() * fr.n).transpose();
        }
      }
    }
    pene_total += pene / entries;
    proj_total += proj / entries;
    prev = cur;
    prev_rot = tf.rotation;
  }
  out.pene = pene_total / n_steps;
  out.proj = proj_total / n_steps;
  return out;
}

ArticulationState sample_reference_state(const ArticulatedObject& object, int moving, int det, std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(moving), static_cast<std::uint32_t>(det)};
  std::mt19937_64 rng(seq);
  ArticulationState state(object.num_parts(), 0.0);
  for (int p = 0; p < object.num_parts(); ++p) {
    const auto& j = object.parts()[p].joint;
    if (p == moving || !j.moves()) continue;
    const auto discrete = object.discrete_states(p);
    if (!discrete.empty()) {
      state[p] = discrete[std::uniform_int_distribution<std::size_t>(0, discrete.size() - 1)(rng)];
    } else {
      state[p] = std::uniform_real_distribution<double>(j.lower, j.upper)(rng);
    }
  }
  return state;
}

CollisionReport physics_losses(const ArticulatedObject& object, const SimConfig& cfg, PhysicsGradients* grads) {
  cfg.validate();
  const int np = object.num_parts();
  std::vector<TriMesh> rest;
  for (const auto& p : object.parts()) rest.push_back(p.mesh());
  std::vector<SimulationResult> results(static_cast<std::size_t>(np) * cfg.n_det);
  parallel_for(static_cast<int>(results.size()), cfg.jobs, [&](int job) {
    const int p = job / cfg.n_det, det = job % cfg.n_det;
    const auto& joint = object.parts()[p].joint;
    if (!joint.moves()) {
      if (grads) results[job].grad_pene = results[job].grad_proj = Points::Zero(rest[p].num_vertices(), 3);
      return;
    }
    const ArticulationState state = sample_reference_state(object, p, det, cfg.seed);
    std::vector<TriMesh> others;
    for (int q = 0; q < np; ++q)
      if (q != p) others.push_back(articulate(rest[q], state[q], object.parts()[q].joint));
    results[job] = single_simulation(rest[p], merge_meshes(others), joint, cfg.n_steps, grads != nullptr);
  });

  CollisionReport report;
  const double inv = 1.0 / static_cast<double>(results.size());
  if (grads) {
    grads->pene.clear();
    grads->proj.clear();
    for (int p = 0; p < np; ++p) {
      grads->pene.push_back(Points::Zero(rest[p].num_vertices(), 3));
      grads->proj.push_back(Points::Zero(rest[p].num_vertices(), 3));
    }
  }
  for (std::size_t job = 0; job < results.size(); ++job) {
    const int p = static_cast<int>(job) / cfg.n_det, det = static_cast<int>(job) % cfg.n_det;
    const auto& r = results[job];
    report.entries.push_back({p, det, r.pene, r.proj});
    report.l_phy += r.pene;
    report.l_proj += r.proj;
    if (grads) {
      grads->pene[p] += inv * r.grad_pene;
      grads->proj[p] += inv * r.grad_proj;
    }
  }
  report.l_phy *= inv;
  report.l_proj *= inv;
  return report;
}

Eigen::VectorXd grad_proj_wrt_z(const ObjectDeformer& deformer, const Eigen::VectorXd& theta, const SimConfig& cfg) {
  PhysicsGradients g;
  physics_losses(deformer.deform(theta), cfg, &g);
  return deformer.pull_back(g.proj);
}

CorrectionResult correct_shape(const ObjectDeformer& deformer, const Eigen::VectorXd& z, const ProjConfig& proj,
                               const SimConfig& sim) {
  proj.validate();
  CorrectionResult out;
  out.z = z;
  for (int it = 0; it < proj.iters; ++it) {
    PhysicsGradients g;
    const CollisionReport report = physics_losses(deformer.deform(out.z), sim, &g);
    if (it == 0) out.before = report;
    const Eigen::VectorXd grad = deformer.pull_back(g.proj);
    if (!grad.allFinite()) throw NumericError("correct_shape: non-finite L_proj gradient at iteration " + std::to_string(it));
    out.z -= proj.eps * grad;
  }
  out.after = physics_losses(deformer.deform(out.z), sim);
  if (proj.iters == 0) out.before = out.after;
  return out;
}

}  // namespace artdeform
