#include "artdeform/pipeline.hpp"

#include "artdeform/chamfer.hpp"
#include "artdeform/error.hpp"
#include "artdeform/fixtures.hpp"
#include "artdeform/gmm.hpp"
#include "artdeform/log.hpp"
#include "artdeform/metrics.hpp"
#include "artdeform/parallel.hpp"
#include "artdeform/sync.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace artdeform {

namespace fs = std::filesystem;
using nlohmann::json;

DatasetManifest DatasetManifest::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset manifest " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError("dataset manifest " + path.string() + ": " + e.what(), 0);
  }
  DatasetManifest d;
  try {
    d.role = j.at("role").get<std::string>();
    for (const auto& o : j.at("objects")) {
      fs::path p = o.get<std::string>();
      if (p.is_relative()) p = path.parent_path() / p;
      d.objects.push_back(p.lexically_normal());
    }
  } catch (const json::exception& e) {
    throw ValidationError("dataset manifest " + path.string() + ": " + e.what());
  }
  if (d.role != "pretrain" && d.role != "finetune-train" && d.role != "test")
    throw ValidationError("dataset manifest: unknown role '" + d.role + "'");
  if (d.objects.empty()) throw ValidationError("dataset manifest lists no objects");
  return d;
}

std::vector<ArticulatedObject> DatasetManifest::load_objects() const {
  std::vector<ArticulatedObject> out;
  for (const auto& p : objects) out.push_back(load_manifest(p));
  return out;
}

PipelineConfig PipelineConfig::profile(const std::string& name) {
  PipelineConfig c;
  if (name == "paper") {
    c.sim.n_steps = 100;
    c.sim.n_det = 100;
    c.fit.chamfer_samples = 4096;
  } else if (name == "desk") {
    c.sim.n_steps = 20;
    c.sim.n_det = 10;
    c.fit.chamfer_samples = 512;
    c.eval_points = 512;
  } else {
    throw ValidationError("unknown profile '" + name + "' (expected paper or desk)");
  }
  return c;
}

json PipelineConfig::to_json() const {
  return {{"num_bases", num_bases},
          {"samples_per_reference", samples_per_reference},
          {"shots", shots},
          {"sync_iters", sync_iters},
          {"gmm_components", gmm_components},
          {"fit",
           {{"lambda_orth", fit.lambda_orth},
            {"lambda_sp", fit.lambda_sp},
            {"lambda_phy", fit.lambda_phy},
            {"chamfer_samples", fit.chamfer_samples},
            {"outer_iters", fit.outer_iters},
            {"coeff_rounds", fit.coeff_rounds},
            {"coeff_tol", fit.coeff_tol},
            {"rel_tol", fit.rel_tol},
            {"reg_steps", fit.reg_steps},
            {"init_scale", fit.init_scale}}},
          {"sim", {{"n_steps", sim.n_steps}, {"n_det", sim.n_det}}},
          {"train_proj", {{"iters", train_proj.iters}, {"eps", train_proj.eps}}},
          {"test_proj", {{"iters", test_proj.iters}, {"eps", test_proj.eps}}},
          {"smooth", smooth},
          {"blend_fraction", blend_fraction},
          {"cage_epsilon", cage_epsilon},
          {"eval_points", eval_points},
          {"jsd_resolution", jsd_resolution},
          {"seed", seed}};
}

void PipelineConfig::apply_json(const json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  const json known = to_json();
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ValidationError("unknown config key '" + key + "'");
    if (known[key].is_object()) {
      if (!value.is_object()) throw ValidationError("config key '" + key + "' must be an object");
      for (const auto& [sub, v] : value.items())
        if (!known[key].contains(sub)) throw ValidationError("unknown config key '" + key + "." + sub + "'");
    }
  }
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    auto get2 = [&](const char* key, const char* sub, auto& field) {
      if (j.contains(key) && j.at(key).contains(sub)) field = j.at(key).at(sub).get<std::decay_t<decltype(field)>>();
    };
    get("num_bases", num_bases);
    get("samples_per_reference", samples_per_reference);
    get("shots", shots);
    get("sync_iters", sync_iters);
    get("gmm_components", gmm_components);
    get2("fit", "lambda_orth", fit.lambda_orth);
    get2("fit", "lambda_sp", fit.lambda_sp);
    get2("fit", "lambda_phy", fit.lambda_phy);
    get2("fit", "chamfer_samples", fit.chamfer_samples);
    get2("fit", "outer_iters", fit.outer_iters);
    get2("fit", "coeff_rounds", fit.coeff_rounds);
    get2("fit", "coeff_tol", fit.coeff_tol);
    get2("fit", "rel_tol", fit.rel_tol);
    get2("fit", "reg_steps", fit.reg_steps);
    get2("fit", "init_scale", fit.init_scale);
    get2("sim", "n_steps", sim.n_steps);
    get2("sim", "n_det", sim.n_det);
    get2("train_proj", "iters", train_proj.iters);
    get2("train_proj", "eps", train_proj.eps);
    get2("test_proj", "iters", test_proj.iters);
    get2("test_proj", "eps", test_proj.eps);
    get("smooth", smooth);
    get("blend_fraction", blend_fraction);
    get("cage_epsilon", cage_epsilon);
    get("eval_points", eval_points);
    get("jsd_resolution", jsd_resolution);
    get("seed", seed);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  validate();
}

void PipelineConfig::validate() const {
  fit.validate();
  sim.validate();
  train_proj.validate();
  test_proj.validate();
  if (num_bases < 1) throw ValidationError("num_bases must be >= 1");
  if (samples_per_reference < 0 || shots < 2 || sync_iters < 0 || gmm_components < 1)
    throw ValidationError("config counts out of range");
  if (!(cage_epsilon > 0.0 && cage_epsilon <= 1.0)) throw ValidationError("cage_epsilon must be in (0, 1]");
  if (eval_points < 1 || jsd_resolution < 2 || jobs < 1) throw ValidationError("config counts out of range");
}

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  return x;
}

std::vector<TriMesh> flat_convexes(const ArticulatedObject& o) {
  std::vector<TriMesh> out;
  for (const auto& p : o.parts())
    for (const auto& c : p.convexes) out.push_back(c);
  return out;
}

std::vector<std::pair<int, int>> convex_slots(const ArticulatedObject& o) {
  std::vector<std::pair<int, int>> out;
  for (int p = 0; p < o.num_parts(); ++p)
    for (int j = 0; j < static_cast<int>(o.parts()[p].convexes.size()); ++j) out.emplace_back(p, j);
  return out;
}

void check_correspondence(const std::vector<ArticulatedObject>& objects, const std::vector<fs::path>& paths) {
  for (std::size_t i = 1; i < objects.size(); ++i) {
    const auto& a = objects.front();
    const auto& b = objects[i];
    if (a.num_parts() != b.num_parts())
      throw ValidationError("object " + paths[i].string() + " has " + std::to_string(b.num_parts()) +
                            " parts, expected " + std::to_string(a.num_parts()));
    for (int p = 0; p < a.num_parts(); ++p)
      if (a.parts()[p].convexes.size() != b.parts()[p].convexes.size())
        throw ValidationError("object " + paths[i].string() + " part " + a.parts()[p].name + ": convex " +
                              std::to_string(std::min(a.parts()[p].convexes.size(), b.parts()[p].convexes.size())) +
                              " missing (convex counts " + std::to_string(a.parts()[p].convexes.size()) + " vs " +
                              std::to_string(b.parts()[p].convexes.size()) + ")");
    if (!same_kinematic_chain(a, b)) throw ValidationError("object " + paths[i].string() + ": kinematic chain mismatch");
  }
}

double cage_radius(const Cage& c) {
  const Vec3 center = c.mesh.centroid();
  return (c.mesh.vertices().rowwise() - center.transpose()).rowwise().norm().maxCoeff();
}

std::vector<Cage> build_cages(const std::vector<TriMesh>& convexes, double eps, int jobs) {
  const CageTemplate tmpl = CageTemplate::icosphere();
  std::vector<Cage> cages(convexes.size());
  parallel_for(static_cast<int>(convexes.size()), jobs, [&](int m) { cages[m] = build_cage(convexes[m], tmpl, eps); });
  return cages;
}

std::vector<std::vector<ConvexPair>> make_pairs(const std::vector<TriMesh>& source, const std::vector<Cage>& cages,
                                                const std::vector<std::vector<TriMesh>>& targets, const FitConfig& fit,
                                                std::uint64_t seed) {
  std::vector<std::vector<ConvexPair>> pairs(source.size());
  for (std::size_t m = 0; m < source.size(); ++m)
    for (std::size_t i = 0; i < targets.size(); ++i)
      pairs[m].push_back(prepare_pair(cages[m], source[m], targets[i][m], fit.chamfer_samples, mix(mix(seed, m), i)));
  return pairs;
}

Points normalized(const Points& p) {
  const Eigen::RowVector3d c = p.colwise().mean();
  Points q = p.rowwise() - c;
  const double r = q.rowwise().norm().maxCoeff();
  return r > 0 ? Points(q / r) : q;
}

/// Basis initialization for convex m of a new reference from the closest pretrained cage.
BasisSet transfer_bases(const Model& pre, const Cage& cage) {
  const Points mine = normalized(cage.mesh.vertices());
  const ConvexModel* best = nullptr;
  double best_cd = 0.0;
  for (const auto& r : pre.references)
    for (const auto& c : r.convexes) {
      if (c.cage.num_cage_vertices() != cage.num_cage_vertices()) continue;
      const double cd = chamfer_distance(mine, normalized(c.cage.mesh.vertices()));
      if (!best || cd < best_cd) best = &c, best_cd = cd;
    }
  if (!best) throw ValidationError("pretrained model has no compatible convex");
  return {best->bases.bases * (cage_radius(cage) / cage_radius(best->cage))};
}

Eigen::VectorXd stack(const std::vector<Eigen::VectorXd>& parts) {
  Eigen::Index n = 0;
  for (const auto& p : parts) n += p.size();
  Eigen::VectorXd out(n);
  n = 0;
  for (const auto& p : parts) out.segment(n, p.size()) = p, n += p.size();
  return out;
}

std::string sample_name(int i) {
  std::ostringstream s;
  s << "sample_" << std::setw(3) << std::setfill('0') << i;
  return s.str();
}

}  // namespace

Model pretrain(const DatasetManifest& data, const PipelineConfig& cfg) {
  cfg.validate();
  if (data.objects.size() < 2) throw ValidationError("pretrain needs at least two corresponding objects");
  const auto objects = data.load_objects();
  check_correspondence(objects, data.objects);
  const auto source = flat_convexes(objects.front());
  std::vector<std::vector<TriMesh>> targets;
  for (std::size_t i = 1; i < objects.size(); ++i) targets.push_back(flat_convexes(objects[i]));
  const auto cages = build_cages(source, cfg.cage_epsilon, cfg.jobs);
  const auto pairs = make_pairs(source, cages, targets, cfg.fit, cfg.seed);
  const auto slots = convex_slots(objects.front());

  Model model;
  model.stage = "pretrain";
  model.num_bases = cfg.num_bases;
  model.config = cfg.to_json();
  ReferenceModel ref;
  ref.manifest = fs::absolute(data.objects.front());
  ref.geometry_hash = geometry_hash(source);
  for (std::size_t i = 1; i < data.objects.size(); ++i) ref.targets.push_back(fs::absolute(data.objects[i]));
  for (std::size_t m = 0; m < source.size(); ++m) {
    const BasisSet init = BasisSet::random(cfg.num_bases, cages[m].num_cage_vertices(),
                                           cfg.fit.init_scale * cage_radius(cages[m]), mix(cfg.seed, 1000 + m));
    const BasisFit fit = fit_bases(pairs[m], init, cfg.fit, cfg.jobs);
    ConvexModel c{slots[m].first, slots[m].second, cages[m], fit.bases, fit.coeffs, fit.loss_history, fit.identity_loss,
                  fit.final_loss};
    log_info("pretrain convex " + std::to_string(m) + ": L_C " + std::to_string(fit.identity_loss) + " -> " +
             std::to_string(fit.final_loss));
    ref.convexes.push_back(std::move(c));
  }
  model.references.push_back(std::move(ref));
  return model;
}

namespace {

ReferenceModel finetune_reference(const std::vector<ArticulatedObject>& objects, const std::vector<fs::path>& paths,
                                  int r, const Model* pretrained, const PipelineConfig& cfg) {
  const ArticulatedObject& reference = objects[r];
  const auto source = flat_convexes(reference);
  const int M = static_cast<int>(source.size());
  std::vector<std::vector<TriMesh>> targets;
  ReferenceModel out;
  out.manifest = fs::absolute(paths[r]);
  out.geometry_hash = geometry_hash(source);
  for (std::size_t i = 0; i < objects.size(); ++i)
    if (static_cast<int>(i) != r) {
      targets.push_back(flat_convexes(objects[i]));
      out.targets.push_back(fs::absolute(paths[i]));
    }
  const int A = static_cast<int>(targets.size());
  const auto cages = build_cages(source, cfg.cage_epsilon, cfg.jobs);
  const auto pairs = make_pairs(source, cages, targets, cfg.fit, mix(cfg.seed, 77 + r));

  std::vector<BasisSet> bases;
  for (int m = 0; m < M; ++m)
    bases.push_back(pretrained ? transfer_bases(*pretrained, cages[m])
                               : BasisSet::random(cfg.num_bases, cages[m].num_cage_vertices(),
                                                  cfg.fit.init_scale * cage_radius(cages[m]), mix(mix(cfg.seed, r), m)));
  const int K = bases.front().num_bases();
  const auto weights = object_weights(reference, cages, cfg.smooth, cfg.blend_fraction);
  const bool physics = cfg.fit.lambda_phy > 0.0 && reference.num_parts() > 1;

  std::vector<CoeffSet> coeffs(M);
  std::vector<std::vector<double>> history(M);
  std::vector<double> identity(M, 0.0), last(M, 0.0);
  for (int m = 0; m < M; ++m) {
    for (const auto& p : pairs[m]) identity[m] += chamfer_distance(p.source_points, p.target_points);
    identity[m] /= A;
  }
  double prev_total = 0.0;
  for (int it = 0;; ++it) {
    double total = 0.0;
    for (int m = 0; m < M; ++m) {
      const auto fits = fit_all_coefficients(bases[m], pairs[m], cfg.fit, coeffs[m], cfg.jobs);
      coeffs[m].clear();
      double loss = 0.0;
      for (const auto& f : fits) coeffs[m].push_back(f.z), loss += f.chamfer;
      last[m] = loss / A;
      history[m].push_back(last[m]);
      total += last[m];
    }
    total /= M;
    log_info("finetune ref " + std::to_string(r) + " iter " + std::to_string(it) + ": L_C " + std::to_string(total));
    if (it >= cfg.fit.outer_iters) break;
    if (it > 0 && prev_total - total < cfg.fit.rel_tol * prev_total) break;
    prev_total = total;

    std::vector<Eigen::MatrixXd> linear(M);
    if (physics) {
      std::vector<Eigen::MatrixXd> raw;
      for (const auto& b : bases) raw.push_back(b.bases);
      const ObjectDeformer deformer(reference, weights, stacked_maps(raw));
      for (int m = 0; m < M; ++m) linear[m] = Eigen::MatrixXd::Zero(K, bases[m].bases.cols());
      for (int i = 0; i < A; ++i) {
        std::vector<Eigen::VectorXd> y;
        for (int m = 0; m < M; ++m) y.push_back(coeffs[m][i]);
        const CorrectionResult corr = correct_shape(deformer, stack(y), cfg.train_proj, cfg.sim);
        PhysicsGradients g;
        physics_losses(deformer.deform(corr.z), cfg.sim, &g);
        const auto cage_g = deformer.cage_gradients(g.pene);
        for (int m = 0; m < M; ++m) {
          const Eigen::VectorXd ym = corr.z.segment(static_cast<Eigen::Index>(m) * K, K);
          Eigen::RowVectorXd flat(3 * cage_g[m].rows());
          for (Eigen::Index t = 0; t < cage_g[m].rows(); ++t) flat.segment<3>(3 * t) = cage_g[m].row(t);
          linear[m].noalias() += (cfg.fit.lambda_phy / A) * ym * flat;
        }
      }
    }
    std::vector<BasisSet> next(M);
    parallel_for(M, cfg.jobs, [&](int m) { next[m] = update_bases(pairs[m], bases[m], coeffs[m], cfg.fit, linear[m]); });
    bases = std::move(next);
  }

  const auto slots = convex_slots(reference);
  std::vector<Eigen::MatrixXd> raw, Y;
  for (int m = 0; m < M; ++m) {
    out.convexes.push_back({slots[m].first, slots[m].second, cages[m], bases[m], coeffs[m], history[m], identity[m], last[m]});
    raw.push_back(bases[m].bases);
    Eigen::MatrixXd ym(K, A);
    for (int i = 0; i < A; ++i) ym.col(i) = coeffs[m][i];
    Y.push_back(std::move(ym));
  }
  out.sync = synchronize(raw, Y, cfg.sync_iters, cfg.jobs);
  std::vector<Eigen::VectorXd> z;
  for (int i = 0; i < A; ++i) z.push_back(out.sync->global_coeffs.col(i));
  GmmConfig gcfg;
  gcfg.seed = mix(cfg.seed, 5000 + r);
  out.gmm = fit_gmm(z, cfg.gmm_components, gcfg);
  return out;
}

}  // namespace

Model finetune(const DatasetManifest& data, const Model* pretrained, const PipelineConfig& cfg) {
  cfg.validate();
  auto objects = data.load_objects();
  auto paths = data.objects;
  if (static_cast<int>(objects.size()) > cfg.shots) {
    objects.resize(cfg.shots);
    paths.resize(cfg.shots);
  }
  if (objects.size() < 2) throw ValidationError("finetune needs at least two objects");
  check_correspondence(objects, paths);
  Model model;
  model.stage = "finetune";
  model.config = cfg.to_json();
  for (int r = 0; r < static_cast<int>(objects.size()); ++r)
    model.references.push_back(finetune_reference(objects, paths, r, pretrained, cfg));
  model.num_bases = model.references.front().convexes.front().bases.num_bases();
  return model;
}

ObjectDeformer make_deformer(const ReferenceModel& ref, const ArticulatedObject& object, const PipelineConfig& cfg) {
  if (!ref.sync) throw ValidationError("model has no synchronization state; run finetune first");
  const auto convexes = flat_convexes(object);
  if (convexes.size() != ref.convexes.size()) throw ValidationError("reference object does not match the model's chain");
  std::vector<Cage> cages;
  if (geometry_hash(convexes) == ref.geometry_hash) {
    for (const auto& c : ref.convexes) cages.push_back(c.cage);
  } else {
    log_warning("reference geometry differs from the fitted one; rebuilding cages");
    cages = build_cages(convexes, cfg.cage_epsilon, cfg.jobs);
  }
  std::vector<Eigen::MatrixXd> raw;
  for (const auto& c : ref.convexes) raw.push_back(c.bases.bases);
  return ObjectDeformer(object, object_weights(object, cages, cfg.smooth, cfg.blend_fraction), synced_maps(raw, ref.sync->S));
}

json SampleReport::to_json() const {
  json s = json::array();
  for (const auto& r : samples)
    s.push_back({{"reference", r.reference},
                 {"index", r.index},
                 {"z", vector_to_json(r.z)},
                 {"z_corrected", vector_to_json(r.z_corrected)},
                 {"apd_before", r.apd_before},
                 {"apd_after", r.apd_after},
                 {"manifest", r.manifest.generic_string()},
                 {"obj", r.merged_obj.generic_string()}});
  return {{"samples", s}, {"mean_apd_before", mean_apd_before}, {"mean_apd_after", mean_apd_after}};
}

SampleReport sample(const Model& model, int n, std::uint64_t seed, const SampleOptions& opts, const PipelineConfig& cfg,
                    const fs::path& out_dir, std::optional<int> reference_index,
                    const ArticulatedObject* reference_override) {
  if (n < 0) throw ValidationError("sample count must be >= 0");
  if (model.references.empty()) throw ValidationError("model has no references");
  std::vector<int> refs;
  if (reference_index) {
    if (*reference_index < 0 || *reference_index >= static_cast<int>(model.references.size()))
      throw ValidationError("reference index out of range");
    refs.push_back(*reference_index);
  } else {
    for (int r = 0; r < static_cast<int>(model.references.size()); ++r) refs.push_back(r);
  }
  SampleReport report;
  for (int r : refs) {
    const ReferenceModel& ref = model.references[r];
    if (!ref.gmm) throw ValidationError("model has no coefficient mixture; run finetune first");
    const ArticulatedObject object = reference_override ? *reference_override : load_manifest(ref.manifest);
    if (reference_override) {
      const ArticulatedObject fitted = load_manifest(ref.manifest);
      if (!same_kinematic_chain(fitted, object)) throw ValidationError("reference does not match the model's kinematic chain");
    }
    const ObjectDeformer deformer = make_deformer(ref, object, cfg);
    const fs::path dir = out_dir / ("ref" + std::to_string(r));
    fs::create_directories(dir);
    std::vector<SampleRecord> records(n);
    parallel_for(n, cfg.jobs, [&](int i) {
      SampleRecord rec;
      rec.reference = r;
      rec.index = i;
      rec.z = opts.zero_z ? Eigen::VectorXd::Zero(deformer.num_params()) : sample_gmm(*ref.gmm, mix(mix(seed, r), i));
      SimConfig sim = cfg.sim;
      sim.jobs = 1;
      if (opts.correct && !opts.zero_z) {
        const CorrectionResult corr = correct_shape(deformer, rec.z, opts.proj, sim);
        rec.z_corrected = corr.z;
        rec.apd_before = corr.before.l_phy;
        rec.apd_after = corr.after.l_phy;
      } else {
        rec.z_corrected = rec.z;
        rec.apd_before = rec.apd_after = apd(deformer.deform(rec.z), sim);
      }
      const ArticulatedObject obj = deformer.deform(rec.z_corrected);
      const fs::path sdir = dir / sample_name(i);
      fs::create_directories(sdir);
      rec.manifest = sdir / "object.json";
      save_manifest(obj, rec.manifest);
      rec.merged_obj = dir / (sample_name(i) + ".obj");
      save_obj(obj.merged_mesh(), rec.merged_obj);
      std::ofstream zf(sdir / "z.json");
      zf << json{{"z", vector_to_json(rec.z)}, {"z_corrected", vector_to_json(rec.z_corrected)}}.dump(2) << '\n';
      if (!zf) throw IoError("cannot write " + (sdir / "z.json").string());
      records[i] = std::move(rec);
    });
    for (auto& rec : records) report.samples.push_back(std::move(rec));
  }
  for (const auto& r : report.samples) report.mean_apd_before += r.apd_before, report.mean_apd_after += r.apd_after;
  if (!report.samples.empty()) {
    report.mean_apd_before /= static_cast<double>(report.samples.size());
    report.mean_apd_after /= static_cast<double>(report.samples.size());
  }
  return report;
}

json EvalReport::to_json() const {
  json j{{"mmd", mmd},     {"cov", cov},       {"one_nna", one_nna},        {"jsd", jsd},
         {"mmd_x1e3", mmd * 1e3}, {"generated", generated}, {"reference", reference}};
  if (apd) {
    j["apd"] = *apd;
    j["apd_x1e2"] = *apd * 1e2;
  }
  return j;
}

std::string EvalReport::table() const {
  std::ostringstream s;
  s << std::left << std::setw(12) << "MMD(x1e3)" << std::setw(10) << "COV(%)" << std::setw(12) << "1-NNA(%)"
    << std::setw(10) << "JSD" << "APD(x1e2)\n";
  s << std::fixed << std::setprecision(4) << std::setw(12) << mmd * 1e3 << std::setw(10) << std::setprecision(2) << cov
    << std::setw(12) << one_nna << std::setw(10) << std::setprecision(4) << jsd;
  if (apd)
    s << *apd * 1e2;
  else
    s << "-";
  s << '\n';
  return s.str();
}

EvalReport evaluate(const fs::path& generated_dir, const DatasetManifest& reference, const PipelineConfig& cfg) {
  if (!fs::is_directory(generated_dir)) throw IoError("not a directory: " + generated_dir.string());
  std::vector<fs::path> objs, manifests;
  for (const auto& e : fs::recursive_directory_iterator(generated_dir)) {
    if (!e.is_regular_file()) continue;
    const bool in_object_dir = fs::exists(e.path().parent_path() / "object.json");
    if (e.path().extension() == ".obj" && !in_object_dir) objs.push_back(e.path());
    if (e.path().filename() == "object.json") manifests.push_back(e.path());
  }
  std::sort(objs.begin(), objs.end());
  std::sort(manifests.begin(), manifests.end());
  if (objs.empty()) throw ValidationError("no generated meshes in " + generated_dir.string());

  auto points_of = [&](const TriMesh& m) {
    return sample_surface(m, cfg.eval_points, mix(cfg.seed, m.content_hash())).points;
  };
  EvalSet set;
  for (const auto& p : objs) set.generated.push_back(points_of(load_obj(p)));
  for (const auto& o : reference.load_objects()) set.reference.push_back(points_of(o.merged_mesh()));

  EvalReport rep;
  rep.generated = static_cast<int>(set.generated.size());
  rep.reference = static_cast<int>(set.reference.size());
  const Eigen::MatrixXd gr = pairwise_chamfer(set.generated, set.reference, cfg.jobs);
  rep.mmd = mmd(gr);
  rep.cov = cov(gr);
  if (rep.generated >= 2 && rep.reference >= 2) {
    rep.one_nna = one_nna(gr, pairwise_chamfer(set.generated, set.generated, cfg.jobs),
                          pairwise_chamfer(set.reference, set.reference, cfg.jobs));
  } else {
    log_warning("1-NNA needs at least two sets per side; reporting 0");
  }
  rep.jsd = jsd(set, cfg.jsd_resolution);
  if (!manifests.empty()) {
    double total = 0.0;
    for (const auto& m : manifests) total += apd(load_manifest(m), cfg.sim);
    rep.apd = total / static_cast<double>(manifests.size());
  }
  return rep;
}

}  // namespace artdeform
