#include "artdeform/error.hpp"
#include "artdeform/fixtures.hpp"
#include "artdeform/log.hpp"
#include "artdeform/metrics.hpp"
#include "artdeform/model_io.hpp"
#include "artdeform/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace artdeform;

namespace {

struct Globals {
  std::string config;
  std::string profile = "desk";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 1;
  bool verbose = false;
};

PipelineConfig resolve(const Globals& g) {
  PipelineConfig cfg = PipelineConfig::profile(g.profile);
  if (!g.config.empty()) {
    const fs::path p = g.config;
    if (p.extension() == ".toml") throw ValidationError("TOML configs are not supported; use JSON");
    std::ifstream in(p);
    if (!in) throw IoError("cannot open config " + g.config);
    json j;
    try {
      in >> j;
    } catch (const json::parse_error& e) {
      throw ParseError("config " + g.config + ": " + e.what(), 0);
    }
    cfg.apply_json(j);
  }
  if (g.seed_set) cfg.seed = g.seed;
  cfg.jobs = g.jobs;
  cfg.sim.seed = cfg.seed;
  cfg.fit.seed = cfg.seed;
  cfg.sim.jobs = g.jobs;
  cfg.validate();
  return cfg;
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

struct Run {
  std::string command;
  std::vector<std::string> argv;
  json inputs = json::array();
  json outputs = json::array();
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  std::string started = now_utc();

  void finish(const fs::path& dir, const Globals& g, const PipelineConfig& cfg) const {
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_json(dir / "run.json", {{"tool", "artdeform"},
                                  {"command", command},
                                  {"argv", argv},
                                  {"profile", g.profile},
                                  {"seed", cfg.seed},
                                  {"jobs", cfg.jobs},
                                  {"config", cfg.to_json()},
                                  {"inputs", inputs},
                                  {"outputs", outputs},
                                  {"started", started},
                                  {"elapsed_seconds", elapsed}});
  }
};

fs::path dir_of(const fs::path& file) { return file.has_parent_path() ? file.parent_path() : fs::path("."); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-shot articulated mesh generation by cage-based deformation"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "JSON config overriding profile defaults");
  app.add_option("--profile", g.profile, "Constant profile")->check(CLI::IsMember({"paper", "desk"}));
  app.add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) { g.seed = s, g.seed_set = true; }, "Random seed");
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("-v,--verbose", g.verbose, "Log progress");

  Run run;
  for (int i = 0; i < argc; ++i) run.argv.emplace_back(argv[i]);

  std::string data, out, pretrained, model_path, reference, generated, object, z_path, kind;
  bool cold = false, zero_z = false, no_correct = false, train_time = false;
  int n = -1, reference_index = -1, proj_iters = -1, count = 5;
  double proj_eps = -1.0;

  auto* pre = app.add_subcommand("pretrain", "Fit per-convex bases on a rigid dataset");
  pre->add_option("--data", data, "Dataset manifest")->required()->check(CLI::ExistingFile);
  pre->add_option("--out", out, "Model file")->required();

  auto* fin = app.add_subcommand("finetune", "Fit, synchronize and model coefficients on a few-shot dataset");
  fin->add_option("--data", data, "Dataset manifest")->required()->check(CLI::ExistingFile);
  fin->add_option("--pretrained", pretrained, "Pretrained model")->check(CLI::ExistingFile);
  fin->add_flag("--cold-start", cold, "Start from random bases without a pretrained model");
  fin->add_option("--out", out, "Model file")->required();

  auto* smp = app.add_subcommand("sample", "Generate corrected samples from a fine-tuned model");
  smp->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  smp->add_option("--reference", reference, "Reference object manifest (default: the fitted one)")->check(CLI::ExistingFile);
  smp->add_option("--reference-index", reference_index, "Use only this fitted reference");
  smp->add_option("-n,--count", n, "Samples per reference (default from config)");
  smp->add_option("--out-dir", out, "Output directory")->required();
  smp->add_flag("--zero-z", zero_z, "Identity deformation");
  smp->add_flag("--no-correct", no_correct, "Skip test-time correction");
  smp->add_flag("--train-time", train_time, "Use the train-time correction constants");
  smp->add_option("--proj-iters", proj_iters, "Correction iterations");
  smp->add_option("--proj-eps", proj_eps, "Correction step");

  auto* sim = app.add_subcommand("simulate", "Articulation simulation report for one object");
  sim->add_option("--object", object, "Object manifest")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", out, "Report file (default: stdout)");

  auto* ev = app.add_subcommand("eval", "MMD / COV / 1-NNA / JSD / APD of generated meshes");
  ev->add_option("--generated", generated, "Directory of generated meshes")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--reference", reference, "Reference dataset manifest")->required()->check(CLI::ExistingFile);
  ev->add_option("--out", out, "Metrics JSON file");

  auto* cor = app.add_subcommand("correct", "Collision correction of one coefficient vector");
  cor->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  cor->add_option("--reference-index", reference_index, "Fitted reference")->required();
  cor->add_option("--z", z_path, "JSON file with a \"z\" array")->required()->check(CLI::ExistingFile);
  cor->add_option("--out-dir", out, "Output directory")->required();
  cor->add_flag("--train-time", train_time, "Use the train-time correction constants");
  cor->add_option("--proj-iters", proj_iters, "Correction iterations");
  cor->add_option("--proj-eps", proj_eps, "Correction step");

  auto* fix = app.add_subcommand("make-fixture", "Write a synthetic dataset");
  fix->add_option("--kind", kind, "Fixture family")->required()->check(CLI::IsMember({"eyeglasses", "hinge", "disjoint", "boxes"}));
  fix->add_option("--count", count, "Objects")->check(CLI::PositiveNumber);
  fix->add_option("--out-dir", out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);
  if (!g.verbose)
    set_log_sink([](LogLevel level, const std::string& msg) {
      if (level == LogLevel::Warning) std::cerr << "warning: " << msg << '\n';
    });
  else
    set_log_sink([](LogLevel, const std::string& msg) { std::cerr << msg << '\n'; });

  try {
    const PipelineConfig cfg = resolve(g);
    auto proj_for = [&](ProjConfig base) {
      if (train_time) base = cfg.train_proj;
      if (proj_iters >= 0) base.iters = proj_iters;
      if (proj_eps > 0) base.eps = proj_eps;
      base.validate();
      return base;
    };

    if (*pre) {
      run.command = "pretrain";
      run.inputs.push_back(data);
      const Model m = pretrain(DatasetManifest::load(data), cfg);
      save_model(m, out);
      run.outputs.push_back(out);
      run.finish(dir_of(out), g, cfg);
    } else if (*fin) {
      run.command = "finetune";
      if (pretrained.empty() && !cold) throw ValidationError("finetune needs --pretrained or --cold-start");
      run.inputs.push_back(data);
      std::optional<Model> pm;
      if (!pretrained.empty()) {
        pm = load_model(pretrained);
        run.inputs.push_back(pretrained);
      }
      const Model m = finetune(DatasetManifest::load(data), pm ? &*pm : nullptr, cfg);
      save_model(m, out);
      run.outputs.push_back(out);
      run.finish(dir_of(out), g, cfg);
    } else if (*smp) {
      run.command = "sample";
      run.inputs.push_back(model_path);
      const Model m = load_model(model_path);
      SampleOptions opts;
      opts.zero_z = zero_z;
      opts.correct = !no_correct;
      opts.proj = proj_for(cfg.test_proj);
      std::optional<ArticulatedObject> ref;
      if (!reference.empty()) ref = load_manifest(reference), run.inputs.push_back(reference);
      std::optional<int> idx;
      if (reference_index >= 0) idx = reference_index;
      const SampleReport rep = sample(m, n >= 0 ? n : cfg.samples_per_reference, cfg.seed, opts, cfg, out, idx,
                                      ref ? &*ref : nullptr);
      write_json(fs::path(out) / "samples.json", rep.to_json());
      for (const auto& s : rep.samples) run.outputs.push_back(s.merged_obj.generic_string());
      run.finish(out, g, cfg);
      std::cout << "wrote " << rep.samples.size() << " samples; mean APD " << rep.mean_apd_before << " -> "
                << rep.mean_apd_after << '\n';
    } else if (*sim) {
      run.command = "simulate";
      const CollisionReport rep = physics_losses(load_manifest(object), cfg.sim);
      if (out.empty()) {
        std::cout << rep.to_json() << '\n';
      } else {
        write_json(out, json::parse(rep.to_json()));
        run.inputs.push_back(object);
        run.outputs.push_back(out);
        run.finish(dir_of(out), g, cfg);
      }
    } else if (*ev) {
      run.command = "eval";
      const EvalReport rep = evaluate(generated, DatasetManifest::load(reference), cfg);
      std::cout << rep.table();
      if (!out.empty()) {
        write_json(out, rep.to_json());
        run.inputs = {generated, reference};
        run.outputs.push_back(out);
        run.finish(dir_of(out), g, cfg);
      }
    } else if (*cor) {
      run.command = "correct";
      const Model m = load_model(model_path);
      if (reference_index < 0 || reference_index >= static_cast<int>(m.references.size()))
        throw ValidationError("reference index out of range");
      const auto& ref = m.references[reference_index];
      std::ifstream zin(z_path);
      json zj;
      zin >> zj;
      const Eigen::VectorXd z = vector_from_json(zj.at("z"));
      const ObjectDeformer deformer = make_deformer(ref, load_manifest(ref.manifest), cfg);
      if (z.size() != deformer.num_params()) throw ShapeError("z length does not match the model");
      const CorrectionResult res = correct_shape(deformer, z, proj_for(cfg.test_proj), cfg.sim);
      fs::create_directories(out);
      const ArticulatedObject obj = deformer.deform(res.z);
      save_manifest(obj, fs::path(out) / "object.json");
      write_json(fs::path(out) / "correction.json", {{"z", vector_to_json(z)},
                                                     {"z_corrected", vector_to_json(res.z)},
                                                     {"before", json::parse(res.before.to_json())},
                                                     {"after", json::parse(res.after.to_json())}});
      run.inputs = {model_path, z_path};
      run.outputs.push_back((fs::path(out) / "object.json").generic_string());
      run.finish(out, g, cfg);
      std::cout << "APD " << res.before.l_phy << " -> " << res.after.l_phy << '\n';
    } else if (*fix) {
      std::vector<ArticulatedObject> objs;
      std::string role = "finetune-train";
      for (int i = 0; i < count; ++i) {
        if (kind == "eyeglasses") objs.push_back(toy_eyeglasses(i));
        if (kind == "hinge") objs.push_back(hinge_fixture(1.3 + 0.1 * i));
        if (kind == "disjoint") objs.push_back(disjoint_fixture());
        if (kind == "boxes") {
          objs.push_back(box_object({1.0 + 0.1 * i, 1.0 + 0.05 * (i % 3), 1.0 - 0.04 * (i % 4)}));
          role = "pretrain";
        }
      }
      std::cout << write_dataset(objs, out, role).string() << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
