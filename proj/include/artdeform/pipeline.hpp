#pragma once

#include "artdeform/articulation.hpp"
#include "artdeform/basis.hpp"
#include "artdeform/model_io.hpp"
#include "artdeform/physics.hpp"
#include "artdeform/synthesis.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace artdeform {

/// {role, objects:[manifest paths]}; relative paths resolve against the file's directory.
/// Convex m of every object corresponds across the dataset.
struct DatasetManifest {
  std::string role;  // "pretrain", "finetune-train" or "test"
  std::vector<std::filesystem::path> objects;

  static DatasetManifest load(const std::filesystem::path& path);
  std::vector<ArticulatedObject> load_objects() const;
};

struct PipelineConfig {
  int num_bases = 16;
  int samples_per_reference = 40;
  int shots = 5;
  int sync_iters = 100;
  int gmm_components = 3;
  FitConfig fit;
  SimConfig sim;
  ProjConfig train_proj = ProjConfig::train();
  ProjConfig test_proj = ProjConfig::test();
  bool smooth = true;
  double blend_fraction = 0.05;
  double cage_epsilon = 0.05;
  int eval_points = 4096;
  int jsd_resolution = 28;
  std::uint64_t seed = 0;
  int jobs = 1;

  /// "paper": N_s = N_det = 100, 4096 Chamfer samples. "desk": N_s = 20, N_det = 10, 512.
  static PipelineConfig profile(const std::string& name);
  /// Overrides fields present in j (same keys as to_json). Unknown keys are rejected.
  void apply_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
};

/// Fits per-convex bases on pairs (object 0, convex m) -> (object o, convex m).
Model pretrain(const DatasetManifest& data, const PipelineConfig& cfg);

/// Per reference object: fit bases on the other objects (warm-started from `pretrained`
/// when given, otherwise random), with train-time correction and the physics term each
/// outer iteration, then synchronize and fit the coefficient mixture.
Model finetune(const DatasetManifest& data, const Model* pretrained, const PipelineConfig& cfg);

/// Generator of one fitted reference: synchronized maps over the reference geometry.
ObjectDeformer make_deformer(const ReferenceModel& ref, const ArticulatedObject& object, const PipelineConfig& cfg);

struct SampleOptions {
  bool zero_z = false;  // identity deformation, no correction
  bool correct = true;
  ProjConfig proj = ProjConfig::test();
};

struct SampleRecord {
  int reference = 0;
  int index = 0;
  Eigen::VectorXd z;
  Eigen::VectorXd z_corrected;
  double apd_before = 0.0;
  double apd_after = 0.0;
  std::filesystem::path manifest;
  std::filesystem::path merged_obj;
};

struct SampleReport {
  std::vector<SampleRecord> samples;
  double mean_apd_before = 0.0;
  double mean_apd_after = 0.0;

  nlohmann::json to_json() const;
};

/// Draws n samples per reference of the model (or only `reference_index`) and writes
/// <out>/ref<r>/sample_<i>/ (manifest + convex OBJs, z.json) and <out>/ref<r>/sample_<i>.obj.
SampleReport sample(const Model& model, int n, std::uint64_t seed, const SampleOptions& opts, const PipelineConfig& cfg,
                    const std::filesystem::path& out_dir, std::optional<int> reference_index = std::nullopt,
                    const ArticulatedObject* reference_override = nullptr);

struct EvalReport {
  double mmd = 0.0;      // raw CD units
  double cov = 0.0;      // percent
  double one_nna = 0.0;  // percent
  double jsd = 0.0;
  std::optional<double> apd;
  int generated = 0;
  int reference = 0;

  nlohmann::json to_json() const;
  /// Aligned text with MMD x 1e3 and APD x 1e2.
  std::string table() const;
};

/// Generated meshes: every *.obj under `generated_dir` (sorted by path) except those in a
/// directory holding an object.json, which are the per-convex parts of a sample. APD
/// averages over those object.json directories. Surface samples are seeded from the mesh
/// content, so identical meshes get identical point sets. Reference: dataset manifest.
EvalReport evaluate(const std::filesystem::path& generated_dir, const DatasetManifest& reference,
                    const PipelineConfig& cfg);

}  // namespace artdeform
