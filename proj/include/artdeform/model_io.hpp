#pragma once

#include "artdeform/basis.hpp"
#include "artdeform/cage.hpp"
#include "artdeform/gmm.hpp"
#include "artdeform/sync.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace artdeform {

struct ConvexModel {
  int part = 0;
  int convex = 0;
  Cage cage;
  BasisSet bases;
  CoeffSet coeffs;  // one per target object, in target order
  std::vector<double> loss_history;
  double identity_loss = 0.0;
  double final_loss = 0.0;
};

/// Everything fitted around one reference object.
struct ReferenceModel {
  std::filesystem::path manifest;
  std::uint64_t geometry_hash = 0;
  std::vector<std::filesystem::path> targets;
  std::vector<ConvexModel> convexes;  // flattened convex order
  std::optional<SyncState> sync;
  std::optional<GaussianMixture> gmm;
};

struct Model {
  std::string stage;  // "pretrain" or "finetune"
  int num_bases = 0;
  std::vector<ReferenceModel> references;
  nlohmann::json config;
};

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

nlohmann::json to_json(const GaussianMixture& g);
GaussianMixture gmm_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SyncState& s);
SyncState sync_from_json(const nlohmann::json& j);

void save_model(const Model& model, const std::filesystem::path& path);
/// Throws IoError / ParseError / ValidationError on unreadable or malformed files.
Model load_model(const std::filesystem::path& path);

/// Order-dependent hash of every convex of an object.
std::uint64_t geometry_hash(const std::vector<TriMesh>& convexes);

}  // namespace artdeform
