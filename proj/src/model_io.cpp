#include "artdeform/model_io.hpp"

#include "artdeform/error.hpp"

#include <fstream>
#include <sstream>

namespace artdeform {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto r = j.at("rows").get<Eigen::Index>(), c = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != r) throw ValidationError("matrix row count mismatch");
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (static_cast<Eigen::Index>(data[i].size()) != c) throw ValidationError("matrix column count mismatch");
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = data[i][k].get<double>();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json to_json(const GaussianMixture& g) {
  json comps = json::array();
  for (const auto& c : g.components)
    comps.push_back({{"mean", vector_to_json(c.mean)}, {"variance", vector_to_json(c.variance)}, {"weight", c.weight}});
  return {{"components", comps}};
}

GaussianMixture gmm_from_json(const json& j) {
  GaussianMixture g;
  for (const auto& c : j.at("components"))
    g.components.push_back({vector_from_json(c.at("mean")), vector_from_json(c.at("variance")), c.at("weight").get<double>()});
  return g;
}

json to_json(const SyncState& s) {
  json S = json::array();
  for (const auto& m : s.S) S.push_back(matrix_to_json(m));
  return {{"S", S}, {"global_coeffs", matrix_to_json(s.global_coeffs)}, {"objective_history", s.objective_history}};
}

SyncState sync_from_json(const json& j) {
  SyncState s;
  for (const auto& m : j.at("S")) s.S.push_back(matrix_from_json(m));
  s.global_coeffs = matrix_from_json(j.at("global_coeffs"));
  s.objective_history = j.at("objective_history").get<std::vector<double>>();
  return s;
}

namespace {

json mesh_to_json(const TriMesh& m) {
  Eigen::MatrixXd f = m.faces().cast<double>();
  return {{"vertices", matrix_to_json(m.vertices())}, {"faces", matrix_to_json(f)}};
}

TriMesh mesh_from_json(const json& j) {
  const Eigen::MatrixXd v = matrix_from_json(j.at("vertices"));
  const Eigen::MatrixXd f = matrix_from_json(j.at("faces"));
  if (v.cols() != 3 || f.cols() != 3) throw ValidationError("mesh blocks must have 3 columns");
  return {Points(v), Faces(f.cast<int>())};
}

std::string hex(std::uint64_t h) {
  std::ostringstream s;
  s << std::hex << h;
  return s.str();
}

}  // namespace

std::uint64_t geometry_hash(const std::vector<TriMesh>& convexes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& c : convexes) {
    h ^= c.content_hash();
    h *= 1099511628211ULL;
  }
  return h;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  json j;
  j["format"] = "artdeform-model";
  j["version"] = 1;
  j["stage"] = model.stage;
  j["num_bases"] = model.num_bases;
  j["config"] = model.config;
  j["references"] = json::array();
  for (const auto& r : model.references) {
    json jr;
    jr["manifest"] = r.manifest.generic_string();
    jr["geometry_hash"] = hex(r.geometry_hash);
    jr["targets"] = json::array();
    for (const auto& t : r.targets) jr["targets"].push_back(t.generic_string());
    jr["convexes"] = json::array();
    for (const auto& c : r.convexes) {
      json jc;
      jc["part"] = c.part;
      jc["convex"] = c.convex;
      jc["cage_hash"] = hex(c.cage.mesh.content_hash());
      jc["cage"] = mesh_to_json(c.cage.mesh);
      jc["phi"] = matrix_to_json(c.cage.phi);
      jc["bases"] = matrix_to_json(c.bases.bases);
      jc["coefficients"] = json::array();
      for (const auto& z : c.coeffs) jc["coefficients"].push_back(vector_to_json(z));
      jc["loss_history"] = c.loss_history;
      jc["identity_loss"] = c.identity_loss;
      jc["final_loss"] = c.final_loss;
      jr["convexes"].push_back(std::move(jc));
    }
    if (r.sync) jr["sync"] = to_json(*r.sync);
    if (r.gmm) jr["gmm"] = to_json(*r.gmm);
    j["references"].push_back(std::move(jr));
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write model " + path.string());
  out << j.dump() << '\n';
  if (!out) throw IoError("failed writing model " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model ") + path.string() + ": " + e.what(), 0);
  }
  try {
    if (j.value("format", "") != "artdeform-model") throw ValidationError("not a model file: " + path.string());
    Model m;
    m.stage = j.at("stage").get<std::string>();
    m.num_bases = j.at("num_bases").get<int>();
    m.config = j.value("config", json::object());
    for (const auto& jr : j.at("references")) {
      ReferenceModel r;
      r.manifest = jr.at("manifest").get<std::string>();
      r.geometry_hash = std::stoull(jr.at("geometry_hash").get<std::string>(), nullptr, 16);
      for (const auto& t : jr.value("targets", json::array())) r.targets.emplace_back(t.get<std::string>());
      for (const auto& jc : jr.at("convexes")) {
        ConvexModel c;
        c.part = jc.at("part").get<int>();
        c.convex = jc.at("convex").get<int>();
        c.cage.mesh = mesh_from_json(jc.at("cage"));
        c.cage.phi = matrix_from_json(jc.at("phi"));
        c.bases.bases = matrix_from_json(jc.at("bases"));
        for (const auto& z : jc.at("coefficients")) c.coeffs.push_back(vector_from_json(z));
        c.loss_history = jc.at("loss_history").get<std::vector<double>>();
        c.identity_loss = jc.at("identity_loss").get<double>();
        c.final_loss = jc.at("final_loss").get<double>();
        if (c.bases.bases.cols() != 3 * c.cage.num_cage_vertices())
          throw ValidationError("model: bases do not match cage size");
        r.convexes.push_back(std::move(c));
      }
      if (jr.contains("sync")) r.sync = sync_from_json(jr.at("sync"));
      if (jr.contains("gmm")) r.gmm = gmm_from_json(jr.at("gmm"));
      m.references.push_back(std::move(r));
    }
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed model ") + path.string() + ": " + e.what());
  }
}

}  // namespace artdeform
