#include "artdeform/synthesis.hpp"

#include "artdeform/error.hpp"

namespace artdeform {

std::vector<PartWeights> object_weights(const ArticulatedObject& object, const std::vector<Cage>& cages, bool smooth,
                                        double blend_fraction) {
  if (static_cast<int>(cages.size()) != object.num_convexes())
    throw ShapeError("object_weights: one cage per convex required");
  std::vector<PartWeights> out;
  std::size_t m = 0;
  for (const auto& part : object.parts()) {
    std::vector<Cage> part_cages(cages.begin() + static_cast<long>(m),
                                 cages.begin() + static_cast<long>(m + part.convexes.size()));
    m += part.convexes.size();
    if (smooth && part.convexes.size() > 1) {
      const double radius = blend_fraction * merge_meshes(part.convexes).bbox_diagonal();
      out.push_back(smooth_weights(part.convexes, part_cages, radius));
    } else {
      out.push_back(block_weights(part_cages));
    }
  }
  return out;
}

ObjectDeformer::ObjectDeformer(ArticulatedObject reference, std::vector<PartWeights> weights,
                               std::vector<Eigen::MatrixXd> maps)
    : reference_(std::move(reference)), weights_(std::move(weights)), maps_(std::move(maps)) {
  if (static_cast<int>(weights_.size()) != reference_.num_parts()) throw ShapeError("ObjectDeformer: one weight set per part");
  if (static_cast<int>(maps_.size()) != reference_.num_convexes()) throw ShapeError("ObjectDeformer: one map per convex");
  num_params_ = maps_.empty() ? 0 : static_cast<int>(maps_.front().cols());
  int m = 0;
  for (int p = 0; p < reference_.num_parts(); ++p) {
    const auto& part = reference_.parts()[p];
    const auto& w = weights_[p];
    part_first_convex_.push_back(m);
    // stacked cage offsets of the part as a function of theta: rows 3t + d
    Eigen::MatrixXd stacked = Eigen::MatrixXd::Zero(3 * w.total_cage_vertices, num_params_);
    for (std::size_t j = 0; j < part.convexes.size(); ++j) {
      const auto& map = maps_[m + j];
      if (map.cols() != num_params_) throw ShapeError("ObjectDeformer: maps disagree on parameter count");
      const int nt = static_cast<int>(map.rows() / 3);
      const int expected = (j + 1 < part.convexes.size() ? w.cage_offset[j + 1] : w.total_cage_vertices) - w.cage_offset[j];
      if (nt != expected) throw ShapeError("ObjectDeformer: map rows do not match cage size");
      stacked.middleRows(3 * w.cage_offset[j], map.rows()) = map;
    }
    Eigen::MatrixXd jac(3 * part.num_vertices(), num_params_);
    int row = 0;
    for (std::size_t j = 0; j < part.convexes.size(); ++j) {
      const auto& wj = w.weights[j];
      if (wj.rows() != part.convexes[j].num_vertices()) throw ShapeError("ObjectDeformer: weights do not match convex");
      for (int d = 0; d < 3; ++d) {
        Eigen::MatrixXd per_axis(w.total_cage_vertices, num_params_);
        for (int t = 0; t < w.total_cage_vertices; ++t) per_axis.row(t) = stacked.row(3 * t + d);
        const Eigen::MatrixXd block = wj * per_axis;
        for (Eigen::Index v = 0; v < block.rows(); ++v) jac.row(3 * (row + v) + d) = block.row(v);
      }
      row += static_cast<int>(wj.rows());
    }
    jacobians_.push_back(std::move(jac));
    m += static_cast<int>(part.convexes.size());
  }
}

ArticulatedObject ObjectDeformer::deform(const Eigen::VectorXd& theta) const {
  if (theta.size() != num_params_) throw ShapeError("ObjectDeformer::deform: parameter length mismatch");
  std::vector<std::vector<TriMesh>> convexes;
  for (int p = 0; p < reference_.num_parts(); ++p) {
    const auto& part = reference_.parts()[p];
    const Eigen::VectorXd flat = jacobians_[p] * theta;
    std::vector<TriMesh> out;
    int row = 0;
    for (const auto& c : part.convexes) {
      Points v = c.vertices();
      for (int i = 0; i < v.rows(); ++i) v.row(i) += flat.segment<3>(3 * (row + i)).transpose();
      row += c.num_vertices();
      out.push_back(c.with_vertices(std::move(v)));
    }
    convexes.push_back(std::move(out));
  }
  return reference_.with_convexes(std::move(convexes));
}

Eigen::VectorXd ObjectDeformer::pull_back(const std::vector<Points>& vertex_grads) const {
  if (static_cast<int>(vertex_grads.size()) != reference_.num_parts()) throw ShapeError("pull_back: one gradient per part");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(num_params_);
  for (int p = 0; p < reference_.num_parts(); ++p) {
    if (vertex_grads[p].rows() == 0) continue;
    if (3 * vertex_grads[p].rows() != jacobians_[p].rows()) throw ShapeError("pull_back: gradient rows mismatch");
    const Eigen::Map<const Eigen::VectorXd> flat(vertex_grads[p].data(), vertex_grads[p].size());
    g.noalias() += jacobians_[p].transpose() * flat;
  }
  return g;
}

std::vector<Points> ObjectDeformer::cage_gradients(const std::vector<Points>& vertex_grads) const {
  if (static_cast<int>(vertex_grads.size()) != reference_.num_parts()) throw ShapeError("cage_gradients: one gradient per part");
  std::vector<Points> out;
  for (int p = 0; p < reference_.num_parts(); ++p) {
    const auto& part = reference_.parts()[p];
    const auto& w = weights_[p];
    Points stacked = Points::Zero(w.total_cage_vertices, 3);
    if (vertex_grads[p].rows() > 0) {
      int row = 0;
      for (std::size_t j = 0; j < part.convexes.size(); ++j) {
        const auto n = w.weights[j].rows();
        stacked.noalias() += w.weights[j].transpose() * vertex_grads[p].middleRows(row, n);
        row += static_cast<int>(n);
      }
    }
    for (std::size_t j = 0; j < part.convexes.size(); ++j) {
      const int end = j + 1 < part.convexes.size() ? w.cage_offset[j + 1] : w.total_cage_vertices;
      out.push_back(stacked.middleRows(w.cage_offset[j], end - w.cage_offset[j]));
    }
  }
  return out;
}

std::vector<Eigen::MatrixXd> synced_maps(const std::vector<Eigen::MatrixXd>& bases, const std::vector<Eigen::MatrixXd>& S) {
  if (bases.size() != S.size()) throw ShapeError("synced_maps: one S per basis set");
  std::vector<Eigen::MatrixXd> maps;
  for (std::size_t m = 0; m < bases.size(); ++m) maps.push_back(bases[m].transpose() * S[m]);
  return maps;
}

std::vector<Eigen::MatrixXd> stacked_maps(const std::vector<Eigen::MatrixXd>& bases) {
  Eigen::Index total = 0;
  for (const auto& b : bases) total += b.rows();
  std::vector<Eigen::MatrixXd> maps;
  Eigen::Index col = 0;
  for (const auto& b : bases) {
    Eigen::MatrixXd map = Eigen::MatrixXd::Zero(b.cols(), total);
    map.middleCols(col, b.rows()) = b.transpose();
    col += b.rows();
    maps.push_back(std::move(map));
  }
  return maps;
}

}  // namespace artdeform
