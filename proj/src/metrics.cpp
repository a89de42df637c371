#include "artdeform/metrics.hpp"

#include "artdeform/chamfer.hpp"
#include "artdeform/error.hpp"
#include "artdeform/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace artdeform {

void EvalSet::validate() const {
  if (generated.empty() || reference.empty()) throw ValidationError("EvalSet: both sides must be non-empty");
}

Eigen::MatrixXd pairwise_chamfer(const std::vector<Points>& a, const std::vector<Points>& b, int jobs) {
  Eigen::MatrixXd d(a.size(), b.size());
  const int nb = static_cast<int>(b.size());
  parallel_for(static_cast<int>(a.size() * b.size()), jobs,
               [&](int k) { d(k / nb, k % nb) = chamfer_distance(a[k / nb], b[k % nb]); });
  return d;
}

namespace {

/// Lowest index of the minimum of a row, skipping `skip`.
int argmin(const Eigen::RowVectorXd& row, int skip = -1) {
  int best = -1;
  for (int j = 0; j < row.size(); ++j) {
    if (j == skip) continue;
    if (best < 0 || row[j] < row[best]) best = j;
  }
  return best;
}

void require(const Eigen::MatrixXd& gen_ref) {
  if (gen_ref.rows() == 0 || gen_ref.cols() == 0) throw ValidationError("metrics: both sides must be non-empty");
}

}  // namespace

double mmd(const Eigen::MatrixXd& gen_ref) {
  require(gen_ref);
  return gen_ref.colwise().minCoeff().mean();
}

double cov(const Eigen::MatrixXd& gen_ref) {
  require(gen_ref);
  std::set<int> hit;
  for (Eigen::Index i = 0; i < gen_ref.rows(); ++i) hit.insert(argmin(gen_ref.row(i)));
  return 100.0 * static_cast<double>(hit.size()) / static_cast<double>(gen_ref.cols());
}

double one_nna(const Eigen::MatrixXd& gen_ref, const Eigen::MatrixXd& gen_gen, const Eigen::MatrixXd& ref_ref) {
  require(gen_ref);
  const auto g = gen_ref.rows(), r = gen_ref.cols();
  if (g < 2 || r < 2) throw ValidationError("one_nna: each side needs at least two sets");
  if (gen_gen.rows() != g || gen_gen.cols() != g || ref_ref.rows() != r || ref_ref.cols() != r)
    throw ShapeError("one_nna: distance matrix shapes disagree");
  Eigen::MatrixXd pooled(g + r, g + r);
  pooled << gen_gen, gen_ref, gen_ref.transpose(), ref_ref;
  int correct = 0;
  for (Eigen::Index i = 0; i < pooled.rows(); ++i) {
    const int nn = argmin(pooled.row(i), static_cast<int>(i));
    if ((i < g) == (nn < g)) ++correct;
  }
  return 100.0 * correct / static_cast<double>(pooled.rows());
}

double mmd(const EvalSet& eval, int jobs) {
  eval.validate();
  return mmd(pairwise_chamfer(eval.generated, eval.reference, jobs));
}

double cov(const EvalSet& eval, int jobs) {
  eval.validate();
  return cov(pairwise_chamfer(eval.generated, eval.reference, jobs));
}

double one_nna(const EvalSet& eval, int jobs) {
  eval.validate();
  return one_nna(pairwise_chamfer(eval.generated, eval.reference, jobs),
                 pairwise_chamfer(eval.generated, eval.generated, jobs),
                 pairwise_chamfer(eval.reference, eval.reference, jobs));
}

double jsd(const EvalSet& eval, int resolution) {
  eval.validate();
  if (resolution < 2) throw ValidationError("jsd: resolution must be >= 2");
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
  std::size_t n_gen = 0, n_ref = 0;
  for (const auto* side : {&eval.generated, &eval.reference})
    for (const auto& p : *side)
      if (p.rows() > 0) {
        lo = lo.cwiseMin(p.colwise().minCoeff().transpose());
        hi = hi.cwiseMax(p.colwise().maxCoeff().transpose());
      }
  for (const auto& p : eval.generated) n_gen += p.rows();
  for (const auto& p : eval.reference) n_ref += p.rows();
  if (n_gen == 0 || n_ref == 0) throw ValidationError("jsd: no points on one side");
  const double side = std::max((hi - lo).maxCoeff(), 1e-300);

  const std::size_t cells = static_cast<std::size_t>(resolution) * resolution * resolution;
  auto histogram = [&](const std::vector<Points>& sets, std::size_t total) {
    Eigen::VectorXd h = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cells));
    for (const auto& p : sets)
      for (Eigen::Index i = 0; i < p.rows(); ++i) {
        std::size_t idx = 0;
        for (int d = 0; d < 3; ++d) {
          const int c = std::clamp(static_cast<int>(std::floor((p(i, d) - lo[d]) / side * resolution)), 0, resolution - 1);
          idx = idx * resolution + c;
        }
        h[static_cast<Eigen::Index>(idx)] += 1.0;
      }
    return Eigen::VectorXd(h / static_cast<double>(total));
  };
  const Eigen::VectorXd P = histogram(eval.generated, n_gen), Q = histogram(eval.reference, n_ref);
  double kl_p = 0.0, kl_q = 0.0;
  for (Eigen::Index c = 0; c < P.size(); ++c) {
    const double m = 0.5 * (P[c] + Q[c]);
    if (P[c] > 0) kl_p += P[c] * std::log2(P[c] / m);
    if (Q[c] > 0) kl_q += Q[c] * std::log2(Q[c] / m);
  }
  return std::clamp(0.5 * (kl_p + kl_q), 0.0, 1.0);
}

double apd(const ArticulatedObject& object, const SimConfig& cfg) { return physics_losses(object, cfg).l_phy; }

}  // namespace artdeform
