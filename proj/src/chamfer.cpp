#include "artdeform/chamfer.hpp"

#include "artdeform/error.hpp"
#include "artdeform/kdtree.hpp"

namespace artdeform {

ChamferMatches chamfer_matches(const Points& p, const Points& q) {
  if (p.rows() == 0 || q.rows() == 0) throw ValidationError("chamfer_distance: empty point set");
  ChamferMatches m;
  m.p_to_q.resize(p.rows());
  m.q_to_p.resize(q.rows());
  const KdTree tq(q), tp(p);
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const auto hit = tq.nearest(p.row(i).transpose());
    m.p_to_q[i] = hit.index;
    m.forward += hit.squared_distance;
  }
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    const auto hit = tp.nearest(q.row(i).transpose());
    m.q_to_p[i] = hit.index;
    m.backward += hit.squared_distance;
  }
  m.forward /= static_cast<double>(p.rows());
  m.backward /= static_cast<double>(q.rows());
  return m;
}

double chamfer_distance(const Points& p, const Points& q) { return chamfer_matches(p, q).value(); }

}  // namespace artdeform
