#include "artdeform/sync.hpp"

#include "artdeform/error.hpp"
#include "artdeform/linalg.hpp"
#include "artdeform/parallel.hpp"

namespace artdeform {

namespace {

void check_shapes(const std::vector<Eigen::MatrixXd>& bases, const std::vector<Eigen::MatrixXd>& Y) {
  if (Y.empty()) throw ValidationError("synchronize: no convexes");
  if (!bases.empty() && bases.size() != Y.size()) throw ShapeError("synchronize: basis and coefficient counts differ");
  const auto k = Y.front().rows(), a = Y.front().cols();
  if (a < 1) throw ValidationError("synchronize: no targets");
  for (std::size_t m = 0; m < Y.size(); ++m) {
    if (Y[m].rows() != k || Y[m].cols() != a) throw ShapeError("synchronize: coefficient blocks differ in shape");
    if (!bases.empty() && bases[m].rows() != k) throw ShapeError("synchronize: basis count differs from coefficient length");
  }
}

}  // namespace

double sync_objective(const std::vector<Eigen::MatrixXd>& bases, const std::vector<Eigen::MatrixXd>& S,
                      const Eigen::MatrixXd& Z, const std::vector<Eigen::MatrixXd>& Y) {
  check_shapes(bases, Y);
  if (S.size() != Y.size()) throw ShapeError("sync_objective: one S per convex required");
  double total = 0.0;
  for (std::size_t m = 0; m < Y.size(); ++m) {
    if (S[m].rows() != Y[m].rows() || S[m].cols() != Z.rows() || Z.cols() != Y[m].cols())
      throw ShapeError("sync_objective: S/Z/Y shapes disagree");
    const Eigen::MatrixXd diff = S[m] * Z - Y[m];
    const Eigen::MatrixXd r = bases.empty() ? diff : Eigen::MatrixXd(bases[m].transpose() * diff);
    for (Eigen::Index i = 0; i < r.cols(); ++i) total += r.col(i).norm();
  }
  return total;
}

Eigen::MatrixXd optimize_sync_matrix(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Ym) {
  if (Z.cols() != Ym.cols() || Z.cols() < 1) throw ShapeError("optimize_sync_matrix: Z and Y_m need the same target count");
  const Svd z = svd(Z);
  const Svd y = svd(Ym);
  const Eigen::VectorXd s_plus = pinv_singular_values(z.s);
  return y.U * y.s.asDiagonal() * (y.V.transpose() * z.V) * s_plus.asDiagonal() * z.U.transpose();
}

Eigen::VectorXd optimize_global_coeff(const std::vector<Eigen::MatrixXd>& S, const std::vector<Eigen::VectorXd>& y) {
  if (S.empty() || S.size() != y.size()) throw ShapeError("optimize_global_coeff: one y per S required");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(S.front().cols());
  for (std::size_t m = 0; m < S.size(); ++m) sum += lsq_min_norm(S[m], y[m]);
  return sum / static_cast<double>(S.size());
}

Eigen::MatrixXd optimize_global_coeffs(const std::vector<Eigen::MatrixXd>& S, const std::vector<Eigen::MatrixXd>& Y) {
  if (S.empty() || S.size() != Y.size()) throw ShapeError("optimize_global_coeffs: one Y per S required");
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(S.front().cols(), Y.front().cols());
  for (std::size_t m = 0; m < S.size(); ++m) Z += pinv(S[m]) * Y[m];
  return Z / static_cast<double>(S.size());
}

SyncState synchronize(const std::vector<Eigen::MatrixXd>& bases, const std::vector<Eigen::MatrixXd>& Y, int iters, int jobs) {
  check_shapes(bases, Y);
  if (iters < 0) throw ValidationError("synchronize: iters must be >= 0");
  const int M = static_cast<int>(Y.size());
  const auto k = Y.front().rows();
  SyncState st;
  st.global_coeffs = Eigen::MatrixXd::Zero(k, Y.front().cols());
  for (const auto& y : Y) st.global_coeffs += y;
  st.global_coeffs /= static_cast<double>(M);
  st.S.assign(M, Eigen::MatrixXd::Identity(k, k));
  st.objective_history.push_back(sync_objective(bases, st.S, st.global_coeffs, Y));

  auto alg1 = [&] { parallel_for(M, jobs, [&](int m) { st.S[m] = optimize_sync_matrix(st.global_coeffs, Y[m]); }); };
  alg1();
  st.objective_history.push_back(sync_objective(bases, st.S, st.global_coeffs, Y));
  // (S_m G, G^-1 Z) fits equally well, so with few informative convexes the alternation
  // drifts in scale until S overflows. Holding |Z| at its initial norm pins the scalar part
  // of that freedom; the S update rescales S to match, leaving the objective unchanged.
  const double z_norm = st.global_coeffs.norm();
  for (int it = 0; it < iters; ++it) {
    st.global_coeffs = optimize_global_coeffs(st.S, Y);
    const double n = st.global_coeffs.norm();
    if (z_norm > 0.0 && n > 0.0) st.global_coeffs *= z_norm / n;
    alg1();
    st.objective_history.push_back(sync_objective(bases, st.S, st.global_coeffs, Y));
  }
  return st;
}

Eigen::MatrixXd synced_bases(const Eigen::MatrixXd& bases, const Eigen::MatrixXd& S) {
  if (S.rows() != bases.rows()) throw ShapeError("synced_bases: S rows must equal basis count");
  return S.transpose() * bases;
}

}  // namespace artdeform
