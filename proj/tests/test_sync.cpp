#include "helpers.hpp"

#include "artdeform/basis.hpp"
#include "artdeform/cage.hpp"
#include "artdeform/error.hpp"
#include "artdeform/fixtures.hpp"
#include "artdeform/sync.hpp"

#include <Eigen/QR>
#include <doctest.h>

using namespace artdeform;
using testing_util::random_matrix;

namespace {

Eigen::MatrixXd oracle_pinv(const Eigen::MatrixXd& a) { return a.completeOrthogonalDecomposition().pseudoInverse(); }

struct ExactModel {
  std::vector<Eigen::MatrixXd> bases, S, Y;
  Eigen::MatrixXd Z;
};

ExactModel exact_model(int M, int K, int A, std::uint64_t seed) {
  ExactModel e;
  e.Z = random_matrix(K, A, seed);
  for (int m = 0; m < M; ++m) {
    e.S.push_back(random_matrix(K, K, seed + 10 + m));
    e.bases.push_back(random_matrix(K, 3 * 7, seed + 100 + m));
    e.Y.push_back(e.S.back() * e.Z);
  }
  return e;
}

}  // namespace

TEST_CASE("sync objective: examples and nested-loop oracle") {
  const ExactModel e = exact_model(2, 3, 4, 1);
  std::vector<Eigen::MatrixXd> S{random_matrix(3, 3, 7), random_matrix(3, 3, 8)};
  const Eigen::MatrixXd Z = random_matrix(3, 4, 9);
  double oracle = 0.0;
  for (int m = 0; m < 2; ++m)
    for (int i = 0; i < 4; ++i) {
      double sq = 0.0;
      for (int c = 0; c < e.bases[m].cols(); ++c) {
        double lhs = 0.0, rhs = 0.0;
        for (int k = 0; k < 3; ++k) {
          double sz = 0.0;
          for (int l = 0; l < 3; ++l) sz += S[m](k, l) * Z(l, i);
          lhs += e.bases[m](k, c) * sz;
          rhs += e.bases[m](k, c) * e.Y[m](k, i);
        }
        sq += (lhs - rhs) * (lhs - rhs);
      }
      oracle += std::sqrt(sq);
    }
  CHECK(std::abs(sync_objective(e.bases, S, Z, e.Y) - oracle) < 1e-12);

  std::vector<Eigen::MatrixXd> zero_b(2, Eigen::MatrixXd::Zero(3, 21));
  CHECK(sync_objective(zero_b, S, Z, e.Y) == 0.0);
  const std::vector<Eigen::MatrixXd> ident(2, Eigen::MatrixXd::Identity(3, 3));
  CHECK(sync_objective(e.bases, ident, Z, {Z, Z}) == 0.0);
  CHECK_THROWS_AS(sync_objective(e.bases, {S[0]}, Z, e.Y), ShapeError);
}

TEST_CASE("optimize_sync_matrix equals Y Z^+") {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(4, 4);
  CHECK((optimize_sync_matrix(I, I) - I).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(optimize_sync_matrix(Eigen::MatrixXd::Zero(4, 6), random_matrix(4, 6, 1)).isZero());

  const Eigen::MatrixXd S_true = random_matrix(4, 4, 2);
  const Eigen::MatrixXd Z = random_matrix(4, 9, 3);
  CHECK((optimize_sync_matrix(Z, S_true * Z) - S_true).cwiseAbs().maxCoeff() < 1e-8);

  for (auto [k, a] : {std::pair{3, 4}, {16, 10}, {5, 3}, {4, 4}}) {
    const Eigen::MatrixXd z = random_matrix(k, a, 10 + k), y = random_matrix(k, a, 20 + a);
    CHECK((optimize_sync_matrix(z, y) - y * oracle_pinv(z)).cwiseAbs().maxCoeff() < 1e-10);
  }
  // rank-deficient Z
  Eigen::MatrixXd z = random_matrix(4, 6, 30);
  z.row(3) = z.row(0) + z.row(1);
  const Eigen::MatrixXd y = random_matrix(4, 6, 31);
  CHECK((optimize_sync_matrix(z, y) - y * oracle_pinv(z)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("optimize_global_coeff: mean of per-convex least squares") {
  std::vector<Eigen::MatrixXd> S(3);
  std::vector<Eigen::VectorXd> y(3);
  for (int m = 0; m < 3; ++m) {
    S[m] = random_matrix(4, 4, 40 + m);
    y[m] = random_matrix(4, 1, 50 + m).col(0);
  }
  Eigen::VectorXd oracle = Eigen::VectorXd::Zero(4);
  for (int m = 0; m < 3; ++m) {
    const Eigen::VectorXd zm = (S[m].transpose() * S[m]).ldlt().solve(S[m].transpose() * y[m]);
    CHECK((S[m].transpose() * (S[m] * zm - y[m])).norm() < 1e-8);
    oracle += zm / 3.0;
  }
  CHECK((optimize_global_coeff(S, y) - oracle).cwiseAbs().maxCoeff() < 1e-10);

  // rank-deficient S: residual still orthogonal to range(S)
  Eigen::MatrixXd s = random_matrix(4, 4, 60);
  s.col(2) = s.col(0) - s.col(1);
  const Eigen::VectorXd yy = random_matrix(4, 1, 61).col(0);
  const Eigen::VectorXd z = optimize_global_coeff({s}, {yy});
  CHECK((s.transpose() * (s * z - yy)).norm() < 1e-8);

  const std::vector<Eigen::MatrixXd> ident(3, Eigen::MatrixXd::Identity(4, 4));
  CHECK((optimize_global_coeff(ident, y) - (y[0] + y[1] + y[2]) / 3.0).norm() < 1e-14);
  CHECK((optimize_global_coeff({S[0]}, {y[0]}) - S[0].inverse() * y[0]).norm() < 1e-10);

  std::vector<Eigen::MatrixXd> Y{random_matrix(4, 5, 70), random_matrix(4, 5, 71), random_matrix(4, 5, 72)};
  const Eigen::MatrixXd Zall = optimize_global_coeffs(S, Y);
  for (int i = 0; i < 5; ++i)
    CHECK((Zall.col(i) - optimize_global_coeff(S, {Y[0].col(i), Y[1].col(i), Y[2].col(i)})).norm() < 1e-12);
}

TEST_CASE("synchronize converges on exact-model data") {
  for (int M : {2, 5})
    for (int K : {3, 16})
      for (int A : {4, 10}) {
        CAPTURE(M);
        CAPTURE(K);
        CAPTURE(A);
        const ExactModel e = exact_model(M, K, A, 1000 + 100 * M + 10 * K + A);
        const SyncState st = synchronize(e.bases, e.Y, 100);
        CHECK(st.num_convexes() == M);
        CHECK(st.num_targets() == A);
        CHECK(st.objective_history.size() == 102);
        CHECK(st.objective_history.back() < 1e-6 * (st.objective_history.front() + 1e-12));
        CHECK(std::abs(sync_objective(e.bases, st.S, st.global_coeffs, e.Y) - st.objective_history.back()) < 1e-12);
      }
}

TEST_CASE("synchronize: single convex, zero iterations, permutation, jobs") {
  const Eigen::MatrixXd Y = random_matrix(4, 6, 5);
  const Eigen::MatrixXd B = random_matrix(4, 12, 6);
  const SyncState one = synchronize({B}, {Y}, 5);
  // S Z can reproduce Y exactly when Z spans Y's row space, so the best residual is 0
  for (std::size_t i = 1; i < one.objective_history.size(); ++i) CHECK(std::abs(one.objective_history[i]) < 1e-9);

  const ExactModel e = exact_model(3, 4, 5, 77);
  const SyncState zero = synchronize(e.bases, e.Y, 0);
  CHECK(zero.objective_history.size() == 2);
  Eigen::MatrixXd mean = (e.Y[0] + e.Y[1] + e.Y[2]) / 3.0;
  CHECK((zero.global_coeffs - mean).norm() < 1e-14);
  for (int m = 0; m < 3; ++m) CHECK((zero.S[m] - e.Y[m] * oracle_pinv(mean)).cwiseAbs().maxCoeff() < 1e-10);

  // noisy data so the objective is not trivially zero
  std::vector<Eigen::MatrixXd> Yn = e.Y, Bn = e.bases;
  for (int m = 0; m < 3; ++m) Yn[m] += 0.3 * random_matrix(4, 5, 300 + m);
  const SyncState a = synchronize(Bn, Yn, 20);
  std::vector<Eigen::MatrixXd> Yp{Yn[2], Yn[0], Yn[1]}, Bp{Bn[2], Bn[0], Bn[1]};
  const SyncState b = synchronize(Bp, Yp, 20);
  CHECK(a.objective_history.back() == doctest::Approx(b.objective_history.back()).epsilon(1e-9));
  const SyncState c = synchronize(Bn, Yn, 20, 3);
  CHECK(c.objective_history == a.objective_history);

  CHECK_THROWS_AS(synchronize({}, {}, 3), ValidationError);
  CHECK_THROWS_AS(synchronize({}, {Y, random_matrix(3, 6, 1)}, 3), ShapeError);
}

TEST_CASE("synced bases compose with S") {
  const Eigen::MatrixXd B = random_matrix(5, 3 * 8, 1), S = random_matrix(5, 5, 2);
  const Eigen::VectorXd z = random_matrix(5, 1, 3).col(0);
  CHECK((synced_bases(B, S).transpose() * z - B.transpose() * (S * z)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(synced_bases(B, Eigen::MatrixXd::Identity(5, 5)) == B);
  CHECK((synced_bases(B, S).transpose() * Eigen::VectorXd::Zero(5)).isZero());
  CHECK_THROWS_AS(synced_bases(B, Eigen::MatrixXd::Identity(4, 4)), ShapeError);
}

TEST_CASE("eyeglass rims deform mirror-consistently after synchronization") {
  const int K = 4;
  const ArticulatedObject ref = toy_eyeglasses(0);
  const auto& rims = ref.parts()[0].convexes;
  FitConfig cfg;
  cfg.chamfer_samples = 0;
  cfg.outer_iters = 5;
  std::vector<Cage> cages;
  std::vector<Eigen::MatrixXd> bases, Y;
  for (int m = 0; m < 2; ++m) {
    cages.push_back(build_cage(rims[m], CageTemplate::icosphere()));
    std::vector<ConvexPair> pairs;
    for (int v = 1; v <= 4; ++v)
      pairs.push_back(prepare_pair(cages[m], rims[m], toy_eyeglasses(v).parts()[0].convexes[m], 0, 0));
    const BasisFit fit = fit_bases(pairs, BasisSet::random(K, 42, 0.02, 5 + m), cfg);
    bases.push_back(fit.bases.bases);
    Eigen::MatrixXd y(K, 4);
    for (int i = 0; i < 4; ++i) y.col(i) = fit.coeffs[i];
    Y.push_back(y);
  }
  // reflected partner of each left cage vertex on the right cage
  std::vector<int> partner(42);
  for (int t = 0; t < 42; ++t) {
    Vec3 p = cages[0].mesh.vertex(t);
    p.x() = -p.x();
    double best = 1e300;
    for (int u = 0; u < 42; ++u)
      if (const double d = (cages[1].mesh.vertex(u) - p).squaredNorm(); d < best) {
        best = d;
        partner[t] = u;
      }
  }
  auto discrepancy = [&](const std::vector<Eigen::MatrixXd>& ops, const Eigen::MatrixXd& Z) {
    double total = 0.0;
    for (int i = 0; i < Z.cols(); ++i) {
      const Eigen::VectorXd l = ops[0].transpose() * Z.col(i), r = ops[1].transpose() * Z.col(i);
      for (int t = 0; t < 42; ++t) {
        Vec3 a = l.segment<3>(3 * t);
        a.x() = -a.x();
        total += (a - r.segment<3>(3 * partner[t])).norm();
      }
    }
    return total;
  };
  const SyncState st = synchronize(bases, Y, 100);
  const Eigen::MatrixXd z0 = (Y[0] + Y[1]) / 2.0;
  const double before = discrepancy(bases, z0);
  const double after = discrepancy({synced_bases(bases[0], st.S[0]), synced_bases(bases[1], st.S[1])}, st.global_coeffs);
  MESSAGE("reflection discrepancy before " << before << " after " << after);
  CHECK(after < before);
}

TEST_CASE("synchronize stays bounded when one convex never deforms") {
  // the zero convex leaves the scale of (S, Z) free; it must not drift
  const Eigen::MatrixXd Y1 = random_matrix(16, 4, 41);
  const std::vector<Eigen::MatrixXd> Y{Eigen::MatrixXd::Zero(16, 4), Y1};
  const std::vector<Eigen::MatrixXd> B{random_matrix(16, 126, 42), random_matrix(16, 126, 43)};
  const SyncState st = synchronize(B, Y, 100);
  CHECK(st.global_coeffs.norm() == doctest::Approx((0.5 * Y1).norm()).epsilon(1e-9));
  CHECK(st.S[1].norm() < 1e3);
  CHECK(st.objective_history.back() < 1e-9);
}
