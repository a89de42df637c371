#include "artdeform/basis.hpp"

#include "artdeform/error.hpp"
#include "artdeform/linalg.hpp"
#include "artdeform/log.hpp"
#include "artdeform/parallel.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <random>

namespace artdeform {

Points BasisSet::cage_offsets(const Eigen::VectorXd& z) const {
  if (z.size() != bases.rows()) throw ShapeError("cage_offsets: coefficient length != basis count");
  const Eigen::VectorXd flat = bases.transpose() * z;
  Points out(num_cage_vertices(), 3);
  for (int t = 0; t < out.rows(); ++t) out.row(t) << flat[3 * t], flat[3 * t + 1], flat[3 * t + 2];
  return out;
}

double BasisSet::max_normalized_dot() const {
  double worst = 0.0;
  for (int i = 0; i < num_bases(); ++i)
    for (int j = i + 1; j < num_bases(); ++j) {
      const double denom = bases.row(i).norm() * bases.row(j).norm();
      if (denom > 0) worst = std::max(worst, std::abs(bases.row(i).dot(bases.row(j))) / denom);
    }
  return worst;
}

BasisSet BasisSet::zeros(int k, int num_cage_vertices) { return {Eigen::MatrixXd::Zero(k, 3 * num_cage_vertices)}; }

BasisSet BasisSet::random(int k, int num_cage_vertices, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  BasisSet b = zeros(k, num_cage_vertices);
  for (Eigen::Index i = 0; i < b.bases.size(); ++i) b.bases.data()[i] = normal(rng);
  return b;
}

void FitConfig::validate() const {
  if (lambda_orth < 0 || lambda_sp < 0 || lambda_phy < 0) throw ValidationError("FitConfig: lambdas must be >= 0");
  if (outer_iters < 0 || coeff_rounds < 1) throw ValidationError("FitConfig: iteration counts out of range");
}

Points ConvexPair::deformed(const Points& cage_offsets) const {
  Points p = source_points;
  p.noalias() += sample_phi * cage_offsets;
  return p;
}

ConvexPair prepare_pair(const Cage& cage, const TriMesh& source, const TriMesh& target, int samples,
                        std::uint64_t seed) {
  if (cage.phi.rows() != source.num_vertices()) throw ShapeError("prepare_pair: cage does not belong to source convex");
  ConvexPair pair;
  if (samples <= 0) {
    pair.sample_phi = cage.phi;
    pair.source_points = source.vertices();
    pair.target_points = target.vertices();
    return pair;
  }
  const SurfaceSamples s = sample_surface(source, samples, seed);
  pair.source_points = s.points;
  pair.sample_phi.resize(samples, cage.phi.cols());
  const auto& f = source.faces();
  for (int i = 0; i < samples; ++i) {
    const int fi = s.face[i];
    pair.sample_phi.row(i) = s.bary(i, 0) * cage.phi.row(f(fi, 0)) + s.bary(i, 1) * cage.phi.row(f(fi, 1)) +
                             s.bary(i, 2) * cage.phi.row(f(fi, 2));
  }
  if (same_connectivity(source, target))
    pair.target_points = evaluate_samples(target, s);
  else
    pair.target_points = sample_surface(target, samples, seed ^ 0x9e3779b97f4a7c15ULL).points;
  return pair;
}

namespace {

/// Effect of every basis on every sample: row 3i + d, column k.
Eigen::MatrixXd sample_effects(const BasisSet& bases, const ConvexPair& pair) {
  const int ns = static_cast<int>(pair.source_points.rows());
  const int k = bases.num_bases();
  Eigen::MatrixXd e(3 * ns, k);
  for (int b = 0; b < k; ++b) {
    const Points off = pair.sample_phi * bases.cage_offsets(Eigen::VectorXd::Unit(k, b));
    for (int i = 0; i < ns; ++i) e.block<3, 1>(3 * i, b) = off.row(i).transpose();
  }
  return e;
}

Points displaced(const ConvexPair& pair, const Eigen::MatrixXd& effects, const Eigen::VectorXd& z) {
  const Eigen::VectorXd flat = effects * z;
  Points p = pair.source_points;
  for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) += flat.segment<3>(3 * i).transpose();
  return p;
}

}  // namespace

CoefficientFit fit_coefficient(const BasisSet& bases, const ConvexPair& pair, const FitConfig& cfg,
                               const Eigen::VectorXd& start) {
  const int k = bases.num_bases();
  if (bases.num_cage_vertices() != pair.sample_phi.cols()) throw ShapeError("fit_coefficient: basis/cage size mismatch");
  const Eigen::MatrixXd effects = sample_effects(bases, pair);
  const Points& q = pair.target_points;
  const double ns = static_cast<double>(pair.source_points.rows());
  const double nq = static_cast<double>(q.rows());

  CoefficientFit fit;
  fit.z = Eigen::VectorXd::Zero(k);
  ChamferMatches m = chamfer_matches(pair.source_points, q);
  if (start.size() == k) {
    ChamferMatches ms = chamfer_matches(displaced(pair, effects, start), q);
    if (ms.value() < m.value()) {
      fit.z = start;
      m = std::move(ms);
    }
  }
  fit.chamfer = m.value();
  fit.history.push_back(fit.chamfer);

  for (int round = 1; round <= cfg.coeff_rounds; ++round) {
    fit.rounds = round;
    Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(k, k);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
    auto accumulate = [&](int i, const Eigen::RowVector3d& target, double w) {
      const auto ei = effects.middleRows(3 * i, 3);
      normal.noalias() += w * ei.transpose() * ei;
      rhs.noalias() += w * ei.transpose() * (target - pair.source_points.row(i)).transpose();
    };
    for (int i = 0; i < pair.source_points.rows(); ++i) accumulate(i, q.row(m.p_to_q[i]), 1.0 / ns);
    for (int j = 0; j < q.rows(); ++j) accumulate(m.q_to_p[j], q.row(j), 1.0 / nq);

    const Eigen::VectorXd z_new = lsq_min_norm(normal, rhs);
    ChamferMatches m_new = chamfer_matches(displaced(pair, effects, z_new), q);
    const double improvement = fit.chamfer - m_new.value();
    if (improvement > 0) {
      fit.z = z_new;
      fit.chamfer = m_new.value();
      m = std::move(m_new);
    }
    fit.history.push_back(fit.chamfer);
    if (improvement < cfg.coeff_tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

CoefficientFit fit_coefficient(const BasisSet& bases, const Cage& cage, const TriMesh& source, const TriMesh& target,
                               const FitConfig& cfg) {
  return fit_coefficient(bases, prepare_pair(cage, source, target, cfg.chamfer_samples, cfg.seed), cfg);
}

Eigen::VectorXd lsq_coefficient(const BasisSet& bases, const Points& cage_offsets) {
  if (cage_offsets.rows() != bases.num_cage_vertices()) throw ShapeError("lsq_coefficient: offset rows mismatch");
  Eigen::VectorXd flat(3 * cage_offsets.rows());
  for (Eigen::Index t = 0; t < cage_offsets.rows(); ++t) flat.segment<3>(3 * t) = cage_offsets.row(t).transpose();
  return lsq_min_norm(bases.bases.transpose(), flat);
}

namespace {
constexpr double kNormGuard = 1e-12;
}

Regularizers regularizers(const BasisSet& b) {
  Regularizers r;
  const int k = b.num_bases();
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      const double cos = b.bases.row(i).dot(b.bases.row(j)) / (b.bases.row(i).norm() * b.bases.row(j).norm() + kNormGuard);
      r.orth += cos * cos;
    }
  if (b.bases.size() > 0) r.sparsity = b.bases.cwiseAbs().sum() / static_cast<double>(b.bases.size());
  return r;
}

Eigen::MatrixXd regularizer_gradient(const BasisSet& b, double lambda_orth, double lambda_sp) {
  const int k = b.num_bases();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(b.bases.rows(), b.bases.cols());
  if (lambda_orth > 0) {
    Eigen::VectorXd norms(k);
    for (int i = 0; i < k; ++i) norms[i] = b.bases.row(i).norm();
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j) {
        const double dot = b.bases.row(i).dot(b.bases.row(j));
        const double denom = norms[i] * norms[j] + kNormGuard;
        const double cos = dot / denom;
        // d(cos^2) = 2 cos * (d dot / denom - dot * d denom / denom^2)
        const double f = 2.0 * cos / denom;
        Eigen::RowVectorXd gi = b.bases.row(j);
        Eigen::RowVectorXd gj = b.bases.row(i);
        if (norms[i] > 0) gi -= (dot / denom) * norms[j] * b.bases.row(i) / norms[i];
        if (norms[j] > 0) gj -= (dot / denom) * norms[i] * b.bases.row(j) / norms[j];
        g.row(i) += lambda_orth * f * gi;
        g.row(j) += lambda_orth * f * gj;
      }
  }
  if (lambda_sp > 0 && b.bases.size() > 0)
    g += (lambda_sp / static_cast<double>(b.bases.size())) * b.bases.unaryExpr([](double x) {
      return static_cast<double>((x > 0) - (x < 0));
    });
  return g;
}

BasisObjective::BasisObjective(const std::vector<ConvexPair>& pairs, const CoeffSet& coeffs,
                               const std::vector<ChamferMatches>& matches, double lambda_orth, double lambda_sp)
    : pairs_(pairs), coeffs_(coeffs), matches_(matches), lambda_orth_(lambda_orth), lambda_sp_(lambda_sp) {
  if (pairs.size() != coeffs.size() || pairs.size() != matches.size())
    throw ShapeError("BasisObjective: pairs, coefficients and matches must align");
  if (pairs.empty()) throw ValidationError("BasisObjective: no pairs");
}

double BasisObjective::data(const BasisSet& b) const {
  double total = 0.0;
  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    const auto& pair = pairs_[p];
    const auto& m = matches_[p];
    const Points pts = pair.deformed(b.cage_offsets(coeffs_[p]));
    double fwd = 0.0, bwd = 0.0;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) fwd += (pts.row(i) - pair.target_points.row(m.p_to_q[i])).squaredNorm();
    for (Eigen::Index j = 0; j < pair.target_points.rows(); ++j)
      bwd += (pts.row(m.q_to_p[j]) - pair.target_points.row(j)).squaredNorm();
    total += fwd / static_cast<double>(pts.rows()) + bwd / static_cast<double>(pair.target_points.rows());
  }
  return total / static_cast<double>(pairs_.size());
}

double BasisObjective::value(const BasisSet& b) const {
  const Regularizers r = regularizers(b);
  double v = data(b) + lambda_orth_ * r.orth + lambda_sp_ * r.sparsity;
  if (linear_term.size() == b.bases.size()) v += (linear_term.array() * b.bases.array()).sum();
  return v;
}

Eigen::MatrixXd BasisObjective::data_gradient(const BasisSet& b) const {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(b.bases.rows(), b.bases.cols());
  const double inv_pairs = 1.0 / static_cast<double>(pairs_.size());
  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    const auto& pair = pairs_[p];
    const auto& m = matches_[p];
    const Points pts = pair.deformed(b.cage_offsets(coeffs_[p]));
    const double ns = static_cast<double>(pts.rows()), nq = static_cast<double>(pair.target_points.rows());
    Points residual = Points::Zero(pts.rows(), 3);
    for (Eigen::Index i = 0; i < pts.rows(); ++i)
      residual.row(i) += (2.0 / ns) * (pts.row(i) - pair.target_points.row(m.p_to_q[i]));
    for (Eigen::Index j = 0; j < pair.target_points.rows(); ++j)
      residual.row(m.q_to_p[j]) += (2.0 / nq) * (pts.row(m.q_to_p[j]) - pair.target_points.row(j));
    const Eigen::MatrixXd g_cage = pair.sample_phi.transpose() * residual;  // N_t x 3
    Eigen::RowVectorXd flat(g_cage.size());
    for (Eigen::Index t = 0; t < g_cage.rows(); ++t) flat.segment<3>(3 * t) = g_cage.row(t);
    g.noalias() += inv_pairs * coeffs_[p] * flat;
  }
  return g;
}

Eigen::MatrixXd BasisObjective::gradient(const BasisSet& b) const {
  Eigen::MatrixXd g = data_gradient(b) + regularizer_gradient(b, lambda_orth_, lambda_sp_);
  if (linear_term.size() == b.bases.size()) g += linear_term;
  return g;
}

BasisSet BasisObjective::solve_data(const BasisSet& current) const {
  const int k = current.num_bases();
  const int nt = current.num_cage_vertices();
  const int n = k * nt;
  Eigen::MatrixXd hessian = Eigen::MatrixXd::Zero(n, n);
  const double inv_pairs = 1.0 / static_cast<double>(pairs_.size());
  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    const auto& pair = pairs_[p];
    const auto& m = matches_[p];
    const double ns = static_cast<double>(pair.source_points.rows()), nq = static_cast<double>(pair.target_points.rows());
    Eigen::VectorXd c = Eigen::VectorXd::Constant(pair.source_points.rows(), 1.0 / ns);
    for (int idx : m.q_to_p) c[idx] += 1.0 / nq;
    const Eigen::MatrixXd phi_w = pair.sample_phi.transpose() * c.asDiagonal() * pair.sample_phi;  // N_t x N_t
    const Eigen::MatrixXd zz = coeffs_[p] * coeffs_[p].transpose();
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        if (zz(a, b) != 0.0) hessian.block(a * nt, b * nt, nt, nt).noalias() += (2.0 * inv_pairs * zz(a, b)) * phi_w;
  }
  double mean_diag = hessian.diagonal().mean();
  if (!(mean_diag > 0.0)) return current;  // data term is flat in B (all coefficients zero)
  hessian.diagonal().array() += 1e-9 * mean_diag;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);

  Eigen::MatrixXd g = data_gradient(current);
  if (linear_term.size() == g.size()) g += linear_term;
  BasisSet next = current;
  for (int d = 0; d < 3; ++d) {
    Eigen::VectorXd rhs(n);
    for (int a = 0; a < k; ++a)
      for (int t = 0; t < nt; ++t) rhs[a * nt + t] = -g(a, 3 * t + d);
    const Eigen::VectorXd step = ldlt.solve(rhs);
    for (int a = 0; a < k; ++a)
      for (int t = 0; t < nt; ++t) next.bases(a, 3 * t + d) += step[a * nt + t];
  }
  if (!next.bases.allFinite()) throw NumericError("basis data solve produced non-finite values");
  return next;
}

BasisSet update_bases(const std::vector<ConvexPair>& pairs, const BasisSet& current, const CoeffSet& coeffs,
                      const FitConfig& cfg, const Eigen::MatrixXd& linear_term) {
  std::vector<ChamferMatches> matches;
  matches.reserve(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p)
    matches.push_back(chamfer_matches(pairs[p].deformed(current.cage_offsets(coeffs[p])), pairs[p].target_points));

  BasisObjective data_only(pairs, coeffs, matches, 0.0, 0.0);
  BasisSet b = data_only.solve_data(current);

  BasisObjective full(pairs, coeffs, matches, cfg.lambda_orth, cfg.lambda_sp);
  full.linear_term = linear_term;
  double f = full.value(b);
  double eta = 0.0;
  for (int step = 0; step < cfg.reg_steps; ++step) {
    const Eigen::MatrixXd g = full.gradient(b);
    const double gg = g.squaredNorm();
    if (!(gg > 0.0)) break;
    if (eta == 0.0) eta = 0.01 * std::max(b.bases.norm(), 1e-6) / std::sqrt(gg);
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving) {
      BasisSet trial{b.bases - eta * g};
      const double ft = full.value(trial);
      if (ft <= f - 1e-4 * eta * gg) {
        b = std::move(trial);
        f = ft;
        accepted = true;
        break;
      }
      eta *= 0.5;
    }
    if (!accepted) break;
    eta *= 2.0;
  }
  return b;
}

std::vector<CoefficientFit> fit_all_coefficients(const BasisSet& bases, const std::vector<ConvexPair>& pairs,
                                                 const FitConfig& cfg, const CoeffSet& warm, int jobs) {
  std::vector<CoefficientFit> fits(pairs.size());
  parallel_for(static_cast<int>(pairs.size()), jobs, [&](int p) {
    fits[p] = fit_coefficient(bases, pairs[p], cfg, warm.size() == pairs.size() ? warm[p] : Eigen::VectorXd());
  });
  return fits;
}

double convex_loss(const BasisSet& bases, const std::vector<ConvexPair>& pairs, const CoeffSet& coeffs) {
  if (pairs.size() != coeffs.size()) throw ShapeError("convex_loss: pairs and coefficients must align");
  if (pairs.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t p = 0; p < pairs.size(); ++p)
    total += chamfer_distance(pairs[p].deformed(bases.cage_offsets(coeffs[p])), pairs[p].target_points);
  return total / static_cast<double>(pairs.size());
}

BasisFit fit_bases(const std::vector<ConvexPair>& pairs, const BasisSet& init, const FitConfig& cfg, int jobs) {
  cfg.validate();
  if (pairs.empty()) throw ValidationError("fit_bases: need at least one convex pair");
  for (const auto& p : pairs)
    if (p.sample_phi.cwiseAbs().maxCoeff() == 0.0) throw ValidationError("fit_bases: degenerate cage (zero interpolation matrix)");

  BasisFit out;
  out.bases = init;
  {
    double total = 0.0;
    for (const auto& p : pairs) total += chamfer_distance(p.source_points, p.target_points);
    out.identity_loss = total / static_cast<double>(pairs.size());
  }

  CoeffSet warm;
  for (int it = 0;; ++it) {
    const auto fits = fit_all_coefficients(out.bases, pairs, cfg, warm, jobs);
    out.coeffs.clear();
    double loss = 0.0;
    for (const auto& f : fits) {
      out.coeffs.push_back(f.z);
      loss += f.chamfer;
    }
    loss /= static_cast<double>(pairs.size());
    const double prev = out.loss_history.empty() ? loss : out.loss_history.back();
    out.loss_history.push_back(loss);
    out.final_loss = loss;
    warm = out.coeffs;
    if (it >= cfg.outer_iters) break;
    if (it > 0 && prev - loss < cfg.rel_tol * prev) break;
    out.bases = update_bases(pairs, out.bases, out.coeffs, cfg);
  }
  return out;
}

}  // namespace artdeform
