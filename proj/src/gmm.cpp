#include "artdeform/gmm.hpp"

#include "artdeform/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace artdeform {

namespace {

double log_normal_diag(const Eigen::VectorXd& x, const GaussianMixture::Component& c) {
  const double two_pi = 2.0 * std::numbers::pi;
  double s = 0.0;
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    const double r = x[d] - c.mean[d];
    s += r * r / c.variance[d] + std::log(two_pi * c.variance[d]);
  }
  return -0.5 * s;
}

double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

/// Responsibilities (n x k) and the total log-likelihood.
double e_step(const GaussianMixture& g, const std::vector<Eigen::VectorXd>& data, Eigen::MatrixXd& resp) {
  const int n = static_cast<int>(data.size()), k = static_cast<int>(g.components.size());
  resp.resize(n, k);
  double total = 0.0;
  Eigen::VectorXd row(k);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) row[j] = std::log(g.components[j].weight) + log_normal_diag(data[i], g.components[j]);
    const double lse = log_sum_exp(row);
    total += lse;
    resp.row(i) = (row.array() - lse).exp().transpose();
  }
  return total;
}

}  // namespace

double GaussianMixture::log_likelihood(const std::vector<Eigen::VectorXd>& data) const {
  Eigen::MatrixXd resp;
  return e_step(*this, data, resp);
}

GaussianMixture fit_gmm(const std::vector<Eigen::VectorXd>& data, int n_components, const GmmConfig& cfg) {
  if (data.empty()) throw ValidationError("fit_gmm: empty coefficient set");
  if (n_components < 1) throw ValidationError("fit_gmm: need at least one component");
  const int n = static_cast<int>(data.size());
  const Eigen::Index dim = data.front().size();
  for (const auto& x : data)
    if (x.size() != dim) throw ShapeError("fit_gmm: coefficient vectors differ in length");
  const int k = std::min(n_components, n);

  // k-means++ seeding
  std::mt19937_64 rng(cfg.seed);
  std::vector<Eigen::VectorXd> centers{data[std::uniform_int_distribution<int>(0, n - 1)(rng)]};
  while (static_cast<int>(centers.size()) < k) {
    std::vector<double> d2(n);
    for (int i = 0; i < n; ++i) {
      d2[i] = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) d2[i] = std::min(d2[i], (data[i] - c).squaredNorm());
    }
    double total = 0.0;
    for (double v : d2) total += v;
    int pick = 0;
    if (total > 0.0) {
      pick = std::discrete_distribution<int>(d2.begin(), d2.end())(rng);
    } else {
      pick = static_cast<int>(centers.size());  // all points coincide with centers
    }
    centers.push_back(data[pick]);
  }

  // Lloyd refinement
  std::vector<int> label(n, 0);
  for (int it = 0; it < 100; ++it) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int j = 0; j < k; ++j) {
        const double d = (data[i] - centers[j]).squaredNorm();
        if (d < best_d) best_d = d, best = j;
      }
      changed |= label[i] != best;
      label[i] = best;
    }
    for (int j = 0; j < k; ++j) {
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
      int count = 0;
      for (int i = 0; i < n; ++i)
        if (label[i] == j) sum += data[i] - data[0], ++count;
      if (count > 0) centers[j] = data[0] + sum / count;
    }
    if (!changed && it > 0) break;
  }

  GaussianMixture g;
  for (int j = 0; j < k; ++j) {
    GaussianMixture::Component c;
    c.mean = centers[j];
    c.variance = Eigen::VectorXd::Zero(dim);
    int count = 0;
    for (int i = 0; i < n; ++i)
      if (label[i] == j) c.variance += (data[i] - c.mean).cwiseAbs2(), ++count;
    c.variance = (count > 0 ? (c.variance / count).eval() : c.variance).cwiseMax(cfg.variance_floor);
    c.weight = std::max(count, 1) / static_cast<double>(n);
    g.components.push_back(std::move(c));
  }
  double wsum = 0.0;
  for (const auto& c : g.components) wsum += c.weight;
  for (auto& c : g.components) c.weight /= wsum;

  Eigen::MatrixXd resp;
  double prev = e_step(g, data, resp);
  for (int it = 0; it < cfg.max_iters; ++it) {
    for (int j = 0; j < k; ++j) {
      auto& c = g.components[j];
      const double nk = resp.col(j).sum();
      if (nk <= 0.0) continue;
      // accumulate relative to data[0] so identical inputs reproduce their value exactly
      Eigen::VectorXd shift = Eigen::VectorXd::Zero(dim);
      for (int i = 0; i < n; ++i) shift += resp(i, j) * (data[i] - data[0]);
      const Eigen::VectorXd mean = data[0] + shift / nk;
      Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
      for (int i = 0; i < n; ++i) var += resp(i, j) * (data[i] - mean).cwiseAbs2();
      c.mean = mean;
      c.variance = (var / nk).cwiseMax(cfg.variance_floor);
      c.weight = nk / n;
    }
    wsum = 0.0;
    for (const auto& c : g.components) wsum += c.weight;
    for (auto& c : g.components) c.weight /= wsum;
    const double ll = e_step(g, data, resp);
    if (std::abs(ll - prev) < cfg.tol) break;
    prev = ll;
  }
  return g;
}

Eigen::VectorXd sample_gmm(const GaussianMixture& gmm, std::uint64_t seed) {
  if (gmm.components.empty()) throw ValidationError("sample_gmm: empty mixture");
  std::mt19937_64 rng(seed);
  std::vector<double> w;
  for (const auto& c : gmm.components) w.push_back(c.weight);
  const auto& c = gmm.components[std::discrete_distribution<int>(w.begin(), w.end())(rng)];
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd x(c.mean.size());
  for (Eigen::Index d = 0; d < x.size(); ++d) x[d] = c.mean[d] + std::sqrt(c.variance[d]) * normal(rng);
  return x;
}

}  // namespace artdeform
