#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sos_sparse/data/dataset.hpp"
#include "sos_sparse/error.hpp"
#include "sos_sparse/poly/gaussian_moments.hpp"
#include "sos_sparse/poly/symmetric_tensor.hpp"

namespace sos_sparse {

enum class TensorCenter { Truth, Empirical };

struct MomentTensorLimits {
  std::uint32_t max_order = 6;
  std::uint32_t max_dim = 20;
};

// E_i[(X_i - c)^{(x) t}] with c the true or the empirical mean.
inline SymmetricTensor empirical_moment_tensor(const Dataset& data, std::uint32_t t, TensorCenter center,
                                               const MomentTensorLimits& limits = {}) {
  const auto d = static_cast<std::uint32_t>(data.d());
  if (t == 0) throw DomainError("tensor order must be positive");
  if (t > limits.max_order) throw SizeError("tensor order", t, limits.max_order);
  if (d > limits.max_dim) throw SizeError("tensor dimension", d, limits.max_dim);
  if (data.m() == 0) throw DomainError("empty dataset");
  Eigen::VectorXd c = center == TensorCenter::Truth ? data.require_truth().mu
                                                     : Eigen::VectorXd(data.samples.colwise().mean());
  Eigen::MatrixXd x = data.samples.rowwise() - c.transpose();
  SymmetricTensor out(t, d);
  const double inv = 1.0 / static_cast<double>(data.m());
  for_each_sorted_tuple(d, t, [&](const IndexTuple& T) {
    Eigen::ArrayXd prod = Eigen::ArrayXd::Ones(x.rows());
    for (auto a : T) prod *= x.col(a).array();
    out.set(T, prod.sum() * inv);
  });
  return out;
}

// Population centered moment tensor of the dataset's generating law.
inline SymmetricTensor population_moment_tensor(const Dataset& data, std::uint32_t t) {
  const GroundTruth& truth = data.require_truth();
  if (data.provenance.generator != "gaussian") {
    throw DomainError("no closed-form population tensor for generator '" + data.provenance.generator + "'");
  }
  const auto d = static_cast<std::uint32_t>(truth.sigma.rows());
  if (t % 2 == 1) return SymmetricTensor(t, d);
  return gaussian_moment_tensor(SymmetricTensor::from_matrix(truth.sigma), t);
}

// l_inf distance between the empirically centered t-tensor of the sample
// and the population centered t-tensor.
inline double linf_tensor_distance(const Dataset& data, std::uint32_t t) {
  SymmetricTensor pop = population_moment_tensor(data, t);
  return (empirical_moment_tensor(data, t, TensorCenter::Empirical) - pop).linf_norm();
}

// Coefficient bound k^{t/2} max |T| on max over k-sparse unit v of |<T, v^t>|.
inline double sparse_moment_certificate(const SymmetricTensor& tensor, std::uint32_t k) {
  return std::pow(static_cast<double>(k), tensor.order() / 2.0) * tensor.linf_norm();
}

inline double gaussian_tensor_distance(const Eigen::MatrixXd& sigma_a, const Eigen::MatrixXd& sigma_b,
                                       std::uint32_t t) {
  if (t > 6) throw UnsupportedOrderError("gaussian_tensor_distance supports t <= 6");
  auto a = gaussian_moment_tensor(SymmetricTensor::from_matrix(sigma_a), t);
  auto b = gaussian_moment_tensor(SymmetricTensor::from_matrix(sigma_b), t);
  return (a - b).linf_norm();
}

// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("slope fit needs two or more points");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw DomainError("slope fit needs positive values");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

// Weights of the resilience conditions: a is m x m, a' has length m.
struct ResilienceWeights {
  Eigen::MatrixXd a;
  Eigen::VectorXd a_prime;

  static ResilienceWeights ones(std::size_t m) {
    return {Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)),
            Eigen::VectorXd::Ones(static_cast<Eigen::Index>(m))};
  }
};

struct ResilienceOptions {
  double eps = 0.0;
  std::vector<int> items = {1, 2, 3, 4, 5, 6};
  // Supports are enumerated when C(d, k) is at most this; sampled otherwise.
  std::size_t max_supports = 500;
  int quartic_directions = 200;
  std::uint64_t seed = 0;
};

struct ResilienceItem {
  int item = 0;
  // Largest measured left-hand side divided by the right-hand scale.
  double ratio = 0.0;
  Eigen::VectorXd direction;
};

struct ResilienceReport {
  std::vector<ResilienceItem> items;
  std::size_t supports = 0;
  bool sampled_supports = false;
};

namespace detail {

inline void check_resilience_weights(const ResilienceWeights& w, std::size_t m, double eps) {
  const auto n = static_cast<Eigen::Index>(m);
  if (w.a.rows() != n || w.a.cols() != n || w.a_prime.size() != n) {
    throw DomainError("resilience weights have the wrong shape");
  }
  if (w.a.minCoeff() < 0.0 || w.a.maxCoeff() > 1.0 || w.a_prime.minCoeff() < 0.0 ||
      w.a_prime.maxCoeff() > 1.0) {
    throw DomainError("resilience weights must lie in [0, 1]");
  }
  if ((w.a - w.a.transpose()).cwiseAbs().maxCoeff() > 0.0) {
    throw DomainError("condition (i) violated: a must be symmetric");
  }
  if (w.a.mean() < 1.0 - 4.0 * eps - 1e-12) {
    throw DomainError("condition (ii) violated: E_ij a_ij < 1 - 4 eps");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (w.a.row(i).mean() < w.a_prime[i] * (1.0 - 2.0 * eps) - 1e-12) {
      throw DomainError("condition (iii) violated: E_j a_ij < a'_i (1 - 2 eps) at row " + std::to_string(i));
    }
    if (w.a.row(i).maxCoeff() > w.a_prime[i] + 1e-12) {
      throw DomainError("condition (iii) violated: a_ij > a'_i at row " + std::to_string(i));
    }
  }
}

inline std::vector<std::vector<Eigen::Index>> resilience_supports(std::size_t d, std::size_t k,
                                                                  std::size_t cap, std::mt19937_64& rng,
                                                                  bool& sampled) {
  double count = 1.0;
  for (std::size_t j = 0; j < k; ++j) count = count * static_cast<double>(d - j) / static_cast<double>(j + 1);
  std::vector<std::vector<Eigen::Index>> out;
  sampled = count > static_cast<double>(cap);
  if (!sampled) {
    std::vector<Eigen::Index> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
      out.push_back(idx);
      int pos = static_cast<int>(k) - 1;
      while (pos >= 0 && idx[pos] == static_cast<Eigen::Index>(d - k + pos)) --pos;
      if (pos < 0) break;
      ++idx[pos];
      for (std::size_t j = pos + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    return out;
  }
  std::vector<Eigen::Index> all(d);
  std::iota(all.begin(), all.end(), 0);
  for (std::size_t s = 0; s < cap; ++s) {
    std::shuffle(all.begin(), all.end(), rng);
    std::vector<Eigen::Index> pick(all.begin(), all.begin() + static_cast<long>(k));
    std::sort(pick.begin(), pick.end());
    out.push_back(pick);
  }
  return out;
}

inline Eigen::MatrixXd restrict(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& s) {
  Eigen::MatrixXd out(s.size(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) out(i, j) = m(s[i], s[j]);
  }
  return out;
}

inline Eigen::VectorXd restrict(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& s) {
  Eigen::VectorXd out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = v[s[i]];
  return out;
}

inline Eigen::VectorXd embed(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& s, Eigen::Index d) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(d);
  for (std::size_t i = 0; i < s.size(); ++i) out[s[i]] = v[i];
  return out;
}

// max over unit v on the support of |<v, c>| / sqrt(v^T B v).
inline std::pair<double, Eigen::VectorXd> linear_ratio(const Eigen::VectorXd& c, const Eigen::MatrixXd& b) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(b);
  Eigen::VectorXd v = ldlt.solve(c);
  double val = c.dot(v);
  if (!(val > 0.0)) return {0.0, Eigen::VectorXd::Unit(c.size(), 0)};
  return {std::sqrt(val), v.normalized()};
}

// max over v of |v^T A v| / v^T B v, B positive definite on the support.
inline std::pair<double, Eigen::VectorXd> quadratic_ratio(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(a, b);
  const auto& ev = es.eigenvalues();
  Eigen::Index lo = 0;
  Eigen::Index hi = ev.size() - 1;
  Eigen::Index best = std::abs(ev[lo]) > std::abs(ev[hi]) ? lo : hi;
  return {std::abs(ev[best]), es.eigenvectors().col(best).normalized()};
}

}  // namespace detail

// Measured left-hand sides of the resilience conditions over k-sparse unit
// directions, each divided by its right-hand scale. Items 1 and 4 compare
// against the true parameters and need ground truth.
inline ResilienceReport resilience_check(const Dataset& data, const ResilienceWeights& weights, std::uint32_t k,
                                         const ResilienceOptions& opts = {}) {
  const std::size_t m = data.m();
  const auto d = static_cast<Eigen::Index>(data.d());
  if (m < 2) throw DomainError("resilience check needs at least two samples");
  if (k == 0 || k > data.d()) throw DomainError("need 1 <= k <= d");
  detail::check_resilience_weights(weights, m, opts.eps);
  for (int item : opts.items) {
    if (item < 1 || item > 6) throw DomainError("unknown resilience item " + std::to_string(item));
    if ((item == 1 || item == 4) && !data.truth) {
      throw MissingTruthError("resilience item " + std::to_string(item) + " needs ground truth");
    }
  }

  const Eigen::MatrixXd& x = data.samples;
  Eigen::VectorXd mean = x.colwise().mean();
  Eigen::MatrixXd xc = x.rowwise() - mean.transpose();
  const double dm = static_cast<double>(m);
  Eigen::MatrixXd sigma_bar = xc.transpose() * xc / dm;
  const Eigen::VectorXd& ap = weights.a_prime;
  const Eigen::MatrixXd& a = weights.a;

  // Quadratic-form matrices of items 3 and 5.
  Eigen::MatrixXd q3 = xc.transpose() * ap.asDiagonal() * xc / dm - ap.mean() * sigma_bar;
  // E_ij a_ij X_ij = (1/m^2) (sum_i r_i x_i x_i^T - X^T a X), r = row sums.
  Eigen::VectorXd r = a.rowwise().sum();
  Eigen::MatrixXd q5 = (xc.transpose() * r.asDiagonal() * xc - xc.transpose() * a * xc) / (dm * dm) -
                       a.mean() * sigma_bar;
  Eigen::VectorXd c2 = xc.transpose() * ap / dm;
  const bool all_ones = a.minCoeff() == 1.0;

  std::mt19937_64 rng(opts.seed);
  ResilienceReport rep;
  auto supports = detail::resilience_supports(data.d(), k, opts.max_supports, rng, rep.sampled_supports);
  rep.supports = supports.size();

  for (int item : opts.items) {
    ResilienceItem out;
    out.item = item;
    out.direction = Eigen::VectorXd::Unit(d, 0);
    for (const auto& s : supports) {
      Eigen::MatrixXd sb = detail::restrict(sigma_bar, s);
      std::pair<double, Eigen::VectorXd> best{0.0, Eigen::VectorXd()};
      switch (item) {
        case 1: {
          Eigen::VectorXd diff = mean - data.truth->mu;
          best = detail::linear_ratio(detail::restrict(diff, s), detail::restrict(data.truth->sigma, s));
          break;
        }
        case 2:
          best = detail::linear_ratio(detail::restrict(c2, s), sb);
          break;
        case 3:
          best = detail::quadratic_ratio(detail::restrict(q3, s), sb);
          break;
        case 4: {
          Eigen::MatrixXd st = detail::restrict(data.truth->sigma, s);
          best = detail::quadratic_ratio(sb - st, st);
          break;
        }
        case 5:
          best = detail::quadratic_ratio(detail::restrict(q5, s), sb);
          break;
        case 6: {
          std::normal_distribution<double> g;
          for (int rep_dir = 0; rep_dir < opts.quartic_directions; ++rep_dir) {
            Eigen::VectorXd u(s.size());
            for (Eigen::Index j = 0; j < u.size(); ++j) u[j] = g(rng);
            u.normalize();
            Eigen::VectorXd v = detail::embed(u, s, d);
            double q = v.dot(sigma_bar * v);
            if (!(q > 0.0)) continue;
            // Pair sums of (p_i - p_j)^n through G = P^T a P with P = [1, p, .., p^4].
            Eigen::VectorXd p = xc * v;
            Eigen::MatrixXd pw(static_cast<Eigen::Index>(m), 5);
            pw.col(0).setOnes();
            for (int e = 1; e < 5; ++e) pw.col(e) = pw.col(e - 1).cwiseProduct(p);
            Eigen::MatrixXd g5 = all_ones ? Eigen::MatrixXd(pw.colwise().sum().transpose() * pw.colwise().sum())
                                          : Eigen::MatrixXd(pw.transpose() * (a * pw));
            double s4 = 2.0 * g5(4, 0) - 8.0 * g5(3, 1) + 6.0 * g5(2, 2);
            double s2 = 2.0 * g5(2, 0) - 2.0 * g5(1, 1);
            double total = 0.25 * s4 - q * s2 - q * q * g5(0, 0);
            double ratio = std::abs(total / (dm * dm)) / (q * q);
            if (ratio > best.first) best = {ratio, u};
          }
          break;
        }
      }
      if (best.first > out.ratio && best.second.size() > 0) {
        out.ratio = best.first;
        out.direction = detail::embed(best.second, s, d);
      }
    }
    rep.items.push_back(std::move(out));
  }
  return rep;
}

}  // namespace sos_sparse
