#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sos_sparse/data/dataset.hpp"
#include "sos_sparse/error.hpp"

namespace sos_sparse {

namespace detail {

// Symmetric square root factor L with L L^T = sigma; sigma must be psd.
inline Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& sigma, double tol = 1e-10) {
  if (sigma.rows() != sigma.cols()) throw DomainError("covariance must be square");
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + sigma.cwiseAbs().maxCoeff())) {
    throw DomainError("covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  if (es.eigenvalues().minCoeff() < -tol) {
    throw DomainError("covariance is not positive semidefinite (min eigenvalue " +
                      std::to_string(es.eigenvalues().minCoeff()) + ")");
  }
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

inline Eigen::VectorXd standard_normal(std::mt19937_64& rng, Eigen::Index d) {
  std::normal_distribution<double> g;
  Eigen::VectorXd z(d);
  for (Eigen::Index a = 0; a < d; ++a) z[a] = g(rng);
  return z;
}

}  // namespace detail

inline Dataset sample_gaussian(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma, std::size_t m,
                               std::uint64_t seed, std::uint32_t k = 0) {
  if (sigma.rows() != mu.size()) throw DomainError("mean and covariance dimensions differ");
  Eigen::MatrixXd L = detail::psd_factor(sigma);
  std::mt19937_64 rng(seed);
  Dataset out;
  out.samples.resize(static_cast<Eigen::Index>(m), mu.size());
  for (std::size_t i = 0; i < m; ++i) {
    out.samples.row(static_cast<Eigen::Index>(i)) = (mu + L * detail::standard_normal(rng, mu.size())).transpose();
  }
  std::uint32_t support = 0;
  for (Eigen::Index a = 0; a < mu.size(); ++a) support += mu[a] != 0.0 ? 1u : 0u;
  out.truth = GroundTruth{mu, sigma, k == 0 ? std::max<std::uint32_t>(support, 1) : k};
  out.inlier_mask = std::vector<bool>(m, true);
  out.provenance.seed = seed;
  out.provenance.generator = "gaussian";
  return out;
}

struct Adversary {
  enum class Kind { ReplaceRandom, ShiftAttack, Cluster };
  Kind kind = Kind::ReplaceRandom;
  // Shift attack: outliers at mu + magnitude * direction.
  double magnitude = 0.0;
  std::optional<Eigen::VectorXd> direction;
  // Cluster: every outlier at this point.
  Eigen::VectorXd point;

  static Adversary replace_random() { return {}; }
  static Adversary shift(double r, std::optional<Eigen::VectorXd> dir = std::nullopt) {
    Adversary a;
    a.kind = Kind::ShiftAttack;
    a.magnitude = r;
    a.direction = std::move(dir);
    return a;
  }
  static Adversary cluster(Eigen::VectorXd p) {
    Adversary a;
    a.kind = Kind::Cluster;
    a.point = std::move(p);
    return a;
  }

  std::string id() const {
    switch (kind) {
      case Kind::ReplaceRandom:
        return "replace_random";
      case Kind::ShiftAttack:
        return "shift_attack";
      case Kind::Cluster:
        return "cluster";
    }
    return "?";
  }
};

inline std::size_t corruption_count(double eps, std::size_t m) {
  return static_cast<std::size_t>(std::ceil(eps * static_cast<double>(m) - 1e-9));
}

// Replaces exactly ceil(eps m) rows chosen uniformly at random.
inline Dataset corrupt(const Dataset& data, double eps, const Adversary& adv, std::uint64_t seed) {
  if (!(eps >= 0.0 && eps < 0.5)) throw DomainError("eps must satisfy 0 <= eps < 1/2");
  Dataset out = data;
  const std::size_t m = data.m();
  const Eigen::Index d = data.samples.cols();
  std::size_t n = corruption_count(eps, m);
  out.provenance.adversary = n == 0 ? out.provenance.adversary : adv.id();
  out.provenance.eps = eps;
  if (!out.inlier_mask) out.inlier_mask = std::vector<bool>(m, true);
  if (n == 0) return out;

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> rows(m);
  std::iota(rows.begin(), rows.end(), 0);
  std::shuffle(rows.begin(), rows.end(), rng);
  rows.resize(n);
  std::sort(rows.begin(), rows.end());

  Eigen::VectorXd center = data.truth ? data.truth->mu : Eigen::VectorXd(data.samples.colwise().mean());
  Eigen::VectorXd dir = Eigen::VectorXd::Zero(d);
  if (adv.kind == Adversary::Kind::ShiftAttack) {
    if (adv.direction) {
      if (adv.direction->size() != d) throw DomainError("attack direction has the wrong dimension");
      dir = adv.direction->normalized();
    } else {
      Eigen::Index lead = 0;
      if (data.truth) center.cwiseAbs().maxCoeff(&lead);
      dir[lead] = 1.0;
    }
  }
  if (adv.kind == Adversary::Kind::Cluster && adv.point.size() != d) {
    throw DomainError("cluster point has the wrong dimension");
  }
  double spread = 1.0 + data.samples.cwiseAbs().maxCoeff();
  for (std::size_t r : rows) {
    const auto row = static_cast<Eigen::Index>(r);
    out.original_rows.emplace_back(r, data.samples.row(row).transpose());
    Eigen::VectorXd value;
    switch (adv.kind) {
      case Adversary::Kind::ReplaceRandom:
        value = 10.0 * spread * detail::standard_normal(rng, d);
        break;
      case Adversary::Kind::ShiftAttack:
        value = center + adv.magnitude * dir;
        break;
      case Adversary::Kind::Cluster:
        value = adv.point;
        break;
    }
    out.samples.row(row) = value.transpose();
    (*out.inlier_mask)[r] = false;
  }
  return out;
}

// Rows of the uncorrupted sample, i.e. with every replaced row restored.
inline Eigen::MatrixXd uncorrupted_samples(const Dataset& data) {
  Eigen::MatrixXd x = data.samples;
  for (const auto& [r, v] : data.original_rows) x.row(static_cast<Eigen::Index>(r)) = v.transpose();
  return x;
}

}  // namespace sos_sparse
