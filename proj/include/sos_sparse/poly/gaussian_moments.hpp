#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sos_sparse/error.hpp"
#include "sos_sparse/poly/symmetric_tensor.hpp"

namespace sos_sparse {

// (n-1)!! for even n, 0 for odd n.
inline double standard_gaussian_raw_moment(std::uint32_t n) {
  if (n % 2 == 1) return 0.0;
  double out = 1.0;
  for (std::uint32_t k = n; k > 1; k -= 2) out *= static_cast<double>(k - 1);
  return out;
}

inline double binomial(std::uint32_t n, std::uint32_t k) {
  if (k > n) return 0.0;
  double out = 1.0;
  for (std::uint32_t i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return std::round(out);
}

// E[(sigma Z + mu)^n] with sigma^2 = var.
inline double shifted_gaussian_raw_moment(std::uint32_t n, double mu, double var) {
  if (!(var > 0.0)) throw DomainError("variance must be positive");
  double sigma = std::sqrt(var);
  double total = 0.0;
  for (std::uint32_t k = 0; k <= n; k += 2) {
    total += binomial(n, k) * std::pow(mu, static_cast<int>(n - k)) *
             std::pow(sigma, static_cast<int>(k)) * standard_gaussian_raw_moment(k);
  }
  return total;
}

struct TensorLimits {
  std::uint32_t max_order = 8;
  std::uint32_t max_dim = 64;
  double psd_tol = 1e-10;
};

namespace detail {

inline double pairing_sum(const IndexTuple& idx, std::vector<bool>& used,
                          const Eigen::MatrixXd& sigma) {
  std::size_t first = 0;
  while (first < idx.size() && used[first]) ++first;
  if (first == idx.size()) return 1.0;
  used[first] = true;
  double total = 0.0;
  for (std::size_t j = first + 1; j < idx.size(); ++j) {
    if (used[j]) continue;
    double s = sigma(idx[first], idx[j]);
    if (s == 0.0) continue;
    used[j] = true;
    total += s * pairing_sum(idx, used, sigma);
    used[j] = false;
  }
  used[first] = false;
  return total;
}

}  // namespace detail

inline void require_psd(const Eigen::MatrixXd& m, double tol, const char* what) {
  if (m.rows() != m.cols()) throw DomainError(std::string(what) + " is not square");
  if (m.rows() == 0) return;
  double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw DomainError(std::string(what) + " is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol * scale) {
    throw DomainError(std::string(what) + " is not positive semidefinite");
  }
}

// E[Y^{(x)t}] for Y ~ N(0, sigma), by summing over all pairings (Isserlis).
inline SymmetricTensor gaussian_moment_tensor(const SymmetricTensor& sigma, std::uint32_t t,
                                              const TensorLimits& limits = {}) {
  if (sigma.order() != 2) throw DomainError("sigma must be an order-2 tensor");
  if (t == 0 || t % 2 == 1) {
    throw UnsupportedOrderError("Gaussian moment tensors need a positive even order, got " +
                                std::to_string(t));
  }
  if (t > limits.max_order) {
    throw UnsupportedOrderError("order " + std::to_string(t) + " exceeds the cap " +
                                std::to_string(limits.max_order));
  }
  if (sigma.dim() > limits.max_dim) {
    throw SizeError("tensor dimension", sigma.dim(), limits.max_dim);
  }
  Eigen::MatrixXd s = sigma.to_matrix();
  require_psd(s, limits.psd_tol, "sigma");
  SymmetricTensor out(t, sigma.dim());
  std::vector<bool> used(t, false);
  for_each_sorted_tuple(sigma.dim(), t, [&](const IndexTuple& idx) {
    out.set(idx, detail::pairing_sum(idx, used, s));
  });
  return out;
}

}  // namespace sos_sparse
