#pragma once

#include <cmath>
#include <vector>

#include "sos_sparse/poly/polynomial.hpp"

namespace sos_sparse {

// Coefficients c[0..n] of a univariate polynomial in `var`.
inline std::vector<double> univariate_coefficients(const Polynomial& p, VarId var = 0) {
  std::vector<double> c(p.degree() + 1, 0.0);
  for (const auto& [m, coef] : p.terms()) {
    if (m.factors().size() > 1 || (!m.is_constant() && m.factors()[0].first != var)) {
      throw DomainError("polynomial is not univariate in the requested variable");
    }
    c[m.degree()] += coef;
  }
  return c;
}

inline Polynomial univariate_from_coefficients(const std::vector<double>& c, VarId var = 0) {
  Polynomial p;
  for (std::size_t i = 0; i < c.size(); ++i) {
    p.add_term(Monomial::var(var, static_cast<std::uint32_t>(i)), c[i]);
  }
  return p;
}

// Legendre polynomial P_i via (n+1)P_{n+1} = (2n+1)xP_n - nP_{n-1}.
inline Polynomial legendre(std::uint32_t i, VarId var = 0) {
  std::vector<double> prev{1.0};
  if (i == 0) return univariate_from_coefficients(prev, var);
  std::vector<double> cur{0.0, 1.0};
  for (std::uint32_t n = 1; n < i; ++n) {
    std::vector<double> next(n + 2, 0.0);
    for (std::size_t j = 0; j < cur.size(); ++j) next[j + 1] += (2.0 * n + 1.0) * cur[j];
    for (std::size_t j = 0; j < prev.size(); ++j) next[j] -= n * prev[j];
    for (double& c : next) c /= (n + 1.0);
    prev = std::move(cur);
    cur = std::move(next);
  }
  return univariate_from_coefficients(cur, var);
}

// Exact integral over [lo, hi] by the power rule.
inline double integrate_univariate(const Polynomial& p, double lo = -1.0, double hi = 1.0,
                                   VarId var = 0) {
  auto c = univariate_coefficients(p, var);
  double total = 0.0;
  for (std::size_t n = 0; n < c.size(); ++n) {
    if (c[n] == 0.0) continue;
    double e = static_cast<double>(n + 1);
    total += c[n] * (std::pow(hi, e) - std::pow(lo, e)) / e;
  }
  return total;
}

// Normalized probabilist's Hermite polynomial h_j = He_j / sqrt(j!).
inline Polynomial hermite_normalized(std::uint32_t j, VarId var = 0) {
  // He_{n+1} = x He_n - n He_{n-1}
  std::vector<double> prev{1.0};
  std::vector<double> cur{0.0, 1.0};
  std::vector<double> he = j == 0 ? prev : cur;
  for (std::uint32_t n = 1; n < j; ++n) {
    std::vector<double> next(n + 2, 0.0);
    for (std::size_t k = 0; k < cur.size(); ++k) next[k + 1] += cur[k];
    for (std::size_t k = 0; k < prev.size(); ++k) next[k] -= n * prev[k];
    prev = std::move(cur);
    cur = std::move(next);
    he = cur;
  }
  double scale = 1.0 / std::sqrt(std::tgamma(j + 1.0));
  for (double& c : he) c *= scale;
  return univariate_from_coefficients(he, var);
}

// E[h_j(Z + mu)] for Z standard Gaussian.
inline double hermite_shift_expectation(std::uint32_t j, double mu) {
  return std::pow(mu, static_cast<int>(j)) / std::sqrt(std::tgamma(j + 1.0));
}

// Coefficients b[j] with P_i = sum_j b[j] h_j, found by peeling leading terms.
inline std::vector<double> legendre_in_hermite_basis(std::uint32_t i) {
  auto rest = univariate_coefficients(legendre(i));
  std::vector<double> b(i + 1, 0.0);
  for (int j = static_cast<int>(i); j >= 0; --j) {
    auto h = univariate_coefficients(hermite_normalized(static_cast<std::uint32_t>(j)));
    b[j] = rest[j] / h[j];
    for (int k = 0; k <= j; ++k) rest[k] -= b[j] * h[k];
  }
  return b;
}

}  // namespace sos_sparse
