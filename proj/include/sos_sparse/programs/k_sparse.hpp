#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "sos_sparse/error.hpp"
#include "sos_sparse/poly/polynomial.hpp"
#include "sos_sparse/poly/symmetric_tensor.hpp"
#include "sos_sparse/sos/certificate.hpp"
#include "sos_sparse/sos/constraint_system.hpp"

namespace sos_sparse {

// Sparsity axioms over v (ids 0..d-1) and z (ids d..2d-1), in the order
// z_i^2 = z_i, v_i z_i = v_i, sum z = k, sum v^2 = 1.
inline ConstraintSystem build_k_sparse_axioms(std::uint32_t d, std::uint32_t k) {
  if (d == 0 || k == 0) throw DomainError("need d >= 1 and k >= 1");
  if (k > d) throw DomainError("sparsity k exceeds the dimension d");
  ConstraintSystem cs;
  VarId v0 = cs.add_group("v", d);
  VarId z0 = cs.add_group("z", d);
  for (std::uint32_t i = 0; i < d; ++i) {
    Polynomial z = Polynomial::var(z0 + i);
    cs.equalities.push_back(z * z - z);
  }
  for (std::uint32_t i = 0; i < d; ++i) {
    Polynomial v = Polynomial::var(v0 + i);
    cs.equalities.push_back(v * Polynomial::var(z0 + i) - v);
  }
  Polynomial zsum(-static_cast<double>(k));
  Polynomial vsq(-1.0);
  for (std::uint32_t i = 0; i < d; ++i) {
    zsum += Polynomial::var(z0 + i);
    vsq += Polynomial::var(v0 + i) * Polynomial::var(v0 + i);
  }
  cs.equalities.push_back(zsum);
  cs.equalities.push_back(vsq);
  cs.relaxation_degree = 2;
  return cs;
}

// Calls f(T) for every ordered tuple T in [d]^t.
template <typename F>
void for_each_ordered_tuple(std::uint32_t d, std::uint32_t t, F&& f) {
  IndexTuple idx(t, 0);
  while (true) {
    f(static_cast<const IndexTuple&>(idx));
    int pos = static_cast<int>(t) - 1;
    while (pos >= 0 && idx[pos] == d - 1) {
      idx[pos] = 0;
      --pos;
    }
    if (pos < 0) return;
    ++idx[pos];
  }
}

// p(v) = sum over ordered tuples T of a_T v_T; `coeffs` maps ordered tuples
// to coefficients (missing tuples are zero).
inline Polynomial sparse_form(const std::map<IndexTuple, double>& coeffs, std::uint32_t d) {
  Polynomial p;
  for (const auto& [T, a] : coeffs) {
    std::vector<Monomial::Factor> f;
    for (auto i : T) {
      if (i >= d) throw DomainError("tuple index out of range");
      f.emplace_back(i, 1);
    }
    p.add_term(Monomial::from_factors(std::move(f)), a);
  }
  return p;
}

// Certificate that k^t max a_T^2 - p(v)^2 is a sum of squares modulo the
// sparsity axioms, assembled from the four steps of the coefficient bound:
// replace v_T by z_T v_T, apply Cauchy-Schwarz, bound a_T^2 by the maximum,
// and collapse the power sums with the axioms.
struct SparseBoundCertificate {
  ConstraintSystem axioms;
  Polynomial target;
  SosCertificate certificate;
  double bound = 0.0;
};

inline SparseBoundCertificate build_sparse_bound_certificate(
    std::uint32_t d, std::uint32_t k, std::uint32_t t,
    const std::map<IndexTuple, double>& coeffs) {
  if (t == 0) throw DomainError("t must be positive");
  SparseBoundCertificate out;
  out.axioms = build_k_sparse_axioms(d, k);
  const VarId zoff = d;
  const auto var_v = [](std::uint32_t i) { return Polynomial::var(i); };
  const auto var_z = [&](std::uint32_t i) { return Polynomial::var(zoff + i); };

  double amax = 0.0;
  for (const auto& [T, a] : coeffs) {
    if (T.size() != t) throw DomainError("coefficient tuple has the wrong length");
    amax = std::max(amax, a * a);
  }
  const double kt = std::pow(static_cast<double>(k), static_cast<double>(t));
  out.bound = kt * amax;

  Polynomial p = sparse_form(coeffs, d);
  out.target = Polynomial(out.bound) - p * p;

  // Axiom layout from build_k_sparse_axioms.
  std::vector<Polynomial> mult(2 * d + 2);
  auto zz = [&](std::uint32_t i) -> Polynomial& { return mult[i]; };
  auto vz = [&](std::uint32_t i) -> Polynomial& { return mult[d + i]; };
  Polynomial& zsum = mult[2 * d];
  Polynomial& vsq = mult[2 * d + 1];

  auto prod_zv = [&](const IndexTuple& T, std::size_t from, std::size_t to) {
    Polynomial out_p(1.0);
    for (std::size_t j = from; j < to; ++j) out_p = out_p * var_z(T[j]) * var_v(T[j]);
    return out_p;
  };
  auto prod_v = [&](const IndexTuple& T, std::size_t from, std::size_t to) {
    Polynomial out_p(1.0);
    for (std::size_t j = from; j < to; ++j) out_p = out_p * var_v(T[j]);
    return out_p;
  };
  auto prod_z = [&](const IndexTuple& T) {
    Polynomial out_p(1.0);
    for (auto i : T) out_p = out_p * var_z(i);
    return out_p;
  };

  // Step 1: p - q = sum_i h_i (v_i z_i - v_i) by telescoping, so
  // q^2 - p^2 = sum_i (-h_i (p + q)) (v_i z_i - v_i).
  Polynomial q;
  std::vector<Polynomial> h(d);
  for (const auto& [T, a] : coeffs) {
    q += a * prod_zv(T, 0, t);
    for (std::size_t j = 0; j < t; ++j) {
      h[T[j]] += (-a) * prod_zv(T, 0, j) * prod_v(T, j + 1, t);
    }
  }
  Polynomial pq = p + q;
  for (std::uint32_t i = 0; i < d; ++i) vz(i) += -1.0 * h[i] * pq;

  // Steps 2 and 3: Lagrange identity and the coefficient bound, as squares.
  std::vector<Polynomial> squares;
  std::vector<double> weights;
  std::vector<IndexTuple> tuples;
  for_each_ordered_tuple(d, t, [&](const IndexTuple& T) { tuples.push_back(T); });
  auto coef = [&](const IndexTuple& T) {
    auto it = coeffs.find(T);
    return it == coeffs.end() ? 0.0 : it->second;
  };
  for (const auto& T : tuples) {
    for (const auto& U : tuples) {
      Polynomial lag = coef(T) * prod_z(T) * prod_v(U, 0, t) - coef(U) * prod_z(U) * prod_v(T, 0, t);
      if (!lag.is_zero()) {
        squares.push_back(lag);
        weights.push_back(0.5);
      }
      double slack = amax - coef(T) * coef(T);
      if (slack > 0.0) {
        squares.push_back(prod_z(T) * prod_v(U, 0, t));
        weights.push_back(slack);
      }
    }
  }
  if (!squares.empty()) out.certificate.squares.push_back(gram_from_squares(squares, weights));

  // Step 4: k^t - (sum z_i^2)^t and 1 - (sum v_i^2)^t through the axioms.
  Polynomial s;
  Polynomial u;
  for (std::uint32_t i = 0; i < d; ++i) {
    s += var_z(i) * var_z(i);
    u += var_v(i) * var_v(i);
  }
  Polynomial geo_s;
  Polynomial geo_u;
  for (std::uint32_t j = 0; j < t; ++j) {
    geo_s += s.pow(t - 1 - j) * std::pow(static_cast<double>(k), static_cast<double>(j));
    geo_u += u.pow(j);
  }
  // s - k = sum_i (z_i^2 - z_i) + (sum z - k)
  Polynomial factor = -amax * u.pow(t) * geo_s;
  for (std::uint32_t i = 0; i < d; ++i) zz(i) += factor;
  zsum += factor;
  vsq += -amax * kt * geo_u;

  for (auto& m : mult) m.prune();
  out.certificate.multipliers = std::move(mult);
  return out;
}

}  // namespace sos_sparse
