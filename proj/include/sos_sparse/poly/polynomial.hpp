#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sos_sparse/error.hpp"
#include "sos_sparse/poly/monomial.hpp"

namespace sos_sparse {

// Sparse real polynomial. Terms are kept in graded-lex order so iteration
// and serialization are deterministic.
class Polynomial {
 public:
  using Terms = std::map<Monomial, double>;

  Polynomial() = default;
  Polynomial(double c) {  // NOLINT(google-explicit-constructor)
    if (c != 0.0) terms_.emplace(Monomial{}, c);
  }
  Polynomial(const Monomial& m, double c = 1.0) {  // NOLINT
    if (c != 0.0) terms_.emplace(m, c);
  }

  static Polynomial var(VarId v) { return Polynomial(Monomial::var(v)); }

  const Terms& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  std::uint32_t degree() const {
    return terms_.empty() ? 0 : terms_.rbegin()->first.degree();
  }

  double coefficient(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? 0.0 : it->second;
  }

  void add_term(const Monomial& m, double c) {
    if (c == 0.0) return;
    auto [it, inserted] = terms_.emplace(m, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0.0) terms_.erase(it);
    }
  }

  // Drops coefficients with |c| <= eps (eps = 0 removes exact zeros only).
  Polynomial& prune(double eps = 0.0) {
    for (auto it = terms_.begin(); it != terms_.end();) {
      if (std::abs(it->second) <= eps) {
        it = terms_.erase(it);
      } else {
        ++it;
      }
    }
    return *this;
  }

  std::set<VarId> variables() const {
    std::set<VarId> out;
    for (const auto& [m, c] : terms_) {
      for (const auto& f : m.factors()) out.insert(f.first);
    }
    return out;
  }

  Polynomial& operator+=(const Polynomial& o) {
    for (const auto& [m, c] : o.terms_) add_term(m, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    for (const auto& [m, c] : o.terms_) add_term(m, -c);
    return *this;
  }
  Polynomial& operator*=(double s) {
    if (s == 0.0) {
      terms_.clear();
      return *this;
    }
    for (auto& [m, c] : terms_) c *= s;
    return prune();
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator-(Polynomial a) { return a *= -1.0; }
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    std::unordered_map<Monomial, double, MonomialHash> acc;
    acc.reserve(a.size() * b.size());
    for (const auto& [ma, ca] : a.terms_) {
      for (const auto& [mb, cb] : b.terms_) acc[ma * mb] += ca * cb;
    }
    Polynomial out;
    for (auto& [m, c] : acc) {
      if (c != 0.0) out.terms_.emplace(m, c);
    }
    return out;
  }
  Polynomial& operator*=(const Polynomial& o) { return *this = *this * o; }

  Polynomial pow(std::uint32_t n) const {
    Polynomial out(1.0);
    for (std::uint32_t i = 0; i < n; ++i) out = out * *this;
    return out;
  }

  bool operator==(const Polynomial& o) const { return terms_ == o.terms_; }

  // Replaces each mapped variable by its polynomial; unmapped variables stay.
  Polynomial substitute(const std::map<VarId, Polynomial>& sub) const {
    Polynomial out;
    for (const auto& [m, c] : terms_) {
      Polynomial term(1.0);
      std::vector<Monomial::Factor> kept;
      for (const auto& [v, e] : m.factors()) {
        auto it = sub.find(v);
        if (it == sub.end()) {
          kept.emplace_back(v, e);
        } else {
          term = term * it->second.pow(e);
        }
      }
      out += term * Polynomial(Monomial::from_factors(std::move(kept)), c);
    }
    return out;
  }

  // Full evaluation; every variable must be assigned.
  double evaluate(const std::map<VarId, double>& x) const {
    return evaluate_with([&](VarId v) {
      auto it = x.find(v);
      if (it == x.end()) throw MissingVariableError(v);
      return it->second;
    });
  }

  // Evaluation against a dense assignment indexed by variable id.
  double evaluate(const std::vector<double>& x) const {
    return evaluate_with([&](VarId v) {
      if (v >= x.size()) throw MissingVariableError(v);
      return x[v];
    });
  }

  template <typename Lookup>
  double evaluate_with(Lookup&& lookup) const {
    double total = 0.0;
    for (const auto& [m, c] : terms_) {
      double term = c;
      for (const auto& [v, e] : m.factors()) term *= std::pow(lookup(v), static_cast<int>(e));
      total += term;
    }
    return total;
  }

  // Partial evaluation: assigned variables are replaced by their values.
  Polynomial partial_evaluate(const std::map<VarId, double>& x) const {
    Polynomial out;
    for (const auto& [m, c] : terms_) {
      double coef = c;
      std::vector<Monomial::Factor> kept;
      for (const auto& [v, e] : m.factors()) {
        auto it = x.find(v);
        if (it == x.end()) {
          kept.emplace_back(v, e);
        } else {
          coef *= std::pow(it->second, static_cast<int>(e));
        }
      }
      out.add_term(Monomial::from_factors(std::move(kept)), coef);
    }
    return out;
  }

  double max_abs_coefficient() const {
    double out = 0.0;
    for (const auto& [m, c] : terms_) out = std::max(out, std::abs(c));
    return out;
  }

  double squared_coefficient_norm() const {
    double out = 0.0;
    for (const auto& [m, c] : terms_) out += c * c;
    return out;
  }

  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    os.precision(17);
    bool first = true;
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
      if (!first) os << " + ";
      os << it->second;
      if (!it->first.is_constant()) os << '*' << it->first.to_string();
      first = false;
    }
    return os.str();
  }

 private:
  Terms terms_;
};

inline std::ostream& operator<<(std::ostream& os, const Polynomial& p) {
  return os << p.to_string();
}

// Sum of the given polynomials weighted by coefficients.
inline Polynomial linear_combination(const std::vector<Polynomial>& polys,
                                     const std::vector<double>& coeffs) {
  Polynomial out;
  for (std::size_t i = 0; i < polys.size(); ++i) out += polys[i] * coeffs[i];
  return out;
}

}  // namespace sos_sparse
