#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "sos_sparse/error.hpp"

namespace sos_sparse {

using VarId = std::uint32_t;

// A monomial in canonical sparse form: (variable, exponent) pairs sorted by
// variable id with no zero exponents. Ordered graded-lexicographically, with
// variable 0 the most significant.
class Monomial {
 public:
  using Factor = std::pair<VarId, std::uint32_t>;

  Monomial() = default;

  static Monomial var(VarId v, std::uint32_t exponent = 1) {
    Monomial m;
    if (exponent > 0) {
      m.factors_.emplace_back(v, exponent);
      m.degree_ = exponent;
    }
    return m;
  }

  // Accepts factors in any order; repeated variables are merged.
  static Monomial from_factors(std::vector<Factor> factors) {
    std::sort(factors.begin(), factors.end());
    Monomial m;
    for (const auto& [v, e] : factors) {
      if (e == 0) continue;
      if (!m.factors_.empty() && m.factors_.back().first == v) {
        m.factors_.back().second += e;
      } else {
        m.factors_.emplace_back(v, e);
      }
      m.degree_ += e;
    }
    return m;
  }

  // Product of the listed variables (with repetition).
  static Monomial product(std::initializer_list<VarId> vars) {
    std::vector<Factor> f;
    for (VarId v : vars) f.emplace_back(v, 1);
    return from_factors(std::move(f));
  }

  const std::vector<Factor>& factors() const { return factors_; }
  std::uint32_t degree() const { return degree_; }
  bool is_constant() const { return factors_.empty(); }

  std::uint32_t exponent(VarId v) const {
    auto it = std::lower_bound(factors_.begin(), factors_.end(), v,
                               [](const Factor& f, VarId x) { return f.first < x; });
    return (it != factors_.end() && it->first == v) ? it->second : 0;
  }

  Monomial operator*(const Monomial& other) const {
    Monomial out;
    out.factors_.reserve(factors_.size() + other.factors_.size());
    auto a = factors_.begin();
    auto b = other.factors_.begin();
    while (a != factors_.end() || b != other.factors_.end()) {
      if (b == other.factors_.end() || (a != factors_.end() && a->first < b->first)) {
        out.factors_.push_back(*a++);
      } else if (a == factors_.end() || b->first < a->first) {
        out.factors_.push_back(*b++);
      } else {
        out.factors_.emplace_back(a->first, a->second + b->second);
        ++a;
        ++b;
      }
    }
    out.degree_ = degree_ + other.degree_;
    return out;
  }

  // True when `other` divides this monomial.
  bool divisible_by(const Monomial& other) const {
    auto a = factors_.begin();
    for (const auto& [v, e] : other.factors_) {
      while (a != factors_.end() && a->first < v) ++a;
      if (a == factors_.end() || a->first != v || a->second < e) return false;
    }
    return true;
  }

  // Quotient this / other; requires divisible_by(other).
  Monomial divide(const Monomial& other) const {
    if (!divisible_by(other)) throw DomainError("monomial division is not exact");
    std::vector<Factor> out;
    for (const auto& [v, e] : factors_) {
      std::uint32_t r = e - other.exponent(v);
      if (r > 0) out.emplace_back(v, r);
    }
    Monomial m;
    m.factors_ = std::move(out);
    m.degree_ = degree_ - other.degree_;
    return m;
  }

  bool operator==(const Monomial& other) const { return factors_ == other.factors_; }

  std::strong_ordering operator<=>(const Monomial& other) const {
    if (degree_ != other.degree_) return degree_ <=> other.degree_;
    auto a = factors_.begin();
    auto b = other.factors_.begin();
    while (a != factors_.end() && b != other.factors_.end()) {
      if (a->first != b->first) {
        // The monomial holding the smaller (more significant) variable has a
        // positive exponent where the other has zero.
        return a->first < b->first ? std::strong_ordering::greater
                                   : std::strong_ordering::less;
      }
      if (a->second != b->second) return a->second <=> b->second;
      ++a;
      ++b;
    }
    // Equal degree and a common prefix imply both are exhausted.
    return std::strong_ordering::equal;
  }

  std::size_t hash() const {
    std::size_t h = 0x9e3779b97f4a7c15ULL;
    for (const auto& [v, e] : factors_) {
      h ^= std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(v) << 32) | e) +
           0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }

  // Canonical text form, e.g. "1", "x0", "x0^2*x3".
  std::string to_string() const {
    if (factors_.empty()) return "1";
    std::string s;
    for (const auto& [v, e] : factors_) {
      if (!s.empty()) s += '*';
      s += 'x' + std::to_string(v);
      if (e > 1) s += '^' + std::to_string(e);
    }
    return s;
  }

 private:
  std::vector<Factor> factors_;
  std::uint32_t degree_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, const Monomial& m) {
  return os << m.to_string();
}

struct MonomialHash {
  std::size_t operator()(const Monomial& m) const { return m.hash(); }
};

// All monomials over `vars` with total degree at most `max_degree`, in
// increasing graded-lex order.
inline std::vector<Monomial> monomials_up_to(const std::vector<VarId>& vars,
                                             std::uint32_t max_degree) {
  std::vector<Monomial> out;
  std::vector<Monomial::Factor> current;
  std::function<void(std::size_t, std::uint32_t)> rec = [&](std::size_t idx,
                                                             std::uint32_t left) {
    if (idx == vars.size()) {
      out.push_back(Monomial::from_factors(current));
      return;
    }
    for (std::uint32_t e = 0; e <= left; ++e) {
      if (e > 0) current.emplace_back(vars[idx], e);
      rec(idx + 1, left - e);
      if (e > 0) current.pop_back();
    }
  };
  rec(0, max_degree);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace sos_sparse
