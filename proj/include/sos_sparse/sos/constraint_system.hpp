#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sos_sparse/error.hpp"
#include "sos_sparse/poly/polynomial.hpp"

namespace sos_sparse {

enum class VarKind {
  // Ordinary program variable; its monomials index the moment matrix.
  Moment,
  // Unconstrained scalar that may only appear linearly (SoS multiplier
  // coefficients).
  Free,
  // Entry of a symmetric psd matrix that may only appear linearly (Gram
  // matrix of a sum-of-squares term).
  Gram,
};

struct VariableGroup {
  std::string name;
  VarId first = 0;
  std::uint32_t count = 0;
  std::uint32_t degree_cap = std::numeric_limits<std::uint32_t>::max();
  VarKind kind = VarKind::Moment;
  std::uint32_t gram_dim = 0;

  bool contains(VarId v) const { return v >= first && v < first + count; }
  VarId at(std::uint32_t i) const {
    if (i >= count) throw DomainError("index " + std::to_string(i) + " outside group " + name);
    return first + i;
  }
  // Variable for entry (a, b) of a Gram group.
  VarId gram(std::uint32_t a, std::uint32_t b) const {
    if (kind != VarKind::Gram) throw DomainError(name + " is not a Gram group");
    if (a > b) std::swap(a, b);
    if (b >= gram_dim) throw DomainError("Gram index out of range in " + name);
    return first + a * gram_dim - a * (a - 1) / 2 + (b - a);
  }
};

// Which monomials index the top moment matrix. By default every monomial of
// degree <= relaxation_degree / 2 in the moment variables. A smaller
// `full_degree` keeps only the low-degree part and `extra` adds selected
// higher-degree monomials, which is how the estimators keep the matrix small.
struct BasisSpec {
  std::optional<std::uint32_t> full_degree;
  std::vector<Monomial> extra;
};

struct BallBound {
  double radius = 0.0;
  std::vector<std::string> groups;
};

class ConstraintSystem {
 public:
  VarId add_group(const std::string& name, std::uint32_t count,
                  VarKind kind = VarKind::Moment,
                  std::uint32_t degree_cap = std::numeric_limits<std::uint32_t>::max()) {
    if (kind == VarKind::Gram) throw DomainError("use add_gram_group for Gram variables");
    return push_group({name, next_var_, count, degree_cap, kind, 0});
  }

  VarId add_gram_group(const std::string& name, std::uint32_t dim) {
    return push_group({name, next_var_, dim * (dim + 1) / 2, 1, VarKind::Gram, dim});
  }

  const std::vector<VariableGroup>& groups() const { return groups_; }

  const VariableGroup& group(const std::string& name) const {
    for (const auto& g : groups_) {
      if (g.name == name) return g;
    }
    throw DomainError("unknown variable group " + name);
  }
  bool has_group(const std::string& name) const {
    for (const auto& g : groups_) {
      if (g.name == name) return true;
    }
    return false;
  }

  const VariableGroup& group_of(VarId v) const {
    for (const auto& g : groups_) {
      if (g.contains(v)) return g;
    }
    throw DomainError("variable x" + std::to_string(v) + " is not registered");
  }

  VarId num_vars() const { return next_var_; }

  std::vector<Polynomial> equalities;
  std::vector<Polynomial> inequalities;
  std::uint32_t relaxation_degree = 2;
  std::optional<BallBound> ball;
  BasisSpec basis;

  // Checks the documented invariants; throws DomainError on the first failure.
  void validate() const {
    if (relaxation_degree == 0 || relaxation_degree % 2 == 1) {
      throw DomainError("relaxation degree must be a positive even integer");
    }
    if (ball) {
      if (!(ball->radius > 0.0)) throw DomainError("ball radius must be positive");
      for (const auto& name : ball->groups) {
        if (group(name).kind != VarKind::Moment) {
          throw DomainError("ball bound must range over moment variables");
        }
      }
    }
    for (const auto& p : equalities) check_polynomial(p, true);
    for (const auto& p : inequalities) check_polynomial(p, false);
  }

  // Moment-variable degree of a polynomial (ignores linear auxiliary terms).
  std::uint32_t moment_degree(const Polynomial& p) const {
    std::uint32_t out = 0;
    for (const auto& [m, c] : p.terms()) {
      if (!m.is_constant() && group_of(m.factors()[0].first).kind != VarKind::Moment) continue;
      out = std::max(out, m.degree());
    }
    return out;
  }

  bool has_auxiliary(const Polynomial& p) const {
    for (const auto& [m, c] : p.terms()) {
      for (const auto& f : m.factors()) {
        if (group_of(f.first).kind != VarKind::Moment) return true;
      }
    }
    return false;
  }

  Polynomial ball_polynomial() const {
    if (!ball) throw DomainError("no ball bound");
    Polynomial p(ball->radius * ball->radius);
    for (const auto& name : ball->groups) {
      const auto& g = group(name);
      for (std::uint32_t i = 0; i < g.count; ++i) {
        p.add_term(Monomial::var(g.first + i, 2), -1.0);
      }
    }
    return p;
  }

 private:
  VarId push_group(VariableGroup g) {
    if (has_group(g.name)) throw DomainError("duplicate variable group " + g.name);
    next_var_ += g.count;
    groups_.push_back(std::move(g));
    return groups_.back().first;
  }

  void check_polynomial(const Polynomial& p, bool equality) const {
    for (const auto& [m, c] : p.terms()) {
      bool aux = false;
      for (const auto& f : m.factors()) {
        if (f.first >= next_var_) {
          throw DomainError("variable x" + std::to_string(f.first) + " is not registered");
        }
        if (group_of(f.first).kind != VarKind::Moment) aux = true;
      }
      if (aux) {
        if (!equality) throw DomainError("auxiliary variables may not appear in inequalities");
        if (m.degree() != 1) {
          throw DomainError("auxiliary variables must appear linearly and alone in a term");
        }
      }
    }
    std::uint32_t deg = moment_degree(p);
    if (deg > relaxation_degree) {
      throw DomainError("constraint degree " + std::to_string(deg) +
                        " exceeds the relaxation degree " +
                        std::to_string(relaxation_degree));
    }
  }

  std::vector<VariableGroup> groups_;
  VarId next_var_ = 0;
};

}  // namespace sos_sparse
