#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sos_sparse/error.hpp"
#include "sos_sparse/poly/polynomial.hpp"
#include "sos_sparse/sos/constraint_system.hpp"
#include "sos_sparse/sos/sdp_problem.hpp"

namespace sos_sparse {

struct RelaxationLimits {
  std::size_t max_matrix_dim = 5000;
  double trace_weight = 1e-6;
};

struct Location {
  std::uint32_t block = 0;
  std::uint32_t i = 0;
  std::uint32_t j = 0;
};

// Assembled SDP together with the maps needed to read a pseudoexpectation
// back out of a solution.
struct Relaxation {
  SdpProblem problem;
  std::uint32_t degree = 0;
  std::vector<Monomial> basis;
  std::map<Monomial, Location> moments;
  // Free variable v is the difference of two diagonal entries.
  std::map<VarId, std::pair<Location, Location>> free_vars;
  std::map<VarId, Location> gram_vars;
  std::vector<std::pair<std::string, std::uint32_t>> block_labels;
  std::size_t equality_rows = 0;
  std::size_t consistency_rows = 0;
};

namespace detail {

inline double count_monomials(double nvars, std::uint32_t degree) {
  // C(nvars + degree, degree)
  double out = 1.0;
  for (std::uint32_t i = 1; i <= degree; ++i) out = out * (nvars + i) / i;
  return out;
}

class Assembler {
 public:
  Assembler(const ConstraintSystem& cs, const RelaxationLimits& limits)
      : cs_(cs), limits_(limits) {}

  Relaxation run() {
    cs_.validate();
    rel_.degree = cs_.relaxation_degree;
    build_basis();
    build_moment_block();
    build_localizing_blocks();
    build_auxiliary_blocks();
    add_normalization();
    add_equalities();
    add_objective();
    rel_.problem.validate();
    return std::move(rel_);
  }

 private:
  bool group_degree_ok(const Monomial& m) const {
    for (const auto& g : cs_.groups()) {
      if (g.degree_cap == std::numeric_limits<std::uint32_t>::max()) continue;
      std::uint32_t deg = 0;
      for (const auto& [v, e] : m.factors()) {
        if (g.contains(v)) deg += e;
      }
      if (deg > g.degree_cap) return false;
    }
    return true;
  }

  void build_basis() {
    std::uint32_t half = cs_.relaxation_degree / 2;
    std::uint32_t full = std::min(half, cs_.basis.full_degree.value_or(half));
    std::vector<VarId> vars;
    for (const auto& g : cs_.groups()) {
      if (g.kind != VarKind::Moment) continue;
      for (std::uint32_t i = 0; i < g.count; ++i) vars.push_back(g.first + i);
    }
    double estimate = count_monomials(static_cast<double>(vars.size()), full) +
                      static_cast<double>(cs_.basis.extra.size());
    if (estimate > static_cast<double>(limits_.max_matrix_dim)) {
      throw SizeError("moment matrix dimension", static_cast<std::size_t>(std::min(estimate, 1e18)),
                      limits_.max_matrix_dim);
    }
    std::set<Monomial> basis;
    for (auto& m : monomials_up_to(vars, full)) {
      if (group_degree_ok(m)) basis.insert(std::move(m));
    }
    for (const auto& m : cs_.basis.extra) {
      if (m.degree() > half) throw DomainError("extra basis monomial exceeds half degree");
      for (const auto& f : m.factors()) {
        if (cs_.group_of(f.first).kind != VarKind::Moment) {
          throw DomainError("basis monomials must use moment variables");
        }
      }
      if (group_degree_ok(m)) basis.insert(m);
    }
    rel_.basis.assign(basis.begin(), basis.end());
  }

  std::uint32_t add_block(int size, const std::string& label, std::uint32_t index = 0) {
    rel_.problem.block_sizes.push_back(size);
    rel_.block_labels.emplace_back(label, index);
    return static_cast<std::uint32_t>(rel_.problem.block_sizes.size() - 1);
  }

  bool available(const Monomial& m) const { return rel_.moments.count(m) > 0; }

  // Location of the canonical copy of a monomial; every later occurrence of
  // the same monomial is tied to it by a consistency row.
  void place(const Monomial& m, Location loc) {
    auto [it, inserted] = rel_.moments.emplace(m, loc);
    if (!inserted) {
      SdpConstraint c;
      c.entries.push_back(entry(loc, 1.0));
      c.entries.push_back(entry(it->second, -1.0));
      push(std::move(c));
      ++rel_.consistency_rows;
    }
  }

  // Entry whose contribution to <F, Y> is coef * Y(i, j).
  static SdpEntry entry(const Location& loc, double coef) {
    std::uint32_t i = std::min(loc.i, loc.j);
    std::uint32_t j = std::max(loc.i, loc.j);
    return {loc.block, i, j, i == j ? coef : 0.5 * coef};
  }

  void push(SdpConstraint c) {
    c.entries = canonical_entries(std::move(c.entries));
    rel_.problem.constraints.push_back(std::move(c));
  }

  void build_moment_block() {
    const auto& basis = rel_.basis;
    if (basis.size() > limits_.max_matrix_dim) {
      throw SizeError("moment matrix dimension", basis.size(), limits_.max_matrix_dim);
    }
    std::uint32_t b = add_block(static_cast<int>(basis.size()), "moment");
    for (std::uint32_t i = 0; i < basis.size(); ++i) {
      for (std::uint32_t j = i; j < basis.size(); ++j) place(basis[i] * basis[j], {b, i, j});
    }
  }

  void build_localizing_blocks() {
    std::vector<Polynomial> ineqs = cs_.inequalities;
    if (cs_.ball) ineqs.push_back(cs_.ball_polynomial());
    for (std::size_t k = 0; k < ineqs.size(); ++k) {
      const auto& g = ineqs[k];
      std::uint32_t deg_g = g.degree();
      std::vector<Monomial> loc_basis;
      for (const auto& u : rel_.basis) {
        if (2 * u.degree() + deg_g > cs_.relaxation_degree) continue;
        bool ok = true;
        auto fits = [&](const Monomial& w) {
          for (const auto& [m, c] : g.terms()) {
            if (!available(m * w)) return false;
          }
          return true;
        };
        ok = fits(u * u);
        for (std::size_t q = 0; ok && q < loc_basis.size(); ++q) ok = fits(u * loc_basis[q]);
        if (ok) loc_basis.push_back(u);
      }
      if (loc_basis.empty()) {
        throw DomainError("inequality " + std::to_string(k) +
                          " does not fit in the relaxation degree");
      }
      std::string label = k < cs_.inequalities.size() ? "localizing" : "ball";
      std::uint32_t b = add_block(static_cast<int>(loc_basis.size()), label,
                                  static_cast<std::uint32_t>(k));
      for (std::uint32_t i = 0; i < loc_basis.size(); ++i) {
        for (std::uint32_t j = i; j < loc_basis.size(); ++j) {
          SdpConstraint c;
          c.entries.push_back(entry({b, i, j}, 1.0));
          Monomial w = loc_basis[i] * loc_basis[j];
          for (const auto& [m, coef] : g.terms()) {
            // E[1] = 1 is imposed separately; moving the constant to the
            // right-hand side keeps this row away from the normalization row.
            if ((m * w).is_constant()) {
              c.rhs += coef;
            } else {
              c.entries.push_back(entry(rel_.moments.at(m * w), -coef));
            }
          }
          push(std::move(c));
        }
      }
    }
  }

  void build_auxiliary_blocks() {
    std::uint32_t free_count = 0;
    for (const auto& g : cs_.groups()) {
      if (g.kind == VarKind::Free) free_count += g.count;
    }
    for (const auto& g : cs_.groups()) {
      if (g.kind != VarKind::Gram) continue;
      std::uint32_t b = add_block(static_cast<int>(g.gram_dim), "gram:" + g.name);
      for (std::uint32_t a = 0; a < g.gram_dim; ++a) {
        for (std::uint32_t c = a; c < g.gram_dim; ++c) rel_.gram_vars[g.gram(a, c)] = {b, a, c};
      }
    }
    if (free_count > 0) {
      std::uint32_t b = add_block(-static_cast<int>(2 * free_count), "free");
      std::uint32_t k = 0;
      for (const auto& g : cs_.groups()) {
        if (g.kind != VarKind::Free) continue;
        for (std::uint32_t i = 0; i < g.count; ++i, ++k) {
          rel_.free_vars[g.first + i] = {Location{b, 2 * k, 2 * k},
                                         Location{b, 2 * k + 1, 2 * k + 1}};
        }
      }
    }
  }

  void add_normalization() {
    SdpConstraint c;
    c.entries.push_back(entry(rel_.moments.at(Monomial{}), 1.0));
    c.rhs = 1.0;
    push(std::move(c));
  }

  // Appends coef * E[term] for a term that is either a moment monomial or a
  // single auxiliary variable.
  void add_term(SdpConstraint& c, const Monomial& m, double coef) {
    if (!m.is_constant() && m.degree() == 1) {
      VarId v = m.factors()[0].first;
      if (auto it = rel_.free_vars.find(v); it != rel_.free_vars.end()) {
        c.entries.push_back(entry(it->second.first, coef));
        c.entries.push_back(entry(it->second.second, -coef));
        return;
      }
      if (auto it = rel_.gram_vars.find(v); it != rel_.gram_vars.end()) {
        c.entries.push_back(entry(it->second, coef));
        return;
      }
    }
    c.entries.push_back(entry(rel_.moments.at(m), coef));
  }

  void add_equalities() {
    for (std::size_t k = 0; k < cs_.equalities.size(); ++k) {
      const auto& p = cs_.equalities[k];
      if (p.is_zero()) continue;
      std::vector<Monomial> multipliers;
      if (cs_.has_auxiliary(p)) {
        multipliers.push_back(Monomial{});
        for (const auto& [m, c] : p.terms()) {
          if (!cs_.has_auxiliary(Polynomial(m)) && !available(m)) {
            throw DomainError("equality " + std::to_string(k) +
                              " uses a monomial outside the relaxation: " + m.to_string());
          }
        }
      } else {
        multipliers = ideal_multipliers(p, k);
      }
      for (const auto& gamma : multipliers) {
        SdpConstraint c;
        for (const auto& [m, coef] : p.terms()) {
          if (m.is_constant()) {
            if (gamma.is_constant()) {
              c.rhs -= coef;
            } else {
              add_term(c, gamma, coef);
            }
          } else {
            add_term(c, m * gamma, coef);
          }
        }
        push(std::move(c));
        ++rel_.equality_rows;
      }
    }
  }

  // Every gamma with p * gamma inside the available monomials.
  std::vector<Monomial> ideal_multipliers(const Polynomial& p, std::size_t k) {
    const Monomial& lead = p.terms().rbegin()->first;
    std::set<Monomial> out;
    for (const auto& [a, loc] : rel_.moments) {
      if (a.degree() < lead.degree() || !a.divisible_by(lead)) continue;
      Monomial gamma = a.divide(lead);
      if (out.count(gamma)) continue;
      bool ok = true;
      for (const auto& [m, c] : p.terms()) {
        if (!available(m * gamma)) {
          ok = false;
          break;
        }
      }
      if (ok) out.insert(gamma);
    }
    if (!out.count(Monomial{})) {
      throw DomainError("equality " + std::to_string(k) +
                        " does not fit in the relaxation degree");
    }
    return {out.begin(), out.end()};
  }

  void add_objective() {
    double w = limits_.trace_weight;
    if (w == 0.0) return;
    for (std::uint32_t b = 0; b < rel_.problem.block_sizes.size(); ++b) {
      for (std::uint32_t i = 0; i < rel_.problem.block_dim(b); ++i) {
        rel_.problem.objective.push_back({b, i, i, -w});
      }
    }
  }

  const ConstraintSystem& cs_;
  RelaxationLimits limits_;
  Relaxation rel_;
};

}  // namespace detail

// Lasserre-style moment relaxation of a constraint system: a moment matrix
// block, one localizing block per inequality (and the ball bound), one psd
// block per Gram group, a diagonal block for split free variables, and
// linear rows for normalization, ideal expansion and consistency.
inline Relaxation assemble_relaxation(const ConstraintSystem& cs,
                                      const RelaxationLimits& limits = {}) {
  return detail::Assembler(cs, limits).run();
}

}  // namespace sos_sparse
