#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sos_sparse/error.hpp"
#include "sos_sparse/poly/polynomial.hpp"
#include "sos_sparse/sos/relaxation.hpp"
#include "sos_sparse/sos/solver.hpp"

namespace sos_sparse {

// Linear functional on the monomials available in a relaxation, plus the
// values of any auxiliary (multiplier and Gram) variables.
class PseudoExpectation {
 public:
  PseudoExpectation(std::uint32_t degree, std::map<Monomial, double> moments,
                    std::map<VarId, double> auxiliary = {}, SolverReport report = {})
      : degree_(degree),
        moments_(std::move(moments)),
        auxiliary_(std::move(auxiliary)),
        report_(std::move(report)) {
    moments_[Monomial{}] = 1.0;
  }

  // Moments of the point mass at x (every monomial of degree <= `degree`
  // in the listed variables).
  static PseudoExpectation point_mass(const std::map<VarId, double>& x, std::uint32_t degree) {
    std::vector<VarId> vars;
    for (const auto& [v, val] : x) vars.push_back(v);
    std::map<Monomial, double> moments;
    for (const auto& m : monomials_up_to(vars, degree)) {
      moments[m] = Polynomial(m).evaluate(x);
    }
    return PseudoExpectation(degree, std::move(moments));
  }

  std::uint32_t degree() const { return degree_; }
  const std::map<Monomial, double>& moments() const { return moments_; }
  const std::map<VarId, double>& auxiliary() const { return auxiliary_; }
  const SolverReport& report() const { return report_; }

  bool has(const Monomial& m) const { return moments_.count(m) > 0; }

  double operator()(const Polynomial& q) const { return evaluate(q); }

  double evaluate(const Polynomial& q) const {
    double total = 0.0;
    for (const auto& [m, c] : q.terms()) {
      if (m.degree() == 1) {
        auto aux = auxiliary_.find(m.factors()[0].first);
        if (aux != auxiliary_.end()) {
          total += c * aux->second;
          continue;
        }
      }
      if (m.degree() > degree_) {
        throw DomainError("degree " + std::to_string(m.degree()) +
                          " exceeds the pseudoexpectation degree " + std::to_string(degree_));
      }
      auto it = moments_.find(m);
      if (it == moments_.end()) {
        throw DomainError("monomial " + m.to_string() + " is outside the relaxation");
      }
      total += c * it->second;
    }
    return total;
  }

  // M[a, b] = E[u_a u_b] over the given basis.
  Eigen::MatrixXd moment_matrix(const std::vector<Monomial>& basis) const {
    Eigen::MatrixXd out(basis.size(), basis.size());
    for (std::size_t i = 0; i < basis.size(); ++i) {
      for (std::size_t j = i; j < basis.size(); ++j) {
        out(i, j) = out(j, i) = evaluate(Polynomial(basis[i] * basis[j]));
      }
    }
    return out;
  }

 private:
  std::uint32_t degree_;
  std::map<Monomial, double> moments_;
  std::map<VarId, double> auxiliary_;
  SolverReport report_;
};

inline double pseudo_expect(const PseudoExpectation& pe, const Polynomial& q) {
  return pe.evaluate(q);
}

inline PseudoExpectation extract_pseudo_expectation(const Relaxation& rel, const SdpSolution& sol) {
  std::map<Monomial, double> moments;
  for (const auto& [m, loc] : rel.moments) moments[m] = sol.value(loc.block, loc.i, loc.j);
  std::map<VarId, double> aux;
  for (const auto& [v, locs] : rel.free_vars) {
    aux[v] = sol.value(locs.first.block, locs.first.i, locs.first.j) -
             sol.value(locs.second.block, locs.second.i, locs.second.j);
  }
  for (const auto& [v, loc] : rel.gram_vars) aux[v] = sol.value(loc.block, loc.i, loc.j);
  return PseudoExpectation(rel.degree, std::move(moments), std::move(aux), sol.report);
}

struct RelaxationResult {
  SolverReport report;
  std::optional<PseudoExpectation> pe;

  bool feasible() const { return report.status == SolveStatus::Feasible; }
};

// Assembles, solves and extracts. The pseudoexpectation is present only for
// a feasible solve.
inline RelaxationResult solve_relaxation(const ConstraintSystem& cs, const SolverConfig& cfg = {},
                                         const RelaxationLimits& limits = {}) {
  Relaxation rel = assemble_relaxation(cs, limits);
  SdpSolution sol = solve_sdp(rel.problem, cfg);
  RelaxationResult out{sol.report, std::nullopt};
  if (sol.report.status == SolveStatus::Feasible) out.pe = extract_pseudo_expectation(rel, sol);
  return out;
}

}  // namespace sos_sparse
