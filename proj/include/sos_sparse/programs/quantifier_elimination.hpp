#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sos_sparse/error.hpp"
#include "sos_sparse/poly/polynomial.hpp"
#include "sos_sparse/sos/certificate.hpp"
#include "sos_sparse/sos/constraint_system.hpp"
#include "sos_sparse/sos/pseudo_expectation.hpp"

namespace sos_sparse {

// A polynomial in the quantified variables F whose coefficients are
// polynomials in the outer program variables. Keys use the variable ids of
// the axiom system; values use the ids of the outer program.
using SplitPolynomial = std::map<Monomial, Polynomial>;

inline SplitPolynomial constant_split(const Polynomial& b) {
  SplitPolynomial out;
  for (const auto& [m, c] : b.terms()) out[m] = Polynomial(c);
  return out;
}

inline std::uint32_t split_degree(const SplitPolynomial& b) {
  std::uint32_t out = 0;
  for (const auto& [m, c] : b) {
    if (!c.is_zero()) out = std::max(out, m.degree());
  }
  return out;
}

// Encoding of "axioms |- b >= 0 with a degree-2t proof" as equalities over
// multiplier coefficients P_i and a Gram matrix G:
//   b = sum_i a_i p_i + u^T G u,  coefficient by coefficient in F.
struct ConsFragment {
  std::string name;
  std::uint32_t proof_degree = 0;
  std::vector<Monomial> gram_basis;
  std::string gram_group;
  // One group per axiom; entry j multiplies multiplier_monomials[i][j].
  std::vector<std::string> multiplier_groups;
  std::vector<std::size_t> multiplier_axioms;
  std::vector<std::vector<Monomial>> multiplier_monomials;
  // Index range of the emitted equalities inside the outer system.
  std::size_t first_equality = 0;
  std::size_t equality_count = 0;
};

namespace detail {

inline std::vector<VarId> system_vars(const ConstraintSystem& cs) {
  std::vector<VarId> out;
  for (const auto& g : cs.groups()) {
    for (std::uint32_t i = 0; i < g.count; ++i) out.push_back(g.first + i);
  }
  return out;
}

// Monomials of degree <= t that no axiom's leading monomial divides. Any
// square q^2 equals (q mod axioms)^2 modulo the axioms at the same degree,
// so a Gram matrix over these monomials loses nothing.
inline std::vector<Monomial> reduced_basis(const ConstraintSystem& axioms, std::uint32_t t) {
  std::vector<Monomial> leads;
  for (const auto& a : axioms.equalities) {
    if (!a.is_zero()) leads.push_back(a.terms().rbegin()->first);
  }
  std::vector<Monomial> out;
  for (const auto& m : monomials_up_to(system_vars(axioms), t)) {
    bool reducible = false;
    for (const auto& l : leads) {
      if (!l.is_constant() && m.divisible_by(l)) {
        reducible = true;
        break;
      }
    }
    if (!reducible) out.push_back(m);
  }
  return out;
}

}  // namespace detail

struct ConsOptions {
  // Number of squares the proof may use; 0 means the Gram basis size.
  std::size_t squares = 0;
};

// Appends the coefficient-match equalities and the auxiliary groups to `cs`.
// The proof degree is 2t and must cover deg_F(b).
inline ConsFragment build_cons_constraints(ConstraintSystem& cs, const ConstraintSystem& axioms,
                                           const SplitPolynomial& b, std::uint32_t t,
                                           const std::string& name, const ConsOptions& opts = {}) {
  for (const auto& g : axioms.groups()) {
    if (g.kind != VarKind::Moment) throw DomainError("axiom variables must be plain variables");
  }
  const std::uint32_t degree = 2 * t;
  if (split_degree(b) > degree) {
    throw DomainError("proof degree " + std::to_string(degree) + " is below deg_F(b) = " +
                      std::to_string(split_degree(b)));
  }
  const auto fvars = detail::system_vars(axioms);
  const double cap = std::pow(static_cast<double>(fvars.size()), static_cast<double>(t));

  ConsFragment frag;
  frag.name = name;
  frag.proof_degree = degree;
  frag.gram_basis = detail::reduced_basis(axioms, t);
  std::size_t squares = opts.squares == 0 ? frag.gram_basis.size() : opts.squares;
  if (static_cast<double>(squares) > cap) {
    throw SizeError("squares requested for " + name, squares, static_cast<std::size_t>(cap));
  }
  frag.gram_group = name + ".G";
  cs.add_gram_group(frag.gram_group, static_cast<std::uint32_t>(frag.gram_basis.size()));
  const VariableGroup gram = cs.group(frag.gram_group);

  // Coefficient accumulator: F-monomial -> polynomial over outer and
  // auxiliary variables.
  std::map<Monomial, Polynomial> rhs;
  for (const auto& mono : monomials_up_to(fvars, degree)) rhs[mono];

  for (std::size_t i = 0; i < axioms.equalities.size(); ++i) {
    const Polynomial& a = axioms.equalities[i];
    if (a.degree() > degree) continue;
    auto monos = monomials_up_to(fvars, degree - a.degree());
    std::string gname = name + ".P" + std::to_string(i);
    VarId first = cs.add_group(gname, static_cast<std::uint32_t>(monos.size()), VarKind::Free);
    for (std::size_t j = 0; j < monos.size(); ++j) {
      Polynomial pv = Polynomial::var(first + static_cast<VarId>(j));
      for (const auto& [am, ac] : a.terms()) rhs[am * monos[j]] += ac * pv;
    }
    frag.multiplier_groups.push_back(gname);
    frag.multiplier_axioms.push_back(i);
    frag.multiplier_monomials.push_back(std::move(monos));
  }
  for (std::uint32_t x = 0; x < frag.gram_basis.size(); ++x) {
    for (std::uint32_t y = x; y < frag.gram_basis.size(); ++y) {
      double mult = x == y ? 1.0 : 2.0;
      rhs[frag.gram_basis[x] * frag.gram_basis[y]] += mult * Polynomial::var(gram.gram(x, y));
    }
  }

  frag.first_equality = cs.equalities.size();
  for (auto& [mono, r] : rhs) {
    Polynomial eq = -r;
    if (auto it = b.find(mono); it != b.end()) eq += it->second;
    cs.equalities.push_back(std::move(eq));
  }
  frag.equality_count = cs.equalities.size() - frag.first_equality;
  return frag;
}

// Multiplier polynomials of one fragment, read from an inner solution, in the
// order of the axiom system's equalities.
inline std::vector<Polynomial> fragment_multipliers(const ConstraintSystem& inner_or_outer,
                                                    const ConsFragment& f,
                                                    const std::map<VarId, double>& values) {
  std::size_t n = 0;
  for (auto a : f.multiplier_axioms) n = std::max(n, a + 1);
  std::vector<Polynomial> out(n);
  for (std::size_t i = 0; i < f.multiplier_groups.size(); ++i) {
    const auto& g = inner_or_outer.group(f.multiplier_groups[i]);
    Polynomial& p = out[f.multiplier_axioms[i]];
    for (std::size_t j = 0; j < f.multiplier_monomials[i].size(); ++j) {
      p.add_term(f.multiplier_monomials[i][j], values.at(g.first + static_cast<VarId>(j)));
    }
  }
  return out;
}

// Outcome of solving a fragment for (P, G) at a fixed outer assignment.
struct InnerCertificate {
  SolverReport report;
  double max_residual = 0.0;
  double min_gram_eigenvalue = 0.0;
  // One certificate per fragment, against the fragment's axiom system.
  std::vector<SosCertificate> certificates;
  bool found = false;
};

// Substitutes the outer values and solves the remaining linear + psd system
// in the auxiliary variables of the given fragments.
inline InnerCertificate solve_inner_certificate(const ConstraintSystem& cs,
                                                const std::vector<ConsFragment>& frags,
                                                const std::map<VarId, double>& outer,
                                                const SolverConfig& cfg = {}) {
  ConstraintSystem inner;
  std::map<VarId, VarId> remap;
  auto copy_group = [&](const std::string& gname) {
    const auto& g = cs.group(gname);
    VarId first = g.kind == VarKind::Gram ? inner.add_gram_group(gname, g.gram_dim)
                                          : inner.add_group(gname, g.count, g.kind);
    for (std::uint32_t i = 0; i < g.count; ++i) remap[g.first + i] = first + i;
  };
  std::vector<Polynomial> eqs;
  for (const auto& f : frags) {
    copy_group(f.gram_group);
    for (const auto& gname : f.multiplier_groups) copy_group(gname);
  }
  std::map<VarId, Polynomial> rename;
  for (const auto& [from, to] : remap) rename[from] = Polynomial::var(to);
  for (const auto& f : frags) {
    for (std::size_t e = 0; e < f.equality_count; ++e) {
      Polynomial p = cs.equalities[f.first_equality + e].partial_evaluate(outer);
      for (const auto& [m, c] : p.terms()) {
        for (const auto& fac : m.factors()) {
          if (!remap.count(fac.first)) throw MissingVariableError(fac.first);
        }
      }
      inner.equalities.push_back(p.substitute(rename));
    }
  }
  inner.relaxation_degree = 2;
  inner.basis.full_degree = 0;

  InnerCertificate out;
  Relaxation rel = assemble_relaxation(inner);
  SdpSolution sol = solve_sdp(rel.problem, cfg);
  out.report = sol.report;
  out.min_gram_eigenvalue = sol.report.min_eigenvalue;
  out.max_residual = sol.report.max_eq_residual;
  if (sol.report.status != SolveStatus::Feasible) return out;
  auto pe = extract_pseudo_expectation(rel, sol);
  double resid = 0.0;
  for (const auto& eq : inner.equalities) resid = std::max(resid, std::abs(pe(eq)));
  out.max_residual = resid;
  double min_eig = std::numeric_limits<double>::infinity();
  for (const auto& f : frags) {
    const auto& g = inner.group(f.gram_group);
    GramTerm term;
    term.basis = f.gram_basis;
    term.gram.resize(g.gram_dim, g.gram_dim);
    for (std::uint32_t a = 0; a < g.gram_dim; ++a) {
      for (std::uint32_t c = a; c < g.gram_dim; ++c) {
        term.gram(a, c) = term.gram(c, a) = pe.auxiliary().at(g.gram(a, c));
      }
    }
    if (g.gram_dim > 0) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(term.gram, Eigen::EigenvaluesOnly);
      min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
    }
    SosCertificate cert;
    cert.squares.push_back(std::move(term));
    cert.multipliers = fragment_multipliers(inner, f, pe.auxiliary());
    out.certificates.push_back(std::move(cert));
  }
  out.min_gram_eigenvalue = min_eig;
  out.found = true;
  return out;
}

}  // namespace sos_sparse
