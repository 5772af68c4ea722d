#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sos_sparse/poly/polynomial.hpp"
#include "sos_sparse/sos/constraint_system.hpp"

namespace sos_sparse {

// u^T G u over a monomial basis u, optionally multiplied by one of the
// system's inequality axioms.
struct GramTerm {
  std::vector<Monomial> basis;
  Eigen::MatrixXd gram;
  std::optional<std::size_t> inequality;

  Polynomial form() const {
    Polynomial out;
    for (std::size_t a = 0; a < basis.size(); ++a) {
      for (std::size_t b = 0; b < basis.size(); ++b) {
        out.add_term(basis[a] * basis[b], gram(a, b));
      }
    }
    return out;
  }
};

// target = sum_i multipliers[i] * equalities[i] + sum_j squares[j].
struct SosCertificate {
  std::vector<Polynomial> multipliers;
  std::vector<GramTerm> squares;
};

enum class CertificateVerdict { Accepted, CoefficientMismatch, NonPsdGram };

inline const char* to_string(CertificateVerdict v) {
  switch (v) {
    case CertificateVerdict::Accepted:
      return "accepted";
    case CertificateVerdict::CoefficientMismatch:
      return "coefficient-mismatch";
    case CertificateVerdict::NonPsdGram:
      return "non-psd-gram";
  }
  return "?";
}

struct CertificateCheck {
  CertificateVerdict verdict = CertificateVerdict::Accepted;
  double max_mismatch = 0.0;
  double min_eigenvalue = std::numeric_limits<double>::infinity();
  std::string detail;

  bool accepted() const { return verdict == CertificateVerdict::Accepted; }
};

inline Polynomial reconstruct(const SosCertificate& cert, const ConstraintSystem& axioms) {
  if (cert.multipliers.size() > axioms.equalities.size()) {
    throw DomainError("more multipliers than equality axioms");
  }
  Polynomial out;
  for (std::size_t i = 0; i < cert.multipliers.size(); ++i) {
    if (!cert.multipliers[i].is_zero()) out += cert.multipliers[i] * axioms.equalities[i];
  }
  for (const auto& sq : cert.squares) {
    if (sq.gram.rows() != static_cast<Eigen::Index>(sq.basis.size()) ||
        sq.gram.cols() != static_cast<Eigen::Index>(sq.basis.size())) {
      throw DomainError("Gram matrix does not match its basis");
    }
    Polynomial f = sq.form();
    if (sq.inequality) f = f * axioms.inequalities.at(*sq.inequality);
    out += f;
  }
  return out;
}

inline CertificateCheck verify_sos_certificate(const SosCertificate& cert, const Polynomial& target,
                                               const ConstraintSystem& axioms, double tol) {
  CertificateCheck out;
  for (std::size_t j = 0; j < cert.squares.size(); ++j) {
    const auto& g = cert.squares[j].gram;
    if (g.rows() == 0) continue;
    if ((g - g.transpose()).cwiseAbs().maxCoeff() > tol) {
      out.verdict = CertificateVerdict::NonPsdGram;
      out.detail = "Gram matrix " + std::to_string(j) + " is not symmetric";
      return out;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (g + g.transpose()),
                                                      Eigen::EigenvaluesOnly);
    out.min_eigenvalue = std::min(out.min_eigenvalue, es.eigenvalues().minCoeff());
  }
  Polynomial diff = reconstruct(cert, axioms) - target;
  out.max_mismatch = diff.max_abs_coefficient();
  if (out.min_eigenvalue < -tol) {
    out.verdict = CertificateVerdict::NonPsdGram;
    out.detail = "Gram eigenvalue " + std::to_string(out.min_eigenvalue);
  } else if (out.max_mismatch > tol) {
    out.verdict = CertificateVerdict::CoefficientMismatch;
    out.detail = "largest coefficient difference " + std::to_string(out.max_mismatch);
  }
  return out;
}

// Builds a Gram term from weighted squares sum_s w_s f_s^2 (w_s >= 0).
inline GramTerm gram_from_squares(const std::vector<Polynomial>& squares,
                                  const std::vector<double>& weights) {
  std::map<Monomial, std::size_t> index;
  for (const auto& f : squares) {
    for (const auto& [m, c] : f.terms()) index.emplace(m, 0);
  }
  GramTerm out;
  for (auto& [m, i] : index) {
    i = out.basis.size();
    out.basis.push_back(m);
  }
  out.gram = Eigen::MatrixXd::Zero(out.basis.size(), out.basis.size());
  for (std::size_t s = 0; s < squares.size(); ++s) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(out.basis.size());
    for (const auto& [m, coef] : squares[s].terms()) c[index.at(m)] = coef;
    out.gram += weights[s] * c * c.transpose();
  }
  return out;
}

}  // namespace sos_sparse
