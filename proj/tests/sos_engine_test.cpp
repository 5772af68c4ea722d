#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "sos_sparse/programs/k_sparse.hpp"
#include "sos_sparse/sos/certificate.hpp"
#include "sos_sparse/sos/pseudo_expectation.hpp"
#include "sos_sparse/sos/relaxation.hpp"
#include "sos_sparse/sos/sdpa.hpp"
#include "sos_sparse/sos/solver.hpp"

namespace ss = sos_sparse;
using ss::Monomial;
using ss::Polynomial;

namespace {

ss::ConstraintSystem single_var_system(double value) {
  ss::ConstraintSystem cs;
  cs.add_group("x", 1);
  Polynomial x = Polynomial::var(0);
  cs.equalities.push_back(x * x - x);
  cs.equalities.push_back(x - value);
  cs.relaxation_degree = 2;
  return cs;
}

Polynomial random_poly(const std::vector<Monomial>& basis, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Polynomial p;
  for (const auto& m : basis) p.add_term(m, g(rng));
  return p;
}

}  // namespace

TEST(Relaxation, ForcedIdealSolution) {
  auto result = ss::solve_relaxation(single_var_system(1.0));
  ASSERT_TRUE(result.feasible()) << result.report.message;
  const auto& pe = *result.pe;
  EXPECT_NEAR(pe(Polynomial::var(0)), 1.0, 1e-6);
  EXPECT_NEAR(pe(Polynomial(Monomial::var(0, 2))), 1.0, 1e-6);
}

TEST(Relaxation, LinearlyInconsistentIdealIsInfeasible) {
  auto result = ss::solve_relaxation(single_var_system(0.5));
  EXPECT_EQ(result.report.status, ss::SolveStatus::Infeasible);
  EXPECT_FALSE(result.pe.has_value());
}

TEST(Relaxation, ConicInfeasibilityDetected) {
  ss::ConstraintSystem cs;
  cs.add_group("x", 1);
  Polynomial x = Polynomial::var(0);
  cs.equalities.push_back(x * x + 1.0);
  cs.relaxation_degree = 2;
  auto result = ss::solve_relaxation(cs);
  EXPECT_EQ(result.report.status, ss::SolveStatus::Infeasible) << result.report.message;
}

TEST(Relaxation, SparseAxiomMomentMatrixSize) {
  auto cs = ss::build_k_sparse_axioms(2, 1);
  auto rel = ss::assemble_relaxation(cs);
  ASSERT_FALSE(rel.problem.block_sizes.empty());
  EXPECT_EQ(rel.problem.block_sizes[0], 5);
  EXPECT_EQ(rel.basis.size(), 5u);
  EXPECT_GT(rel.equality_rows, 0u);
}

TEST(Relaxation, SizeCapReportsCount) {
  ss::ConstraintSystem cs;
  cs.add_group("x", 40);
  cs.relaxation_degree = 6;
  try {
    ss::assemble_relaxation(cs);
    FAIL() << "expected a size error";
  } catch (const ss::SizeError& e) {
    EXPECT_EQ(e.count(), 12341u);  // C(43, 3)
    EXPECT_EQ(e.cap(), 5000u);
  }
}

TEST(Relaxation, UnregisteredVariableRejected) {
  ss::ConstraintSystem cs;
  cs.add_group("x", 1);
  cs.equalities.push_back(Polynomial::var(3));
  EXPECT_THROW(ss::assemble_relaxation(cs), ss::DomainError);
}

TEST(Relaxation, Deterministic) {
  auto cs = ss::build_k_sparse_axioms(3, 2);
  cs.relaxation_degree = 4;
  auto a = ss::assemble_relaxation(cs);
  auto b = ss::assemble_relaxation(cs);
  EXPECT_TRUE(a.problem == b.problem);
  EXPECT_EQ(ss::export_sdpa(a.problem), ss::export_sdpa(b.problem));
}

class SparseAxiomSolve : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    cs_ = new ss::ConstraintSystem(ss::build_k_sparse_axioms(2, 1));
    cs_->relaxation_degree = 4;
    rel_ = new ss::Relaxation(ss::assemble_relaxation(*cs_));
    auto sol = ss::solve_sdp(rel_->problem);
    report_ = new ss::SolverReport(sol.report);
    if (sol.report.status == ss::SolveStatus::Feasible) {
      pe_ = new ss::PseudoExpectation(ss::extract_pseudo_expectation(*rel_, sol));
    }
  }
  static void TearDownTestSuite() {
    delete cs_;
    delete rel_;
    delete report_;
    delete pe_;
  }

  static ss::ConstraintSystem* cs_;
  static ss::Relaxation* rel_;
  static ss::SolverReport* report_;
  static ss::PseudoExpectation* pe_;
};

ss::ConstraintSystem* SparseAxiomSolve::cs_ = nullptr;
ss::Relaxation* SparseAxiomSolve::rel_ = nullptr;
ss::SolverReport* SparseAxiomSolve::report_ = nullptr;
ss::PseudoExpectation* SparseAxiomSolve::pe_ = nullptr;

TEST_F(SparseAxiomSolve, Converges) {
  ASSERT_EQ(report_->status, ss::SolveStatus::Feasible) << report_->message;
  EXPECT_LE(report_->max_eq_residual, 1e-7);
  EXPECT_GE(report_->min_eigenvalue, -1e-6);
  EXPECT_DOUBLE_EQ((*pe_)(Polynomial(1.0)), 1.0);
}

TEST_F(SparseAxiomSolve, SquaresAreNonnegative) {
  ASSERT_NE(pe_, nullptr);
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    Polynomial p = random_poly(rel_->basis, rng);
    EXPECT_GE((*pe_)(p * p), -1e-6 * p.squared_coefficient_norm());
  }
}

TEST_F(SparseAxiomSolve, CauchySchwarz) {
  ASSERT_NE(pe_, nullptr);
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    Polynomial f = random_poly(rel_->basis, rng);
    Polynomial g = random_poly(rel_->basis, rng);
    double fg = (*pe_)(f * g);
    EXPECT_LE(fg * fg, (*pe_)(f * f) * (*pe_)(g * g) + 1e-5);
  }
}

TEST_F(SparseAxiomSolve, IdealClosure) {
  ASSERT_NE(pe_, nullptr);
  for (const auto& p : cs_->equalities) {
    for (const auto& [gamma, loc] : rel_->moments) {
      bool fits = true;
      for (const auto& [m, c] : p.terms()) fits = fits && pe_->has(m * gamma);
      if (!fits) continue;
      EXPECT_LE(std::abs((*pe_)(p * Polynomial(gamma))), 1e-7);
    }
  }
}

TEST_F(SparseAxiomSolve, LinearityAndDegreeGuard) {
  ASSERT_NE(pe_, nullptr);
  Polynomial a = Polynomial::var(0) * Polynomial::var(0);
  Polynomial b = Polynomial::var(2);
  EXPECT_NEAR((*pe_)(2.0 * a - 3.0 * b), 2.0 * (*pe_)(a) - 3.0 * (*pe_)(b), 1e-12);
  EXPECT_THROW((*pe_)(Polynomial(Monomial::var(0, 5))), ss::DomainError);
}

TEST(PseudoExpectation, PointMass) {
  auto pe = ss::PseudoExpectation::point_mass({{0, 2.0}}, 2);
  EXPECT_DOUBLE_EQ(ss::pseudo_expect(pe, Polynomial(Monomial::var(0, 2))), 4.0);
  EXPECT_DOUBLE_EQ(ss::pseudo_expect(pe, Polynomial(1.0)), 1.0);
  EXPECT_THROW(ss::pseudo_expect(pe, Polynomial(Monomial::var(0, 3))), ss::DomainError);
}

TEST(Certificate, AcceptsSquare) {
  ss::ConstraintSystem axioms;
  axioms.add_group("x", 1);
  Polynomial x = Polynomial::var(0);
  ss::SosCertificate cert;
  cert.squares.push_back(ss::gram_from_squares({x - 1.0}, {1.0}));
  auto check = ss::verify_sos_certificate(cert, x * x - 2.0 * x + 1.0, axioms, 1e-9);
  EXPECT_TRUE(check.accepted()) << check.detail;
  auto bad = ss::verify_sos_certificate(cert, x * x - 2.0 * x + 0.5, axioms, 1e-9);
  EXPECT_EQ(bad.verdict, ss::CertificateVerdict::CoefficientMismatch);
}

TEST(Certificate, RejectsIndefiniteGram) {
  ss::ConstraintSystem axioms;
  axioms.add_group("x", 1);
  ss::GramTerm g;
  g.basis = {Monomial{}, Monomial::var(0)};
  g.gram = Eigen::Matrix2d{{1.0, 0.0}, {0.0, -1.0}};
  ss::SosCertificate cert;
  cert.squares.push_back(g);
  Polynomial target = 1.0 - Polynomial(Monomial::var(0, 2));
  auto check = ss::verify_sos_certificate(cert, target, axioms, 1e-9);
  EXPECT_EQ(check.verdict, ss::CertificateVerdict::NonPsdGram);
}

TEST(Certificate, SparseCoefficientBoundChain) {
  // d = 2, t = 1: 1 * max(a^2) - (a_0 v_0 + a_1 v_1)^2.
  auto built = ss::build_sparse_bound_certificate(2, 1, 1, {{{0}, 0.8}, {{1}, -1.7}});
  EXPECT_DOUBLE_EQ(built.bound, 1.7 * 1.7);
  auto check = ss::verify_sos_certificate(built.certificate, built.target, built.axioms, 1e-9);
  EXPECT_TRUE(check.accepted()) << check.detail;

  // Perturbing one multiplier coefficient breaks the identity.
  auto perturbed = built.certificate;
  perturbed.multipliers.back() += 1e-3;
  auto bad = ss::verify_sos_certificate(perturbed, built.target, built.axioms, 1e-9);
  EXPECT_EQ(bad.verdict, ss::CertificateVerdict::CoefficientMismatch);
}

TEST(Certificate, SparseCoefficientBoundHigherOrder) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (unsigned t : {2u, 3u}) {
    std::map<ss::IndexTuple, double> coeffs;
    ss::for_each_ordered_tuple(3, t, [&](const ss::IndexTuple& T) { coeffs[T] = g(rng); });
    auto built = ss::build_sparse_bound_certificate(3, 2, t, coeffs);
    auto check = ss::verify_sos_certificate(built.certificate, built.target, built.axioms, 1e-8);
    EXPECT_TRUE(check.accepted()) << t << ": " << check.detail;
  }
}

TEST(Sdpa, ToyProblemText) {
  ss::SdpProblem p;
  p.block_sizes = {1};
  p.objective = {{0, 0, 0, 1.0}};
  p.constraints = {{{{0, 0, 0, 1.0}}, 1.0}};
  std::string text = ss::export_sdpa(p);
  EXPECT_EQ(text, "1\n1\n1\n1\n0 1 1 1 1\n1 1 1 1 1\n");
  auto sol = ss::solve_sdp(p);
  ASSERT_EQ(sol.report.status, ss::SolveStatus::Feasible);
  EXPECT_NEAR(sol.value(0, 0, 0), 1.0, 1e-9);
}

TEST(Sdpa, RoundTripAssembledProblem) {
  auto cs = ss::build_k_sparse_axioms(2, 1);
  cs.relaxation_degree = 4;
  cs.inequalities.push_back(Polynomial(1.0) - Polynomial(Monomial::var(0, 2)));
  auto rel = ss::assemble_relaxation(cs);
  std::string text = ss::export_sdpa(rel.problem, "assembled\nsecond line");
  auto parsed = ss::parse_sdpa(text);
  EXPECT_TRUE(parsed == rel.problem);
  EXPECT_EQ(ss::export_sdpa(parsed, "assembled\nsecond line"), text);
  for (const auto& c : parsed.constraints) {
    for (const auto& e : c.entries) EXPECT_LE(e.i, e.j);
  }
}

TEST(Sdpa, ShortestRoundTripDoubles) {
  ss::SdpProblem p;
  p.block_sizes = {2, -3};
  p.objective = {{0, 0, 1, 0.1}, {1, 2, 2, -1e-300}};
  p.constraints = {{{{0, 0, 0, 1.0 / 3.0}, {1, 0, 0, 6.02214076e23}}, std::nextafter(1.0, 2.0)}};
  auto parsed = ss::parse_sdpa(ss::export_sdpa(p));
  EXPECT_TRUE(parsed == p);
}

TEST(Sdpa, ParseAcceptsSeparatorsAndComments) {
  std::string text =
      "* a comment\n"
      "\"another\n"
      "1 =mdim\n"
      "1 =nblock\n"
      "{2}\n"
      "{1.5}\n"
      "0 1 1 1 -1\n"
      "1 1 2 1 0.5\n";
  auto p = ss::parse_sdpa(text);
  ASSERT_EQ(p.constraints.size(), 1u);
  EXPECT_EQ(p.constraints[0].rhs, 1.5);
  ASSERT_EQ(p.constraints[0].entries.size(), 1u);
  EXPECT_EQ(p.constraints[0].entries[0].i, 0u);
  EXPECT_EQ(p.constraints[0].entries[0].j, 1u);
}

TEST(Sdpa, ParseErrorCarriesLine) {
  std::string text = "1\n1\n2\n1\n0 1 1 1 1\n1 1 x 1 1\n";
  try {
    ss::parse_sdpa(text);
    FAIL() << "expected a parse error";
  } catch (const ss::ParseError& e) {
    EXPECT_EQ(e.line(), 6u);
  }
  EXPECT_THROW(ss::parse_sdpa("1\n1\n2\n1\n0 1 3 3 1\n"), ss::ParseError);
  EXPECT_THROW(ss::parse_sdpa("1\n"), ss::ParseError);
}
