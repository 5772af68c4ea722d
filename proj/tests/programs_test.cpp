#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "sos_sparse/programs/k_sparse.hpp"
#include "sos_sparse/programs/programs.hpp"
#include "sos_sparse/programs/quantifier_elimination.hpp"
#include "sos_sparse/sos/pseudo_expectation.hpp"
#include "sos_sparse/sos/relaxation.hpp"

using namespace sos_sparse;

namespace {

Eigen::MatrixXd gaussian_rows(std::size_t m, const Eigen::MatrixXd& sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  Eigen::MatrixXd L = llt.matrixL();
  Eigen::MatrixXd out(m, sigma.rows());
  for (std::size_t i = 0; i < m; ++i) {
    Eigen::VectorXd z(sigma.rows());
    for (Eigen::Index a = 0; a < z.size(); ++a) z[a] = g(rng);
    out.row(static_cast<Eigen::Index>(i)) = (L * z).transpose();
  }
  return out;
}

std::map<VarId, double> assignment(const std::vector<double>& v, const std::vector<double>& z) {
  std::map<VarId, double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<VarId>(i)] = v[i];
  for (std::size_t i = 0; i < z.size(); ++i) out[static_cast<VarId>(v.size() + i)] = z[i];
  return out;
}

double max_abs_residual(const ConstraintSystem& cs, const std::map<VarId, double>& x) {
  double r = 0.0;
  for (const auto& p : cs.equalities) r = std::max(r, std::abs(p.evaluate(x)));
  return r;
}

}  // namespace

TEST(KSparseAxioms, CountsAndAssignments) {
  auto cs = build_k_sparse_axioms(3, 1);
  EXPECT_EQ(cs.equalities.size(), 8u);
  EXPECT_EQ(max_abs_residual(cs, assignment({1, 0, 0}, {1, 0, 0})), 0.0);
  double s = 1.0 / std::sqrt(2.0);
  EXPECT_GT(max_abs_residual(cs, assignment({s, s, 0}, {1, 0, 0})), 0.1);
  EXPECT_GT(max_abs_residual(cs, assignment({s, s, 0}, {1, 1, 0})), 0.1);
  EXPECT_THROW(build_k_sparse_axioms(2, 3), DomainError);
}

TEST(Cons, SparseBoundExampleHasSeventyEqualities) {
  auto axioms = build_k_sparse_axioms(2, 1);
  std::map<IndexTuple, double> a{{{0, 0}, 0.7}, {{0, 1}, -0.2}, {{1, 0}, -0.2}, {{1, 1}, 1.1}};
  Polynomial p = sparse_form(a, 2);
  Polynomial b = Polynomial(4.0) - p * p;
  ConstraintSystem cs;
  auto frag = build_cons_constraints(cs, axioms, constant_split(b), 2, "item");
  EXPECT_EQ(frag.equality_count, 70u);
  EXPECT_EQ(frag.proof_degree, 4u);

  auto res = solve_inner_certificate(cs, {frag}, {});
  ASSERT_TRUE(res.found) << res.report.message;
  auto chk = verify_sos_certificate(res.certificates[0], b, axioms, 1e-6);
  EXPECT_TRUE(chk.accepted()) << chk.detail;
}

TEST(Cons, ConstantOneIsSatisfiableWithZeroMultipliers) {
  auto axioms = build_k_sparse_axioms(2, 1);
  ConstraintSystem cs;
  auto frag = build_cons_constraints(cs, axioms, constant_split(Polynomial(1.0)), 1, "one");
  std::map<VarId, double> values;
  for (const auto& g : cs.groups()) {
    for (std::uint32_t i = 0; i < g.count; ++i) values[g.first + i] = 0.0;
  }
  // Gram entry of the constant monomial carries the 1.
  const auto& gram = cs.group(frag.gram_group);
  ASSERT_TRUE(frag.gram_basis.front().is_constant());
  values[gram.gram(0, 0)] = 1.0;
  EXPECT_EQ(max_abs_residual(cs, values), 0.0);

  auto res = solve_inner_certificate(cs, {frag}, {});
  ASSERT_TRUE(res.found);
  EXPECT_TRUE(verify_sos_certificate(res.certificates[0], Polynomial(1.0), axioms, 1e-6).accepted());
}

TEST(Cons, DegreeAndSquareCapErrors) {
  auto axioms = build_k_sparse_axioms(2, 1);
  ConstraintSystem cs;
  Polynomial v = Polynomial::var(0);
  EXPECT_THROW(build_cons_constraints(cs, axioms, constant_split(v.pow(4)), 1, "low"), DomainError);
  ConsOptions opts;
  opts.squares = 17;  // |F|^t = 4^2
  EXPECT_THROW(build_cons_constraints(cs, axioms, constant_split(Polynomial(1.0)), 2, "cap", opts),
               SizeError);
}

TEST(Cons, MissingOuterValueIsReported) {
  auto axioms = build_k_sparse_axioms(2, 1);
  ConstraintSystem cs;
  VarId s = cs.add_group("s", 1);
  SplitPolynomial b{{Monomial{}, Polynomial::var(s)}};
  auto frag = build_cons_constraints(cs, axioms, b, 1, "item");
  EXPECT_THROW(solve_inner_certificate(cs, {frag}, {}), MissingVariableError);
  auto res = solve_inner_certificate(cs, {frag}, {{s, 2.0}});
  EXPECT_TRUE(res.found);
}

// (sum_T a_T v_T)^2 <= k^t max a_T^2 for k-sparse unit v.
TEST(KSparseAxioms, CoefficientBoundScalarSoundness) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> dd(1, 10);
  const std::uint32_t ts[] = {1, 2, 4};
  int trials = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    std::uint32_t t = ts[rep % 3];
    std::uint32_t d = static_cast<std::uint32_t>(dd(rng));
    if (t == 4) d = std::min<std::uint32_t>(d, 6);
    std::uint32_t k = 1 + static_cast<std::uint32_t>(rng() % std::min<std::uint32_t>(d, 5));
    std::vector<std::uint32_t> idx(d);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<double> v(d, 0.0);
    double norm = 0.0;
    for (std::uint32_t j = 0; j < k; ++j) {
      v[idx[j]] = g(rng);
      norm += v[idx[j]] * v[idx[j]];
    }
    for (auto& x : v) x /= std::sqrt(norm);
    double amax = 0.0;
    double p = 0.0;
    for_each_ordered_tuple(d, t, [&](const IndexTuple& T) {
      double a = g(rng);
      amax = std::max(amax, a * a);
      double prod = a;
      for (auto i : T) prod *= v[i];
      p += prod;
    });
    EXPECT_LE(p * p, std::pow(k, t) * amax + 1e-9);
    ++trials;
  }
  EXPECT_EQ(trials, 1000);
}

TEST(SparseMeanProgram, CountsAndStructure) {
  Eigen::MatrixXd y = gaussian_rows(5, Eigen::MatrixXd::Identity(3, 3), 1);
  auto pb = build_sparse_mean_program(y, 0.2, 1, 3.0, 2);
  EXPECT_EQ(pb.base_equalities, 5u + 5u * 3u + 1u);
  EXPECT_EQ(pb.meta.nominal_degree, 4u);
  EXPECT_EQ(pb.meta.relaxation_degree, 2u);
  EXPECT_EQ(pb.meta.proof_degrees, std::vector<std::uint32_t>{4});
  EXPECT_TRUE(pb.meta.eps_above_threshold);
  EXPECT_DOUBLE_EQ(pb.meta.weight_sum, 4.0);
  ASSERT_EQ(pb.mu.size(), 3u);
  EXPECT_EQ(pb.mu[0].degree(), 1u);
  // Last corruption row is sum w - (1 - eps) m.
  const auto& wsum = pb.cs.equalities[pb.base_equalities - 1];
  EXPECT_DOUBLE_EQ(wsum.coefficient(Monomial{}), -4.0);

  Eigen::MatrixXd y2 = gaussian_rows(7, Eigen::MatrixXd::Identity(2, 2), 2);
  EXPECT_EQ(build_sparse_mean_program(y2, 0.1, 1, 3.0, 2).base_equalities, 7u + 14u + 1u);

  EXPECT_THROW(build_sparse_mean_program(y, 0.6, 1, 3.0, 2), DomainError);
  EXPECT_THROW(build_sparse_mean_program(y, 0.1, 4, 3.0, 2), DomainError);
  EXPECT_THROW(build_sparse_mean_program(y, 0.1, 1, 3.0, 3), DomainError);
  EXPECT_THROW(build_sparse_mean_program(y, 0.1, 1, 3.0, 2, {.degree = 3}), DomainError);
}

TEST(SparseMeanProgram, FingerprintIsDeterministic) {
  Eigen::MatrixXd y = gaussian_rows(6, Eigen::MatrixXd::Identity(2, 2), 3);
  auto a = build_sparse_mean_program(y, 0.1, 1, 3.0, 2);
  auto b = build_sparse_mean_program(y, 0.1, 1, 3.0, 2);
  EXPECT_EQ(a.meta.fingerprint, b.meta.fingerprint);
  EXPECT_EQ(assemble_relaxation(a.cs).problem, assemble_relaxation(b.cs).problem);
  Eigen::MatrixXd y2 = y;
  y2(0, 0) += 1e-12;
  EXPECT_NE(build_sparse_mean_program(y2, 0.1, 1, 3.0, 2).meta.fingerprint, a.meta.fingerprint);
}

TEST(SparseMeanProgram, ZeroEpsPlantedResidualsVanish) {
  Eigen::MatrixXd y = gaussian_rows(10, Eigen::MatrixXd::Identity(3, 3), 4);
  auto pb = build_sparse_mean_program(y, 0.0, 1, 4.0, 2);
  auto rep = check_planted_feasibility(pb, y, std::vector<int>(10, 1), 1e-8);
  EXPECT_EQ(rep.max_residual == 0.0 || rep.max_residual < 1e-12, true) << rep.max_residual;
  EXPECT_TRUE(rep.feasible);
}

TEST(SparseMeanProgram, WeightCountAndMismatchedMask) {
  Eigen::MatrixXd x = gaussian_rows(10, Eigen::MatrixXd::Identity(2, 2), 5);
  Eigen::MatrixXd y = x;
  y.row(9) = Eigen::RowVector2d(50.0, -50.0);
  auto pb = build_sparse_mean_program(y, 0.1, 1, 4.0, 2);
  std::vector<int> w(10, 1);
  EXPECT_THROW(check_planted_feasibility(pb, x, w, 1e-8), DomainError);
  w[9] = 0;
  auto good = check_planted_feasibility(pb, x, w, 1e-8);
  EXPECT_TRUE(good.feasible);
  EXPECT_LE(good.max_residual, 1e-8);
  // Keep the corrupted row instead of an inlier.
  w[9] = 1;
  w[0] = 0;
  auto bad = check_planted_feasibility(pb, x, w, 1e-8);
  EXPECT_FALSE(bad.feasible);
  EXPECT_GT(bad.max_residual, 1.0);
  EXPECT_GE(bad.worst_equality, 10u);
  EXPECT_LT(bad.worst_equality, 10u + 20u);
}

TEST(SparseMeanProgram, FourthMomentVariantBuilds) {
  Eigen::MatrixXd y = gaussian_rows(6, Eigen::MatrixXd::Identity(2, 2), 6);
  auto pb = build_sparse_mean_program(y, 1.0 / 6.0, 1, 10.0, 4);
  EXPECT_EQ(pb.meta.nominal_degree, 8u);
  EXPECT_EQ(pb.meta.proof_degrees, std::vector<std::uint32_t>{8});
  std::vector<int> w(6, 1);
  w[5] = 0;
  auto rep = check_planted_feasibility(pb, y, w, 1e-8);
  EXPECT_TRUE(rep.feasible) << rep.max_residual;
}

TEST(GaussianProgram, PlantedInliersAreFeasible) {
  const std::size_t m = 200;
  Eigen::MatrixXd sigma = 1.5 * Eigen::MatrixXd::Identity(3, 3);
  Eigen::MatrixXd x = gaussian_rows(m, sigma, 11);
  Eigen::MatrixXd y = x;
  std::vector<int> w(m, 1);
  for (std::size_t i = 0; i < 10; ++i) {
    y.row(static_cast<Eigen::Index>(i)).setConstant(8.0);
    w[i] = 0;
  }
  auto pb = build_gaussian_program(y, 0.05, 1);
  EXPECT_EQ(pb.meta.proof_degrees, (std::vector<std::uint32_t>{8, 4}));
  auto rep = check_planted_feasibility(pb, x, w, 1e-8);
  EXPECT_TRUE(rep.feasible);
  EXPECT_LE(rep.max_residual, 1e-8);
  ASSERT_EQ(rep.items.size(), 2u);
  for (const auto& item : rep.items) {
    EXPECT_TRUE(item.found) << item.name << ": " << item.solver.message;
    EXPECT_GE(item.min_gram_eigenvalue, -1e-6);
  }
}

TEST(GaussianProgram, DegreeTwelveHitsTheSizeCap) {
  Eigen::MatrixXd y = gaussian_rows(6, Eigen::MatrixXd::Identity(2, 2), 12);
  EXPECT_THROW(build_gaussian_program(y, 0.1, 1, {.degree = 8}), DomainError);
  auto pb = build_gaussian_program(y, 1.0 / 6.0, 1, {.degree = 12});
  EXPECT_EQ(pb.meta.basis, BasisMode::Full);
  EXPECT_THROW(assemble_relaxation(pb.cs), SizeError);
}

TEST(SolvedPrograms, ZeroEpsForcesTheSampleMean) {
  Eigen::MatrixXd y = gaussian_rows(8, Eigen::MatrixXd::Identity(2, 2), 13);
  Eigen::VectorXd mean = y.colwise().mean();
  for (int which = 0; which < 2; ++which) {
    auto pb = which == 0 ? build_sparse_mean_program(y, 0.0, 1, 4.0, 2) : build_gaussian_program(y, 0.0, 1);
    auto t0 = std::chrono::steady_clock::now();
    auto res = solve_relaxation(pb.cs);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ASSERT_TRUE(res.feasible()) << res.report.message;
    for (std::size_t a = 0; a < 2; ++a) {
      EXPECT_NEAR(pseudo_expect(*res.pe, pb.mu[a]), mean[static_cast<Eigen::Index>(a)], 1e-4);
    }
    EXPECT_LT(secs, 60.0);
  }
}
