#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "sos_sparse/data/diagnostics.hpp"
#include "sos_sparse/data/generate.hpp"
#include "sos_sparse/data/io.hpp"

using namespace sos_sparse;

namespace {

Dataset standard(std::size_t m, Eigen::Index d, std::uint64_t seed) {
  return sample_gaussian(Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Identity(d, d), m, seed);
}

// max over k-subsets S of the spectral radius of the principal submatrix.
double brute_force_sparse_operator(const Eigen::MatrixXd& a, std::size_t k) {
  const std::size_t d = static_cast<std::size_t>(a.rows());
  double best = 0.0;
  for (unsigned mask = 0; mask < (1u << d); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
    std::vector<Eigen::Index> s;
    for (std::size_t i = 0; i < d; ++i) {
      if (mask & (1u << i)) s.push_back(static_cast<Eigen::Index>(i));
    }
    Eigen::MatrixXd sub(k, k);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) sub(i, j) = a(s[i], s[j]);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub);
    best = std::max(best, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  return best;
}

}  // namespace

TEST(SampleGaussian, MeanWithinFourStandardErrors) {
  Eigen::VectorXd mu(3);
  mu << 2.0, 0.0, -1.0;
  Eigen::MatrixXd sigma(3, 3);
  sigma << 2.0, 0.3, 0.0, 0.3, 1.0, 0.2, 0.0, 0.2, 0.5;
  const std::size_t m = 100000;
  auto data = sample_gaussian(mu, sigma, m, 42);
  Eigen::VectorXd mean = data.samples.colwise().mean();
  for (Eigen::Index a = 0; a < 3; ++a) {
    EXPECT_LE(std::abs(mean[a] - mu[a]), 4.0 * std::sqrt(sigma(a, a) / m));
  }
  EXPECT_EQ(data.truth->k, 2u);
  EXPECT_EQ(data.provenance.generator, "gaussian");
}

TEST(SampleGaussian, DegenerateDeterministicAndInvalid) {
  Eigen::VectorXd mu = Eigen::VectorXd::Constant(2, 1.5);
  auto z = sample_gaussian(mu, Eigen::MatrixXd::Zero(2, 2), 20, 1);
  for (Eigen::Index i = 0; i < 20; ++i) EXPECT_EQ(z.samples.row(i), mu.transpose());
  EXPECT_EQ(standard(50, 3, 9).samples, standard(50, 3, 9).samples);
  EXPECT_NE(standard(50, 3, 9).samples, standard(50, 3, 10).samples);
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(sample_gaussian(Eigen::VectorXd::Zero(2), bad, 5, 1), DomainError);
}

TEST(Corrupt, CountsMaskAndInlierRows) {
  auto clean = standard(100, 3, 2);
  EXPECT_EQ(corrupt(clean, 0.0, Adversary::replace_random(), 1).samples, clean.samples);
  for (double eps : {0.01, 0.1, 0.123, 0.3}) {
    auto c = corrupt(clean, eps, Adversary::replace_random(), 7);
    std::size_t bad = std::count(c.inlier_mask->begin(), c.inlier_mask->end(), false);
    EXPECT_EQ(bad, static_cast<std::size_t>(std::ceil(eps * 100 - 1e-9)));
    EXPECT_EQ(c.original_rows.size(), bad);
    for (std::size_t i = 0; i < 100; ++i) {
      if ((*c.inlier_mask)[i]) {
        EXPECT_EQ(c.samples.row(static_cast<Eigen::Index>(i)), clean.samples.row(static_cast<Eigen::Index>(i)));
      }
    }
    EXPECT_EQ(uncorrupted_samples(c), clean.samples);
  }
  EXPECT_EQ(corruption_count(0.1, 100), 10u);
  EXPECT_THROW(corrupt(clean, 0.5, Adversary::replace_random(), 1), DomainError);
}

TEST(Corrupt, ShiftAttackMovesTheMean) {
  auto clean = standard(40, 2, 3);
  const double R = 1000.0;
  auto c = corrupt(clean, 0.1, Adversary::shift(R), 5);
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(2);
  for (const auto& [r, v] : c.original_rows) expected += (R * Eigen::Vector2d(1.0, 0.0) - v) / 40.0;
  Eigen::VectorXd moved = c.samples.colwise().mean() - clean.samples.colwise().mean();
  EXPECT_LT((moved - expected).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_NEAR(moved[0], 0.1 * R, 1.0);
  auto cl = corrupt(clean, 0.1, Adversary::cluster(Eigen::Vector2d(5.0, 5.0)), 5);
  EXPECT_EQ(cl.provenance.adversary, "cluster");
}

TEST(MomentTensor, SinglePointCovarianceAndKurtosis) {
  Dataset one = Dataset::from_matrix(Eigen::MatrixXd::Constant(1, 3, 2.5));
  EXPECT_EQ(empirical_moment_tensor(one, 3, TensorCenter::Empirical).linf_norm(), 0.0);

  auto data = standard(50, 3, 4);
  Eigen::MatrixXd xc = data.samples.rowwise() - data.samples.colwise().mean();
  Eigen::MatrixXd cov = xc.transpose() * xc / 50.0;
  Eigen::MatrixXd t2 = empirical_moment_tensor(data, 2, TensorCenter::Empirical).to_matrix();
  EXPECT_LT((t2 - cov).cwiseAbs().maxCoeff(), 1e-14);

  auto big = standard(100000, 1, 5);
  double se = std::sqrt(96.0 / 100000.0);
  EXPECT_NEAR(empirical_moment_tensor(big, 4, TensorCenter::Truth).get({0, 0, 0, 0}), 3.0, 4.0 * se);
  EXPECT_THROW(empirical_moment_tensor(data, 7, TensorCenter::Empirical), SizeError);
  EXPECT_THROW(empirical_moment_tensor(one, 2, TensorCenter::Truth), MissingTruthError);
}

TEST(TensorDistance, ConcentrationAndErrors) {
  int below = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) below += linf_tensor_distance(standard(100000, 3, seed), 2) < 0.05;
  EXPECT_EQ(below, 10);
  EXPECT_LT(linf_tensor_distance(standard(20000, 2, 1), 3), 0.2);
  Dataset bare = Dataset::from_matrix(Eigen::MatrixXd::Zero(3, 2));
  EXPECT_THROW(linf_tensor_distance(bare, 2), MissingTruthError);
  auto other = standard(10, 2, 1);
  other.provenance.generator = "planted";
  EXPECT_THROW(linf_tensor_distance(other, 2), DomainError);
}

TEST(TensorDistance, SlopeFit) {
  EXPECT_NEAR(loglog_slope({1, 10, 100}, {1, 0.1, 0.01}), -1.0, 1e-12);
  EXPECT_THROW(loglog_slope({1}, {1}), DomainError);
}

TEST(SparseCertificate, DominatesBruteForce) {
  EXPECT_DOUBLE_EQ(sparse_moment_certificate(SymmetricTensor::from_matrix(Eigen::MatrixXd::Identity(4, 4)), 3), 3.0);
  EXPECT_EQ(sparse_moment_certificate(SymmetricTensor(2, 4), 2), 0.0);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  for (int rep = 0; rep < 200; ++rep) {
    Eigen::Index d = 2 + static_cast<Eigen::Index>(rng() % 7);
    std::size_t k = 1 + rng() % std::min<std::size_t>(3, d);
    Eigen::MatrixXd a(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) a(i, j) = g(rng);
    }
    a = 0.5 * (a + a.transpose()).eval();
    double cert = sparse_moment_certificate(SymmetricTensor::from_matrix(a), static_cast<std::uint32_t>(k));
    EXPECT_GE(cert + 1e-12, brute_force_sparse_operator(a, k));
  }
}

TEST(GaussianTensorDistance, IdentityScalingAndPerturbationBound) {
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_EQ(gaussian_tensor_distance(I, I, 4), 0.0);
  EXPECT_NEAR(gaussian_tensor_distance(I, 1.25 * I, 2), 0.25, 1e-15);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (std::uint32_t t : {2u, 4u, 6u}) {
    for (int rep = 0; rep < 20; ++rep) {
      Eigen::MatrixXd b(3, 3);
      for (int i = 0; i < 9; ++i) b(i / 3, i % 3) = g(rng);
      Eigen::MatrixXd sa = I + 0.2 * b * b.transpose();
      Eigen::MatrixXd e(3, 3);
      for (int i = 0; i < 9; ++i) e(i / 3, i % 3) = 0.01 * g(rng);
      Eigen::MatrixXd sb = sa + e * e.transpose();
      double delta = (sa - sb).cwiseAbs().maxCoeff();
      double scale = std::max(sa.cwiseAbs().maxCoeff(), sb.cwiseAbs().maxCoeff());
      double pairings = 1.0;
      for (int j = static_cast<int>(t) - 1; j >= 1; j -= 2) pairings *= j;
      double bound = pairings * std::pow(scale, t / 2.0 - 1.0) * std::pow(2.0, t / 2.0) * delta;
      EXPECT_LE(gaussian_tensor_distance(sa, sb, t), bound);
    }
  }
}

TEST(Resilience, SyntheticExactCovarianceGivesZeroForItemFour) {
  auto data = standard(300, 4, 6);
  Eigen::MatrixXd xc = data.samples.rowwise() - data.samples.colwise().mean();
  data.truth->sigma = xc.transpose() * xc / 300.0;
  ResilienceOptions o;
  o.items = {4};
  auto rep = resilience_check(data, ResilienceWeights::ones(300), 2, o);
  EXPECT_LT(rep.items[0].ratio, 1e-12);
  EXPECT_EQ(rep.supports, 6u);
}

TEST(Resilience, ItemSixIsTheFourthMomentDeviation) {
  auto data = standard(400, 1, 7);
  ResilienceOptions o;
  o.items = {6};
  o.quartic_directions = 5;
  auto rep = resilience_check(data, ResilienceWeights::ones(400), 1, o);
  Eigen::VectorXd p = data.samples.col(0).array() - data.samples.col(0).mean();
  double m2 = p.array().square().mean();
  double m4 = p.array().pow(4).mean();
  EXPECT_NEAR(rep.items[0].ratio, 0.5 * std::abs(m4 / (m2 * m2) - 3.0), 1e-10);
}

TEST(Resilience, ItemSixMatchesPairLoopForGeneralWeights) {
  const std::size_t m = 60;
  auto data = standard(m, 1, 12);
  auto w = ResilienceWeights::ones(m);
  for (std::size_t i = 0; i < 3; ++i) {
    w.a_prime[static_cast<Eigen::Index>(i)] = 0.0;
    w.a.row(static_cast<Eigen::Index>(i)).setZero();
    w.a.col(static_cast<Eigen::Index>(i)).setZero();
  }
  ResilienceOptions o;
  o.eps = 0.1;
  o.items = {6};
  o.quartic_directions = 3;
  auto rep = resilience_check(data, w, 1, o);
  Eigen::VectorXd p = data.samples.col(0).array() - data.samples.col(0).mean();
  double q = p.squaredNorm() / m;
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double diff = p[static_cast<Eigen::Index>(i)] - p[static_cast<Eigen::Index>(j)];
      double dev = 0.5 * diff * diff - q;
      total += w.a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * (dev * dev - 2.0 * q * q);
    }
  }
  EXPECT_NEAR(rep.items[0].ratio, std::abs(total / (m * m)) / (q * q), 1e-10);
}

TEST(Resilience, CleanScalesAndAdmissibility) {
  const std::size_t m = 2000;
  auto data = standard(m, 5, 9);
  auto rep = resilience_check(data, ResilienceWeights::ones(m), 2);
  ASSERT_EQ(rep.items.size(), 6u);
  double scale = std::sqrt(std::log(5.0 * 5.0) / m);
  EXPECT_LT(rep.items[0].ratio, 5.0 * scale);
  // With unit weights items 2, 3 and 5 vanish identically.
  EXPECT_LT(rep.items[1].ratio, 1e-10);
  EXPECT_LT(rep.items[2].ratio, 1e-10);
  EXPECT_LT(rep.items[4].ratio, 1e-10);

  auto w = ResilienceWeights::ones(m);
  w.a(0, 1) = 0.5;
  EXPECT_THROW(
      {
        try {
          resilience_check(data, w, 2);
        } catch (const DomainError& e) {
          EXPECT_NE(std::string(e.what()).find("(i)"), std::string::npos);
          throw;
        }
      },
      DomainError);
  auto w2 = ResilienceWeights::ones(m);
  w2.a_prime[3] = 0.5;
  EXPECT_THROW(resilience_check(data, w2, 2), DomainError);
  Dataset bare = Dataset::from_matrix(data.samples);
  EXPECT_THROW(resilience_check(bare, ResilienceWeights::ones(m), 2), MissingTruthError);
  ResilienceOptions no_truth;
  no_truth.items = {2, 3, 5, 6};
  no_truth.quartic_directions = 2;
  EXPECT_NO_THROW(resilience_check(bare, ResilienceWeights::ones(m), 1, no_truth));
}

TEST(DatasetIo, RoundTripIsBitExact) {
  auto data = corrupt(standard(7, 3, 11), 0.2, Adversary::shift(1e6), 2);
  data.samples(0, 0) = 0.1;
  data.samples(1, 1) = 1.0 / 3.0;
  data.samples(2, 2) = 1e-300;
  data.samples(3, 0) = -123456789.125;
  auto dir = std::filesystem::temp_directory_path() / "sos_sparse_io_test";
  std::filesystem::create_directories(dir);
  std::string path = (dir / "data.csv").string();
  write_dataset(data, path);
  Dataset back = read_dataset(path);
  EXPECT_EQ(back.samples, data.samples);
  EXPECT_EQ(*back.inlier_mask, *data.inlier_mask);
  EXPECT_EQ(back.truth->mu, data.truth->mu);
  EXPECT_EQ(back.truth->sigma, data.truth->sigma);
  EXPECT_EQ(back.provenance.adversary, "shift_attack");
  EXPECT_EQ(back.original_rows.size(), data.original_rows.size());
  EXPECT_EQ(dataset_csv(back), dataset_csv(data));

  std::ofstream(dir / "bad.csv") << "1,2\n3,x\n";
  EXPECT_THROW(read_dataset((dir / "bad.csv").string()), IoError);
  EXPECT_THROW(read_dataset((dir / "missing.csv").string()), IoError);
  std::filesystem::remove_all(dir);
}
