// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "sos_sparse/sos_sparse.hpp"

using namespace sos_sparse;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double linf(const Eigen::VectorXd& x) { return x.cwiseAbs().maxCoeff(); }

// Random covariance with spectrum in [lo, hi].
Eigen::MatrixXd random_covariance(Eigen::Index d, double lo, double hi, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd a(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = g(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd ev(d);
  for (Eigen::Index i = 0; i < d; ++i) ev[i] = u(rng);
  Eigen::MatrixXd s = q * ev.asDiagonal() * q.transpose();
  return 0.5 * (s + s.transpose());
}

// Mean of the (n - drop)-subset whose largest coordinate-wise t-th central
// moment is smallest.
Eigen::VectorXd subset_oracle(const Eigen::MatrixXd& y, std::size_t drop, int t) {
  const auto n = static_cast<unsigned>(y.rows());
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd out;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != n - drop) continue;
    std::vector<Eigen::Index> rows;
    for (unsigned i = 0; i < n; ++i) {
      if (mask & (1u << i)) rows.push_back(i);
    }
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()), y.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) sub.row(static_cast<Eigen::Index>(r)) = y.row(rows[r]);
    Eigen::VectorXd mean = sub.colwise().mean();
    double score = 0.0;
    for (Eigen::Index a = 0; a < y.cols(); ++a) {
      score = std::max(score, (sub.col(a).array() - mean[a]).pow(t).mean());
    }
    if (score < best) {
      best = score;
      out = mean;
    }
  }
  return out;
}

double brute_sparse_operator(const Eigen::MatrixXd& a, std::size_t k) {
  const auto d = static_cast<unsigned>(a.rows());
  double best = 0.0;
  for (unsigned mask = 0; mask < (1u << d); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
    std::vector<Eigen::Index> s;
    for (unsigned i = 0; i < d; ++i) {
      if (mask & (1u << i)) s.push_back(i);
    }
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(s.size()), static_cast<Eigen::Index>(s.size()));
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (std::size_t j = 0; j < s.size(); ++j) sub(i, j) = a(s[i], s[j]);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub, Eigen::EigenvaluesOnly);
    best = std::max(best, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  return best;
}

// 1. Planted inliers satisfy both programs.
Verdict feasibility() {
  double worst = 0.0;
  int passed = 0;
  std::string first_failure;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    Eigen::MatrixXd sigma = random_covariance(3, 1.0, 2.0, rng);
    Dataset clean = sample_gaussian(Eigen::VectorXd::Zero(3), sigma, 200, seed, 1);
    Dataset data = corrupt(clean, 0.05, Adversary::replace_random(), seed);
    std::vector<int> w(200);
    for (std::size_t i = 0; i < 200; ++i) w[i] = (*data.inlier_mask)[i] ? 1 : 0;
    bool ok = true;
    for (int which = 0; which < 2; ++which) {
      auto pb = which == 0 ? build_sparse_mean_program(data.samples, 0.05, 1, 4.0, 2)
                           : build_gaussian_program(data.samples, 0.05, 1);
      auto rep = check_planted_feasibility(pb, clean.samples, w, 1e-8);
      worst = std::max(worst, rep.max_residual);
      if (!(rep.feasible && rep.max_residual <= 1e-8)) {
        ok = false;
        if (first_failure.empty()) {
          first_failure = "; first failure seed " + std::to_string(seed) + (which ? " gaussian" : " sparse-mean");
        }
      }
    }
    passed += ok;
  }
  return {passed == 20, std::to_string(passed) + "/20 seeds, max residual " + fmt(worst) + first_failure};
}

// 2. eps = 0 solves return the sample mean.
Verdict zero_eps() {
  double worst = 0.0;
  int iters = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Dataset data = sample_gaussian(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2), 8, 40 + seed, 1);
    Eigen::VectorXd mean = data.samples.colwise().mean();
    auto a = sos_sparse_mean(data, 0.0, 1, 4.0, 2);
    auto b = gaussian_sparse_mean(data, 0.0, 1);
    worst = std::max({worst, linf(a.estimate - mean), linf(b.estimate - mean)});
    iters = std::max({iters, a.diagnostics.solver.iterations, b.diagnostics.solver.iterations});
  }
  return {worst <= 1e-4, "max coordinate deviation " + fmt(worst) + " over 3 instances, solver iterations up to " +
                             std::to_string(iters)};
}

// 3. Error is flat in the attack magnitude and tracks the subset oracle.
Verdict attack_magnitude() {
  double worst_spread = 0.0, worst_excess = -1e300, min_naive = 1e300;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Dataset clean = sample_gaussian(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2), 8, 60 + seed, 1);
    std::vector<double> errs;
    for (double R : {1e2, 1e4, 1e6}) {
      Dataset data = corrupt(clean, 1.0 / 8.0, Adversary::shift(R), seed);
      Eigen::VectorXd mu = data.truth->mu;
      double oracle = norm_2k(subset_oracle(data.samples, 1, 2) - mu, 1);
      auto res = sos_sparse_mean(data, 1.0 / 8.0, 1, 4.0, 2);
      double err = norm_2k(res.estimate - mu, 1);
      errs.push_back(err);
      worst_excess = std::max(worst_excess, err - oracle);
      if (R == 1e4) {
        Eigen::VectorXd naive = data.samples.colwise().mean();
        min_naive = std::min(min_naive, norm_2k(naive - mu, 1));
      }
    }
    worst_spread = std::max(worst_spread, *std::max_element(errs.begin(), errs.end()) -
                                              *std::min_element(errs.begin(), errs.end()));
  }
  bool ok = worst_spread < 0.05 && worst_excess <= 0.05 && min_naive > 10.0;
  return {ok, "max spread over R " + fmt(worst_spread) + ", max excess over oracle " + fmt(worst_excess) +
                  ", min sample-mean error at R=1e4 " + fmt(min_naive)};
}

// 4. Lepskii on a synthetic black box with known scale.
Verdict lepskii() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> g;
  const double A = 1e-3, B = 1e3;
  const std::size_t max_calls = static_cast<std::size_t>(std::ceil(std::log2(B / A))) + 1;
  auto r = [](double s) { return 0.1 * s; };
  int good = 0;
  double worst_ratio = 0.0;
  std::size_t most_calls = 0;
  for (int trial = 0; trial < 100; ++trial) {
    double sigma = A * std::pow(B / A, unif(rng));
    Eigen::Vector3d mu(g(rng), g(rng), g(rng));
    auto box = [&](double s, double) -> Eigen::VectorXd {
      Eigen::Vector3d u(g(rng), g(rng), g(rng));
      // Within r(s) of mu when s >= sigma, arbitrary otherwise.
      if (s >= sigma) return mu + r(s) * unif(rng) * u.normalized();
      return mu + 1e4 * u;
    };
    auto res = lepskii_search(box, A, B, 0.1, r);
    double ratio = (res.estimate - mu).norm() / (3.0 * r(2.0 * sigma));
    worst_ratio = std::max(worst_ratio, ratio);
    most_calls = std::max(most_calls, res.calls);
    good += ratio <= 1.0 && res.calls <= max_calls;
  }
  return {good == 100, std::to_string(good) + "/100 trials, max err/(3 r(2 sigma)) " + fmt(worst_ratio) +
                           ", max calls " + std::to_string(most_calls) + " <= " + std::to_string(max_calls)};
}

// 5. Moment-matched mixture at t = 4.
Verdict moment_matching() {
  auto inst = build_moment_matched_instance(4, 1e-4);
  Univariate law = inst.mixture.law();
  const double target[] = {0.0, 1.0, 0.0, 3.0};
  double worst = 0.0;
  for (int i = 1; i <= 4; ++i) {
    auto f = [&](double x) { return std::pow(x, i) * law.density(x); };
    double total = 0.0;
    for (auto [a, b] : {std::pair{-40.0, -1.0}, std::pair{-1.0, 1.0}, std::pair{1.0, 40.0}}) {
      total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, 1e-13);
    }
    worst = std::max(worst, std::abs(total - target[i - 1]));
  }
  double min_q1 = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 100000; ++i) min_q1 = std::min(min_q1, inst.mixture.q1_density(-1.0 + 2.0 * i / 100000.0));
  const auto& a = inst.mixture.legendre_coeffs;
  bool ok = worst <= 1e-8 && inst.report.max_abs_p <= 0.1 && a[0] == 0.0 && a[1] == 0.0 && min_q1 >= -1e-12;
  return {ok, "max moment deviation " + fmt(worst) + ", max|p| " + fmt(inst.report.max_abs_p) + ", a0 " + fmt(a[0]) +
                  ", a1 " + fmt(a[1]) + ", min Q1 density on grid " + fmt(min_q1)};
}

// 6. Nearly orthogonal sparse family.
Verdict sparse_family() {
  auto fam = build_sparse_vector_family(100, 10, 0.5, 200, 6);
  double worst = 0.0;
  for (std::size_t i = 0; i < fam.vectors.size(); ++i) {
    for (std::size_t j = i + 1; j < fam.vectors.size(); ++j) {
      worst = std::max(worst, std::abs(fam.vectors[i].dot(fam.vectors[j])));
    }
  }
  bool ok = fam.vectors.size() >= 50 && worst <= 0.6325;
  return {ok, std::to_string(fam.vectors.size()) + " vectors, max |<v, v'>| " + fmt(worst)};
}

// 7. k^t coefficient bound and the sparse certificate.
Verdict coefficient_bound() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  double worst = -1e300;
  for (int rep = 0; rep < 1000; ++rep) {
    std::uint32_t t = 1 + rep % 3;
    std::uint32_t d = 2 + static_cast<std::uint32_t>(rng() % 6);
    std::uint32_t k = 1 + static_cast<std::uint32_t>(rng() % std::min<std::uint32_t>(d, 4));
    std::vector<std::uint32_t> idx(d);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
    for (std::uint32_t j = 0; j < k; ++j) v[idx[j]] = g(rng);
    v.normalize();
    double amax = 0.0, p = 0.0;
    for_each_ordered_tuple(d, t, [&](const IndexTuple& T) {
      double a = g(rng);
      amax = std::max(amax, a * a);
      double prod = a;
      for (auto i : T) prod *= v[i];
      p += prod;
    });
    worst = std::max(worst, p * p - std::pow(k, t) * amax);
  }
  double worst_gap = 1e300;
  for (int rep = 0; rep < 300; ++rep) {
    Eigen::Index d = 2 + static_cast<Eigen::Index>(rng() % 7);
    std::size_t k = 1 + rng() % std::min<std::size_t>(3, d);
    Eigen::MatrixXd a(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) a(i, j) = g(rng);
    }
    a = 0.5 * (a + a.transpose()).eval();
    double cert = sparse_moment_certificate(SymmetricTensor::from_matrix(a), static_cast<std::uint32_t>(k));
    worst_gap = std::min(worst_gap, cert - brute_sparse_operator(a, k));
  }
  bool ok = worst <= 1e-9 && worst_gap >= -1e-12;
  return {ok, "max violation over 1000 trials " + fmt(worst) + ", min certificate minus brute force " +
                  fmt(worst_gap)};
}

// 8. Tensor concentration rate.
Verdict concentration_slope() {
  std::vector<double> slopes;
  std::vector<double> ms = {1e2, 1e3, 1e4};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::vector<double> dist;
    for (double m : ms) {
      Dataset data = sample_gaussian(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3),
                                     static_cast<std::size_t>(m), 500 + seed, 1);
      dist.push_back(linf_tensor_distance(data, 2));
    }
    slopes.push_back(loglog_slope(ms, dist));
  }
  double med = median(slopes);
  return {med >= -0.7 && med <= -0.3, "median slope " + fmt(med) + " over 20 seeds"};
}

// 9. Isserlis tensor against Monte Carlo.
Verdict isserlis() {
  std::mt19937_64 rng(9);
  Eigen::MatrixXd sigma = random_covariance(3, 0.5, 2.0, rng);
  auto T = gaussian_moment_tensor(SymmetricTensor::from_matrix(sigma), 4);
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  Eigen::MatrixXd L = llt.matrixL();
  std::vector<IndexTuple> tuples;
  for_each_sorted_tuple(3, 4, [&](const IndexTuple& t) { tuples.push_back(t); });
  std::vector<double> sum(tuples.size(), 0.0), sumsq(tuples.size(), 0.0);
  std::normal_distribution<double> g;
  const int n = 1000000;
  for (int s = 0; s < n; ++s) {
    Eigen::Vector3d x = L * Eigen::Vector3d(g(rng), g(rng), g(rng));
    for (std::size_t e = 0; e < tuples.size(); ++e) {
      double v = 1.0;
      for (auto i : tuples[e]) v *= x[i];
      sum[e] += v;
      sumsq[e] += v * v;
    }
  }
  double worst = 0.0;
  for (std::size_t e = 0; e < tuples.size(); ++e) {
    double mean = sum[e] / n;
    double se = std::sqrt((sumsq[e] / n - mean * mean) / n);
    worst = std::max(worst, std::abs(mean - T.get(tuples[e])) / se);
  }
  return {worst <= 4.0, std::to_string(tuples.size()) + " entries, max deviation " + fmt(worst) + " standard errors"};
}

// 10. Certificate verifier and SDPA round trip.
Verdict verifier() {
  std::vector<std::string> notes;
  ConstraintSystem axioms;
  axioms.add_group("x", 1);
  Polynomial x = Polynomial::var(0);
  SosCertificate square;
  square.squares.push_back(gram_from_squares({x - 1.0}, {1.0}));
  bool square_ok = verify_sos_certificate(square, x * x - 2.0 * x + 1.0, axioms, 1e-9).accepted();

  auto built = build_sparse_bound_certificate(2, 1, 1, {{{0}, 0.8}, {{1}, -1.7}});
  bool chain_ok = verify_sos_certificate(built.certificate, built.target, built.axioms, 1e-9).accepted();

  auto perturbed = built.certificate;
  perturbed.multipliers.back() += 1e-3;
  auto bad = verify_sos_certificate(perturbed, built.target, built.axioms, 1e-9);
  bool reject_ok = bad.verdict == CertificateVerdict::CoefficientMismatch;

  auto cs = build_k_sparse_axioms(2, 1);
  cs.relaxation_degree = 4;
  cs.inequalities.push_back(Polynomial(1.0) - Polynomial(Monomial::var(0, 2)));
  auto rel = assemble_relaxation(cs);
  std::string text = export_sdpa(rel.problem);
  SdpProblem parsed = parse_sdpa(text);
  bool sdpa_ok = parsed == rel.problem && export_sdpa(parsed) == text;

  bool ok = square_ok && chain_ok && reject_ok && sdpa_ok;
  std::ostringstream os;
  os << "square " << (square_ok ? "accepted" : "REJECTED") << ", chain " << (chain_ok ? "accepted" : "REJECTED")
     << ", perturbed " << to_string(bad.verdict) << ", SDPA round trip " << (sdpa_ok ? "exact" : "DIFFERS");
  return {ok, os.str()};
}

// 11. Error tracks the scale of the covariance.
Verdict scale_adaptivity() {
  std::vector<double> small, unit;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (double s : {0.01, 1.0}) {
      Dataset data = sample_gaussian(Eigen::VectorXd::Zero(2), s * Eigen::MatrixXd::Identity(2, 2), 6, 700 + seed, 1);
      Eigen::VectorXd mean = data.samples.topRows(5).colwise().mean();
      data.samples.row(5) = (mean + Eigen::Vector2d(5.0 * std::sqrt(s), 0.0)).transpose();
      auto res = robust_sparse_gaussian_mean(data, 1.0 / 6.0, 1, 0.1, seed);
      (s < 1.0 ? small : unit).push_back(norm_2k(res.estimate - data.truth->mu, 1));
    }
  }
  double a = median(small), b = median(unit);
  return {a < b, "median error " + fmt(a) + " at 0.01 I vs " + fmt(b) + " at I"};
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Verdict()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "planted feasibility", 120, feasibility},
      {2, "eps = 0 solves", 60, zero_eps},
      {3, "attack magnitude", 600, attack_magnitude},
      {4, "Lepskii search", 10, lepskii},
      {5, "moment matching", 5, moment_matching},
      {6, "sparse family", 30, sparse_family},
      {7, "coefficient bound", 60, coefficient_bound},
      {8, "concentration slope", 120, concentration_slope},
      {9, "Isserlis tensor", 60, isserlis},
      {10, "certificate verifier", 10, verifier},
      {11, "scale adaptivity", 900, scale_adaptivity},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool in_time = secs < c.limit_seconds;
    bool pass = v.pass && in_time;
    failed += !pass;
    std::printf("%s %2d %-22s %s (%.1f s, limit %.0f s)%s\n", pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(),
                secs, c.limit_seconds, in_time ? "" : " over time");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
