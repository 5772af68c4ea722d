#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <json.hpp>

#include "sos_sparse/data/dataset.hpp"
#include "sos_sparse/data/generate.hpp"
#include "sos_sparse/error.hpp"
#include "sos_sparse/poly/gaussian_moments.hpp"
#include "sos_sparse/poly/orthogonal.hpp"
#include "sos_sparse/sos/sdpa.hpp"

namespace sos_sparse {

// One part of a univariate mixture: a Gaussian N(mean, var), optionally
// perturbed on [-1, 1] by a polynomial density `correction` (power basis,
// relative to the part), or a point mass at `mean` when var == 0.
struct MixturePart {
  double weight = 1.0;
  double mean = 0.0;
  double var = 1.0;
  std::vector<double> correction;
  bool inlier = true;

  bool is_atom() const { return var == 0.0; }
};

inline double horner(const std::vector<double>& c, double x) {
  double out = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) out = out * x + *it;
  return out;
}

inline double normal_pdf(double x, double mean = 0.0, double var = 1.0) {
  double z = x - mean;
  return std::exp(-0.5 * z * z / var) / std::sqrt(2.0 * M_PI * var);
}

inline double normal_cdf(double x, double mean = 0.0, double var = 1.0) {
  return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * var));
}

// Raw moments of x^n over [-1, 1] against a power-basis polynomial.
inline double correction_raw_moment(const std::vector<double>& c, std::uint32_t n) {
  double total = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j) {
    std::size_t e = n + j;
    if (e % 2 == 1) continue;
    total += c[j] * 2.0 / static_cast<double>(e + 1);
  }
  return total;
}

inline double part_raw_moment(const MixturePart& p, std::uint32_t n) {
  if (p.is_atom()) return std::pow(p.mean, static_cast<int>(n));
  return shifted_gaussian_raw_moment(n, p.mean, p.var) + correction_raw_moment(p.correction, n);
}

inline double part_density(const MixturePart& p, double x) {
  if (p.is_atom()) return 0.0;
  double out = normal_pdf(x, p.mean, p.var);
  if (!p.correction.empty() && x >= -1.0 && x <= 1.0) out += horner(p.correction, x);
  return out;
}

// A distribution on the real line given as a finite mixture of parts.
struct Univariate {
  std::vector<MixturePart> parts;

  static Univariate gaussian(double mean = 0.0, double var = 1.0) {
    return Univariate{{MixturePart{1.0, mean, var, {}, true}}};
  }

  bool has_atoms() const {
    return std::any_of(parts.begin(), parts.end(), [](const auto& p) { return p.is_atom(); });
  }

  // Density of the continuous part; atoms contribute nothing.
  double density(double x) const {
    double out = 0.0;
    for (const auto& p : parts) out += p.weight * part_density(p, x);
    return out;
  }

  double raw_moment(std::uint32_t n) const {
    double out = 0.0;
    for (const auto& p : parts) out += p.weight * part_raw_moment(p, n);
    return out;
  }

  double mean() const { return raw_moment(1); }

  // Mixture restricted to inlier parts and renormalized.
  Univariate inliers() const {
    Univariate out;
    double w = 0.0;
    for (const auto& p : parts) {
      if (p.inlier) {
        out.parts.push_back(p);
        w += p.weight;
      }
    }
    if (out.parts.empty()) throw DomainError("distribution has no inlier part");
    for (auto& p : out.parts) p.weight /= w;
    return out;
  }

  double central_moment(std::uint32_t n) const {
    double mu = mean();
    double out = 0.0;
    for (std::uint32_t j = 0; j <= n; ++j) {
      out += binomial(n, j) * raw_moment(j) * std::pow(-mu, static_cast<int>(n - j));
    }
    return out;
  }
};

inline nlohmann::json univariate_json(const Univariate& u) {
  nlohmann::json parts = nlohmann::json::array();
  for (const auto& p : u.parts) {
    parts.push_back({{"weight", p.weight},
                     {"mean", p.mean},
                     {"var", p.var},
                     {"correction", p.correction},
                     {"inlier", p.inlier}});
  }
  return parts;
}

// Mixture (1-eps) Q1 + eps Q2 with Q1 = N(delta, 1) + p/(1-eps) on [-1, 1]
// and Q2 = N(delta', 1), matching the first t moments of N(0, 1).
struct CorrectedGaussianMixture {
  std::uint32_t t = 0;
  double eps = 0.0;
  double delta = 0.0;
  double delta_prime = 0.0;
  double delta_c = 1.0 / 2000.0;
  std::vector<double> legendre_coeffs;  // a_0..a_t
  std::vector<double> p;                // power basis of sum a_i P_i

  Univariate law() const {
    std::vector<double> rel = p;
    for (double& c : rel) c /= (1.0 - eps);
    return Univariate{{MixturePart{1.0 - eps, delta, 1.0, rel, true},
                       MixturePart{eps, delta_prime, 1.0, {}, false}}};
  }

  double density(double x) const { return law().density(x); }
  double raw_moment(std::uint32_t n) const { return law().raw_moment(n); }

  double q1_density(double x) const {
    double out = normal_pdf(x, delta);
    if (x >= -1.0 && x <= 1.0) out += horner(p, x) / (1.0 - eps);
    return out;
  }

  double p_value(double x) const { return horner(p, x); }
};

struct MomentMatchReport {
  std::vector<double> moment_residuals;  // raw moment i minus Gaussian, i = 1..t
  double max_abs_p = 0.0;
  double min_q1_density = 0.0;
  // Sufficient condition (100 C)^t < 0.1 with delta = C eps^{1-1/t} / t.
  double validity_bound = 0.0;
  bool delta_prime_at_least_one = false;
};

struct MomentMatchedInstance {
  CorrectedGaussianMixture mixture;
  MomentMatchReport report;
};

inline constexpr std::size_t kValidationGrid = 100000;
inline constexpr double kMomentTol = 1e-8;
inline constexpr double kMaxP = 0.1;
inline constexpr double kDensityFloor = -1e-12;

inline MomentMatchReport validate_mixture(const CorrectedGaussianMixture& mix) {
  MomentMatchReport rep;
  for (std::uint32_t i = 1; i <= mix.t; ++i) {
    rep.moment_residuals.push_back(mix.raw_moment(i) - standard_gaussian_raw_moment(i));
  }
  rep.min_q1_density = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < kValidationGrid; ++g) {
    double x = -1.0 + 2.0 * static_cast<double>(g) / static_cast<double>(kValidationGrid - 1);
    rep.max_abs_p = std::max(rep.max_abs_p, std::abs(mix.p_value(x)));
    rep.min_q1_density = std::min(rep.min_q1_density, mix.q1_density(x));
  }
  rep.validity_bound = std::pow(100.0 * mix.delta_c, static_cast<double>(mix.t));
  rep.delta_prime_at_least_one = std::abs(mix.delta_prime) >= 1.0;
  return rep;
}

inline constexpr double kDeltaConstant = 1.0 / 2000.0;

// delta = C eps^{1-1/t} / t.
inline double moment_matched_delta(std::uint32_t t, double eps, double C = kDeltaConstant) {
  return C * std::pow(eps, 1.0 - 1.0 / static_cast<double>(t)) / static_cast<double>(t);
}

// E[q(X + s)] for X ~ N(0, 1) and q in the power basis.
inline double shifted_expectation(const std::vector<double>& q, double s) {
  double out = 0.0;
  for (std::size_t n = 0; n < q.size(); ++n) {
    if (q[n] != 0.0) out += q[n] * shifted_gaussian_raw_moment(static_cast<std::uint32_t>(n), s, 1.0);
  }
  return out;
}

inline MomentMatchedInstance build_moment_matched_instance(std::uint32_t t, double eps,
                                                           double delta_c = kDeltaConstant) {
  if (t < 1) throw DomainError("moment-match order must be at least 1");
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
  CorrectedGaussianMixture mix;
  mix.t = t;
  mix.eps = eps;
  mix.delta_c = delta_c;
  mix.delta = moment_matched_delta(t, eps, delta_c);
  mix.delta_prime = -(1.0 - eps) * mix.delta / eps;
  mix.legendre_coeffs.assign(t + 1, 0.0);
  mix.p.assign(t + 1, 0.0);
  for (std::uint32_t i = 2; i <= t; ++i) {
    auto P = univariate_coefficients(legendre(i));
    double rhs = shifted_expectation(P, 0.0) - (1.0 - eps) * shifted_expectation(P, mix.delta) -
          eps * shifted_expectation(P, mix.delta_prime);
    double a = (2.0 * i + 1.0) / 2.0 * rhs;
    mix.legendre_coeffs[i] = a;
    for (std::size_t j = 0; j < P.size(); ++j) mix.p[j] += a * P[j];
  }
  MomentMatchedInstance out{mix, validate_mixture(mix)};
  const auto& rep = out.report;
  for (std::size_t i = 0; i < rep.moment_residuals.size(); ++i) {
    if (std::abs(rep.moment_residuals[i]) > kMomentTol) {
      throw ConstructionFailed("moment mismatch > 1e-8",
                               "raw moment " + std::to_string(i + 1) + " is off by " +
                                   format_double(rep.moment_residuals[i]));
    }
  }
  if (rep.max_abs_p > kMaxP) {
    throw ConstructionFailed("max|p| > 0.1", "max|p| = " + format_double(rep.max_abs_p) +
                                                 " at t = " + std::to_string(t) +
                                                 ", eps = " + format_double(eps));
  }
  if (rep.min_q1_density < kDensityFloor) {
    throw ConstructionFailed("Q1 density < 0",
                             "min density on [-1, 1] = " + format_double(rep.min_q1_density));
  }
  return out;
}

// (1-eps) N(mu, 2/3) + eps B with B a two-point law, matching three moments
// of N(0, 1), mu = sqrt(eps) / 10001.
struct ThreeMomentInstance {
  double eps = 0.0;
  double mu = 0.0;
  double var = 2.0 / 3.0;
  double x1 = 0.0, x2 = 0.0, q = 0.5;  // B = q delta_{x1} + (1-q) delta_{x2}
  std::vector<double> moment_residuals;
  std::size_t newton_iterations = 0;

  Univariate law() const {
    return Univariate{{MixturePart{1.0 - eps, mu, var, {}, true},
                       MixturePart{eps * q, x1, 0.0, {}, false},
                       MixturePart{eps * (1.0 - q), x2, 0.0, {}, false}}};
  }
  double support_radius() const { return std::max(std::abs(x1), std::abs(x2)); }
};

inline constexpr double kThreeMomentC1 = 1.0 / 10001.0;

inline ThreeMomentInstance build_three_moment_instance(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
  ThreeMomentInstance out;
  out.eps = eps;
  out.mu = kThreeMomentC1 * std::sqrt(eps);
  // Raw moments B must have.
  Eigen::Vector3d target;
  for (int n = 1; n <= 3; ++n) {
    double g = shifted_gaussian_raw_moment(static_cast<std::uint32_t>(n), out.mu, out.var);
    target[n - 1] = (standard_gaussian_raw_moment(static_cast<std::uint32_t>(n)) - (1.0 - eps) * g) / eps;
  }
  auto residual = [&](const Eigen::Vector3d& z) {
    Eigen::Vector3d r;
    for (int n = 1; n <= 3; ++n) {
      r[n - 1] = z[2] * std::pow(z[0], n) + (1.0 - z[2]) * std::pow(z[1], n) - target[n - 1];
    }
    return r;
  };
  const Eigen::Vector3d scale(1.0, std::max(1.0, std::abs(target[1])),
                              std::max(1.0, std::pow(std::abs(target[1]), 1.5)));
  auto merit = [&](const Eigen::Vector3d& z) { return residual(z).cwiseQuotient(scale).norm(); };
  Eigen::Vector3d z(1.0 / std::sqrt(eps), -1.0 / std::sqrt(eps), 0.5);
  double f = merit(z);
  std::size_t it = 0;
  for (; it < 200 && f > 1e-15; ++it) {
    Eigen::Matrix3d J;
    for (int n = 1; n <= 3; ++n) {
      J(n - 1, 0) = z[2] * n * std::pow(z[0], n - 1);
      J(n - 1, 1) = (1.0 - z[2]) * n * std::pow(z[1], n - 1);
      J(n - 1, 2) = std::pow(z[0], n) - std::pow(z[1], n);
    }
    Eigen::Vector3d step = J.colPivHouseholderQr().solve(-residual(z));
    double lambda = 1.0;
    bool moved = false;
    for (int k = 0; k < 60; ++k, lambda *= 0.5) {
      Eigen::Vector3d cand = z + lambda * step;
      if (!(cand[2] > 0.0 && cand[2] < 1.0)) continue;
      double fc = merit(cand);
      if (fc < f) {
        z = cand;
        f = fc;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  out.x1 = z[0];
  out.x2 = z[1];
  out.q = z[2];
  out.newton_iterations = it;
  Univariate law = out.law();
  for (std::uint32_t n = 1; n <= 3; ++n) {
    out.moment_residuals.push_back(law.raw_moment(n) - standard_gaussian_raw_moment(n));
  }
  double worst = 0.0;
  for (double r : out.moment_residuals) worst = std::max(worst, std::abs(r));
  if (!(worst <= kMomentTol)) {
    throw ConstructionFailed("moment mismatch > 1e-8",
                             "two-point solve stopped with residuals " +
                                 format_double(out.moment_residuals[0]) + ", " +
                                 format_double(out.moment_residuals[1]) + ", " +
                                 format_double(out.moment_residuals[2]));
  }
  return out;
}

namespace detail {

// Inverse CDF of one continuous part, tabulated on mean +- 10.
struct TabulatedQuantile {
  std::vector<double> x;
  std::vector<double> cdf;

  explicit TabulatedQuantile(const MixturePart& p, std::size_t n = 200000) {
    double lo = p.mean - 10.0, hi = p.mean + 10.0;
    if (!p.correction.empty()) {
      lo = std::min(lo, -1.0);
      hi = std::max(hi, 1.0);
    }
    x.resize(n);
    cdf.resize(n);
    double h = (hi - lo) / static_cast<double>(n - 1);
    double prev = std::max(0.0, part_density(p, lo));
    x[0] = lo;
    cdf[0] = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
      x[i] = lo + h * static_cast<double>(i);
      double cur = std::max(0.0, part_density(p, x[i]));
      cdf[i] = cdf[i - 1] + 0.5 * h * (prev + cur);
      prev = cur;
    }
    // Monotone cleanup and normalization.
    for (std::size_t i = 1; i < n; ++i) cdf[i] = std::max(cdf[i], cdf[i - 1]);
    double total = cdf.back();
    for (double& c : cdf) c /= total;
  }

  double operator()(double u) const {
    auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.begin()) return x.front();
    if (it == cdf.end()) return x.back();
    std::size_t i = static_cast<std::size_t>(it - cdf.begin());
    double c0 = cdf[i - 1], c1 = cdf[i];
    double f = c1 > c0 ? (u - c0) / (c1 - c0) : 0.0;
    return x[i - 1] + f * (x[i] - x[i - 1]);
  }
};

}  // namespace detail

inline Eigen::MatrixXd orthogonal_projector(const Eigen::VectorXd& v) {
  Eigen::VectorXd u = v / v.norm();
  return Eigen::MatrixXd::Identity(v.size(), v.size()) - u * u.transpose();
}

// Samples of P_{A,v}: a v + g_perp with a ~ A and g_perp standard Gaussian
// orthogonal to v. The mask marks samples drawn from inlier parts.
inline Dataset sample_planted(const Univariate& A, const Eigen::VectorXd& v, std::size_t n,
                              std::uint64_t seed) {
  if (std::abs(v.norm() - 1.0) > 1e-10) throw DomainError("planted direction must be a unit vector");
  if (A.parts.empty()) throw DomainError("distribution has no parts");
  std::vector<double> w;
  for (const auto& p : A.parts) w.push_back(p.weight);
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  std::vector<std::optional<detail::TabulatedQuantile>> tables(A.parts.size());
  for (std::size_t j = 0; j < A.parts.size(); ++j) {
    if (!A.parts[j].correction.empty()) tables[j].emplace(A.parts[j]);
  }
  const Eigen::Index d = v.size();
  Eigen::MatrixXd P = orthogonal_projector(v);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Dataset out;
  out.samples.resize(static_cast<Eigen::Index>(n), d);
  std::vector<bool> mask(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = pick(rng);
    const auto& part = A.parts[j];
    double a;
    if (part.is_atom()) {
      a = part.mean;
    } else if (tables[j]) {
      a = (*tables[j])(unif(rng));
    } else {
      a = part.mean + std::sqrt(part.var) * gauss(rng);
    }
    Eigen::VectorXd g = detail::standard_normal(rng, d);
    out.samples.row(static_cast<Eigen::Index>(i)) = (a * v + P * g).transpose();
    mask[i] = part.inlier;
  }
  Univariate in = A.inliers();
  GroundTruth truth;
  truth.mu = in.mean() * v;
  truth.sigma = P + in.central_moment(2) * v * v.transpose();
  truth.k = static_cast<std::uint32_t>((v.array() != 0.0).count());
  out.truth = truth;
  out.inlier_mask = std::move(mask);
  out.provenance.seed = seed;
  out.provenance.generator = "planted";
  return out;
}

struct SparseFamily {
  std::vector<Eigen::VectorXd> vectors;
  double threshold = 0.0;            // 2 k^{c-1}
  double guaranteed_size = 0.0;      // floor(d^{c k^c / 8})
  std::size_t attempts = 0;
  std::size_t rejected = 0;
  std::size_t target_size = 0;
  bool complete() const { return vectors.size() >= target_size; }
};

// Rejection sampling over random supports with +-1/sqrt(k) entries.
inline SparseFamily build_sparse_vector_family(std::size_t d, std::size_t k, double c,
                                               std::size_t target_size, std::uint64_t seed,
                                               std::size_t max_attempts = 0) {
  if (k == 0 || d == 0) throw DomainError("d and k must be positive");
  if (static_cast<double>(k) > std::sqrt(static_cast<double>(d))) {
    throw DomainError("sparse vector family needs k <= sqrt(d)");
  }
  if (!(c > 0.0 && c < 1.0)) throw DomainError("c must lie in (0, 1)");
  SparseFamily fam;
  fam.threshold = 2.0 * std::pow(static_cast<double>(k), c - 1.0);
  fam.guaranteed_size =
      std::floor(std::pow(static_cast<double>(d), c * std::pow(static_cast<double>(k), c) / 8.0));
  fam.target_size = target_size;
  if (max_attempts == 0) max_attempts = 100 * target_size + 1000;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx(d);
  const double amp = 1.0 / std::sqrt(static_cast<double>(k));
  while (fam.vectors.size() < target_size && fam.attempts < max_attempts) {
    ++fam.attempts;
    std::iota(idx.begin(), idx.end(), 0);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < k; ++j) {
      std::uniform_int_distribution<std::size_t> pick(j, d - 1);
      std::swap(idx[j], idx[pick(rng)]);
      v[static_cast<Eigen::Index>(idx[j])] = (rng() & 1u) ? amp : -amp;
    }
    bool ok = std::all_of(fam.vectors.begin(), fam.vectors.end(),
                          [&](const Eigen::VectorXd& u) { return std::abs(u.dot(v)) <= fam.threshold; });
    if (ok) {
      fam.vectors.push_back(std::move(v));
    } else {
      ++fam.rejected;
    }
  }
  return fam;
}

struct ChiSquared {
  double value = 0.0;
  double quadrature_error = 0.0;
};

// int N(x; a, s2) N(x; b, r2) / N(x; 0, 1) dx, infinite unless 1/s2 + 1/r2 > 1.
inline double gaussian_ratio_integral(double a, double s2, double b, double r2) {
  double alpha = 1.0 / s2 + 1.0 / r2 - 1.0;
  if (!(alpha > 0.0)) {
    throw DivergenceError("chi-squared integral diverges for component variances " +
                          format_double(s2) + " and " + format_double(r2));
  }
  double beta = a / s2 + b / r2;
  double expo = beta * beta / (2.0 * alpha) - a * a / (2.0 * s2) - b * b / (2.0 * r2);
  return std::exp(expo) / std::sqrt(s2 * r2 * alpha);
}

// chi^2(A, N(0, 1)) = int A^2 / phi - 1. Gaussian cross terms are closed form;
// terms with a polynomial correction are integrated over [-1, 1].
inline ChiSquared chi_squared_vs_gaussian(const Univariate& A) {
  if (A.has_atoms()) throw DivergenceError("chi-squared against N(0, 1) is infinite for a law with atoms");
  ChiSquared out;
  double total = 0.0;
  for (const auto& pi : A.parts) {
    for (const auto& pj : A.parts) total += pi.weight * pj.weight * gaussian_ratio_integral(pi.mean, pi.var, pj.mean, pj.var);
  }
  bool corrected = std::any_of(A.parts.begin(), A.parts.end(),
                               [](const auto& p) { return !p.correction.empty(); });
  if (corrected) {
    auto gauss_sum = [&](double x) {
      double s = 0.0;
      for (const auto& p : A.parts) s += p.weight * normal_pdf(x, p.mean, p.var);
      return s;
    };
    auto corr_sum = [&](double x) {
      double s = 0.0;
      for (const auto& p : A.parts) {
        if (!p.correction.empty()) s += p.weight * horner(p.correction, x);
      }
      return s;
    };
    auto f = [&](double x) {
      double c = corr_sum(x);
      return (2.0 * c * gauss_sum(x) + c * c) / normal_pdf(x);
    };
    double err = 0.0;
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, -1.0, 1.0, 15, 1e-14, &err);
    out.quadrature_error = err;
  }
  if (!std::isfinite(total)) throw DivergenceError("chi-squared integral overflowed");
  out.value = total - 1.0;
  return out;
}

struct SqBounds {
  double query_lower_bound = 0.0;        // d^{c k^c / 8} k^{-(m+1)(1-c)}
  double log10_query_lower_bound = 0.0;
  double dimension_factor = 0.0;         // d^{c k^c / 8}
  double tolerance_bound = 0.0;          // 2^{m/2+1} k^{-(m+1)(1/2-c/2)} sqrt(chi2)
  std::string note = "up to absolute constants";
};

inline SqBounds sq_bounds(double d, double k, double c, double m, double chi2) {
  if (!(d > 0 && k > 0 && c > 0 && m > 0 && chi2 > 0)) throw DomainError("sq_bounds arguments must be positive");
  if (!(c < 1.0)) throw DomainError("c must lie in (0, 1)");
  if (k > std::sqrt(d)) throw DomainError("sq_bounds needs k <= sqrt(d)");
  SqBounds b;
  double log10_dim = c * std::pow(k, c) / 8.0 * std::log10(d);
  b.log10_query_lower_bound = log10_dim - (m + 1.0) * (1.0 - c) * std::log10(k);
  b.dimension_factor = std::pow(10.0, log10_dim);
  b.query_lower_bound = std::pow(10.0, b.log10_query_lower_bound);
  b.tolerance_bound = std::pow(2.0, m / 2.0 + 1.0) * std::pow(k, -(m + 1.0) * (0.5 - c / 2.0)) * std::sqrt(chi2);
  return b;
}

enum class Hypothesis { H0, H1 };

inline const char* to_string(Hypothesis h) { return h == Hypothesis::H0 ? "H0" : "H1"; }

inline Hypothesis hypothesis_test(const Eigen::VectorXd& estimate, double rho) {
  if (!(rho > 0.0)) throw DomainError("rho must be positive");
  return estimate.norm() < rho / 2.0 ? Hypothesis::H0 : Hypothesis::H1;
}

inline Hypothesis hypothesis_test_from_estimator(
    const std::function<Eigen::VectorXd(const Dataset&)>& estimator, double rho, const Dataset& sample) {
  return hypothesis_test(estimator(sample), rho);
}

// E[<w, X - mu>^t] under the inlier planted law when <w, v> = cos_angle.
inline double planted_central_moment(const Univariate& q1, std::uint32_t t, double cos_angle) {
  double c = cos_angle;
  double s = std::sqrt(std::max(0.0, 1.0 - c * c));
  double out = 0.0;
  for (std::uint32_t j = 0; j <= t; ++j) {
    double g = standard_gaussian_raw_moment(t - j);
    if (g == 0.0) continue;
    out += binomial(t, j) * std::pow(c, static_cast<int>(j)) * std::pow(s, static_cast<int>(t - j)) *
           q1.central_moment(j) * g;
  }
  return out;
}

struct CertifiabilityReport {
  std::uint32_t t = 0;
  std::vector<double> cos_angles;  // <w, v> for each tested direction
  std::vector<double> moments;
  double max_moment = 0.0;
  double scale_bound = 0.0;  // (8 t)^{t/2}
};

// Directions are uniform on the sphere in R^d; the first two tested are v
// itself and a direction orthogonal to it.
inline CertifiabilityReport certifiability_spot_check(const CorrectedGaussianMixture& A, std::uint32_t t,
                                                      std::size_t n_directions, std::uint64_t seed,
                                                      std::size_t d = 10) {
  if (t == 0 || t % 2 == 1) throw DomainError("certifiability spot check needs an even t");
  if (d < 2) throw DomainError("spot check needs d >= 2");
  Univariate q1 = A.law().inliers();
  CertifiabilityReport rep;
  rep.t = t;
  rep.scale_bound = std::pow(8.0 * t, t / 2.0);
  rep.cos_angles = {1.0, 0.0};
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n_directions; ++i) {
    Eigen::VectorXd w = detail::standard_normal(rng, static_cast<Eigen::Index>(d));
    rep.cos_angles.push_back(w[0] / w.norm());
  }
  for (double c : rep.cos_angles) {
    double mval = planted_central_moment(q1, t, c);
    rep.moments.push_back(mval);
    rep.max_moment = std::max(rep.max_moment, mval);
  }
  return rep;
}

namespace detail {

inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace detail

inline constexpr int kInstanceSchemaVersion = 1;

inline nlohmann::json instance_json(const MomentMatchedInstance& inst) {
  const auto& m = inst.mixture;
  nlohmann::json j = {{"type", "corrected_gaussian_mixture"},
                      {"version", kInstanceSchemaVersion},
                      {"t", m.t},
                      {"eps", m.eps},
                      {"delta", m.delta},
                      {"delta_prime", m.delta_prime},
                      {"delta_c", m.delta_c},
                      {"coeffs", m.legendre_coeffs}};
  j["provenance_hash"] = detail::fnv1a_hex(j.dump());
  j["report"] = {{"moment_residuals", inst.report.moment_residuals},
                 {"max_abs_p", inst.report.max_abs_p},
                 {"min_q1_density", inst.report.min_q1_density},
                 {"validity_bound", inst.report.validity_bound},
                 {"delta_prime_at_least_one", inst.report.delta_prime_at_least_one}};
  return j;
}

inline nlohmann::json instance_json(const ThreeMomentInstance& inst) {
  nlohmann::json j = {{"type", "three_moment_mixture"},
                      {"version", kInstanceSchemaVersion},
                      {"eps", inst.eps},
                      {"mu", inst.mu},
                      {"var", inst.var},
                      {"support", {inst.x1, inst.x2}},
                      {"weights", {inst.q, 1.0 - inst.q}}};
  j["provenance_hash"] = detail::fnv1a_hex(j.dump());
  j["report"] = {{"moment_residuals", inst.moment_residuals},
                 {"newton_iterations", inst.newton_iterations}};
  return j;
}

// Rebuilds a corrected mixture from its JSON form, checking the hash.
inline CorrectedGaussianMixture corrected_mixture_from_json(const nlohmann::json& j) {
  if (j.value("type", "") != "corrected_gaussian_mixture") throw DomainError("not a corrected mixture document");
  if (j.value("version", 0) != kInstanceSchemaVersion) throw DomainError("unsupported instance schema version");
  nlohmann::json core = j;
  core.erase("provenance_hash");
  core.erase("report");
  if (detail::fnv1a_hex(core.dump()) != j.at("provenance_hash").get<std::string>()) {
    throw DomainError("instance provenance hash does not match its contents");
  }
  CorrectedGaussianMixture m;
  m.t = j.at("t").get<std::uint32_t>();
  m.eps = j.at("eps").get<double>();
  m.delta = j.at("delta").get<double>();
  m.delta_prime = j.at("delta_prime").get<double>();
  m.delta_c = j.at("delta_c").get<double>();
  m.legendre_coeffs = j.at("coeffs").get<std::vector<double>>();
  m.p.assign(m.legendre_coeffs.size(), 0.0);
  for (std::size_t i = 0; i < m.legendre_coeffs.size(); ++i) {
    if (m.legendre_coeffs[i] == 0.0) continue;
    auto P = univariate_coefficients(legendre(static_cast<std::uint32_t>(i)));
    for (std::size_t k = 0; k < P.size(); ++k) m.p[k] += m.legendre_coeffs[i] * P[k];
  }
  return m;
}

}  // namespace sos_sparse
