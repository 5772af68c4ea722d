#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sos_sparse/data/dataset.hpp"
#include "sos_sparse/error.hpp"
#include "sos_sparse/programs/programs.hpp"
#include "sos_sparse/sos/pseudo_expectation.hpp"
#include "sos_sparse/sos/sdpa.hpp"

namespace sos_sparse {

// Solver ended without a feasible pseudoexpectation.
class SolveFailure : public Error {
 public:
  explicit SolveFailure(SolverReport report)
      : Error(std::string("relaxation solve ") + to_string(report.status) + ": " + report.message),
        report_(std::move(report)) {}
  const SolverReport& report() const { return report_; }

 private:
  SolverReport report_;
};

// Size cap hit while assembling; the polynomial program was written to
// export_path so it can be handed to an external solver.
class ProgramTooLarge : public SizeError {
 public:
  ProgramTooLarge(const SizeError& e, std::string path)
      : SizeError(e.reason() + "; program exported to " + path, e.count(), e.cap()),
        export_path_(std::move(path)) {}
  const std::string& export_path() const { return export_path_; }

 private:
  std::string export_path_;
};

struct EstimatorConfig {
  SolverConfig solver;
  RelaxationLimits limits;
  ProgramOptions program;
  bool prefilter = true;
  double prefilter_c = 10.0;
  // Rate r(s) = rate_c * eps * log(1/eps) * s used by the adaptive search.
  double rate_c = 5.0;
  double rough_c1 = 0.05;
  double rough_c2 = 10.0;
  double lepskii_c_prime = 1.0;
  double gamma = 0.1;
  int net_iterations = 500;
  // Where oversized programs are exported; empty means the system temp dir.
  std::string export_dir;
};

struct EstimateDiagnostics {
  std::string method;
  SolverReport solver;
  std::uint32_t relaxation_degree = 0;
  std::uint32_t nominal_degree = 0;
  // Set when the Gaussian program ran below the degree 12 of the analysis.
  bool degree_deviation = false;
  std::size_t prefilter_removed = 0;
  double prefilter_radius = std::numeric_limits<double>::infinity();
  // Corruption budget used by the program after the prefilter.
  double eps_used = 0.0;
  bool budget_fallback = false;
  double wall_seconds = 0.0;
  std::size_t black_box_calls = 0;
  bool flagged = false;
  std::string note;
  std::map<std::string, double> constants;
};

struct TruthErrors {
  double norm_2k = 0.0;
  double truncated_l2 = 0.0;
};

struct EstimateResult {
  Eigen::VectorXd estimate;
  Eigen::VectorXd truncated_estimate;
  EstimateDiagnostics diagnostics;
  std::optional<TruthErrors> errors_vs_truth;
};

inline void check_k(std::uint32_t k, Eigen::Index d) {
  if (k < 1 || static_cast<Eigen::Index>(k) > d) throw DomainError("need 1 <= k <= d");
}

// Keeps the k largest-magnitude coordinates; ties go to the lower index.
inline Eigen::VectorXd truncate_top_k(const Eigen::VectorXd& x, std::uint32_t k) {
  check_k(k, x.size());
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(x.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(x[a]) > std::abs(x[b]); });
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size());
  for (std::uint32_t j = 0; j < k; ++j) out[idx[j]] = x[idx[j]];
  return out;
}

inline double norm_2k(const Eigen::VectorXd& x, std::uint32_t k) {
  return truncate_top_k(x, k).norm();
}

inline TruthErrors truth_errors(const Eigen::VectorXd& estimate, const Eigen::VectorXd& mu, std::uint32_t k) {
  return {norm_2k(estimate - mu, k), (truncate_top_k(estimate, k) - mu).norm()};
}

namespace detail {

inline Eigen::VectorXd coordinate_median(const Eigen::MatrixXd& x) {
  Eigen::VectorXd out(x.cols());
  std::vector<double> col(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index a = 0; a < x.cols(); ++a) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) col[static_cast<std::size_t>(i)] = x(i, a);
    std::sort(col.begin(), col.end());
    std::size_t n = col.size();
    out[a] = n % 2 == 1 ? col[n / 2] : 0.5 * (col[n / 2 - 1] + col[n / 2]);
  }
  return out;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline EstimateResult finish_result(Eigen::VectorXd estimate, std::uint32_t k, EstimateDiagnostics diag,
                                    const Dataset& data) {
  EstimateResult out;
  out.truncated_estimate = truncate_top_k(estimate, k);
  out.estimate = std::move(estimate);
  out.diagnostics = std::move(diag);
  if (data.truth) out.errors_vs_truth = truth_errors(out.estimate, data.truth->mu, k);
  return out;
}

inline std::string export_program(const ProgramBundle& pb, const std::string& dir) {
  std::filesystem::path base = dir.empty() ? std::filesystem::temp_directory_path() : std::filesystem::path(dir);
  std::filesystem::create_directories(base);
  std::ostringstream name;
  name << "sos_sparse_" << pb.meta.kind << "_" << std::hex << pb.meta.fingerprint << ".poly";
  std::filesystem::path path = base / name.str();
  std::ofstream os(path);
  os << "# polynomial program: kind " << pb.meta.kind << ", relaxation degree " << pb.cs.relaxation_degree << "\n";
  for (const auto& g : pb.cs.groups()) {
    const char* kind = g.kind == VarKind::Moment ? "moment" : g.kind == VarKind::Free ? "free" : "gram";
    os << "group " << g.name << " " << kind << " first x" << g.first << " count " << g.count << "\n";
  }
  if (pb.cs.ball) os << "ball " << format_double(pb.cs.ball->radius) << "\n";
  for (const auto& p : pb.cs.equalities) os << "eq " << p.to_string() << "\n";
  for (const auto& p : pb.cs.inequalities) os << "ge " << p.to_string() << "\n";
  if (!os) throw Error("failed to export program to " + path.string());
  return path.string();
}

// Solves the program and reads off the pseudo-expected mean.
inline std::pair<Eigen::VectorXd, SolverReport> solve_mean(const ProgramBundle& pb, const EstimatorConfig& cfg) {
  Relaxation rel;
  try {
    rel = assemble_relaxation(pb.cs, cfg.limits);
  } catch (const SizeError& e) {
    throw ProgramTooLarge(e, export_program(pb, cfg.export_dir));
  }
  SdpSolution sol = solve_sdp(rel.problem, cfg.solver);
  if (sol.report.status != SolveStatus::Feasible) throw SolveFailure(sol.report);
  PseudoExpectation pe = extract_pseudo_expectation(rel, sol);
  Eigen::VectorXd mean(static_cast<Eigen::Index>(pb.mu.size()));
  for (std::size_t a = 0; a < pb.mu.size(); ++a) mean[static_cast<Eigen::Index>(a)] = pe(pb.mu[a]);
  return {mean, sol.report};
}

}  // namespace detail

struct PrefilterResult {
  Dataset filtered;
  double radius = 0.0;
  Eigen::VectorXd center;
  std::size_t removed = 0;
  std::vector<std::size_t> kept;
};

// Drops every sample farther than R = C M^(1/t) sqrt(d/eps) from the
// coordinate-wise median. eps = 0 keeps everything.
inline PrefilterResult naive_prefilter(const Dataset& data, double eps, double M, std::uint32_t t, double C = 10.0) {
  if (data.m() == 0) throw DegenerateInputError("empty dataset");
  if (!(M > 0.0) || t == 0) throw DomainError("prefilter needs M > 0 and t >= 1");
  PrefilterResult out;
  out.center = detail::coordinate_median(data.samples);
  out.radius = eps > 0.0 ? C * std::pow(M, 1.0 / t) * std::sqrt(static_cast<double>(data.d()) / eps)
                         : std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < data.m(); ++i) {
    double dist = (data.samples.row(static_cast<Eigen::Index>(i)).transpose() - out.center).norm();
    if (dist <= out.radius) out.kept.push_back(i);
  }
  out.removed = data.m() - out.kept.size();
  if (out.kept.empty()) throw DegenerateInputError("prefilter removed every sample");
  out.filtered = data.subset(out.kept);
  return out;
}

// Sparse mean under certifiably bounded t-th moments. The data are
// prefiltered, centered at the prefilter center and handed to the program
// with the prefilter radius as ball bound. Removed points are charged to the
// adversary's budget first; if that leaves the program infeasible the full
// budget eps m is kept on the remaining points.
inline EstimateResult sos_sparse_mean(const Dataset& data, double eps, std::uint32_t k, double M, std::uint32_t t,
                                      const EstimatorConfig& cfg = {}) {
  auto t0 = std::chrono::steady_clock::now();
  check_k(k, static_cast<Eigen::Index>(data.d()));
  if (!(eps >= 0.0 && eps < 0.5)) throw DomainError("eps must lie in [0, 1/2)");
  EstimateDiagnostics diag;
  diag.method = "sos_sparse_mean";
  diag.constants = {{"prefilter_c", cfg.prefilter_c}, {"M", M}, {"t", t}};

  PrefilterResult pf;
  if (cfg.prefilter) {
    pf = naive_prefilter(data, eps, M, t, cfg.prefilter_c);
  } else {
    pf.filtered = data;
    pf.center = detail::coordinate_median(data.samples);
    pf.radius = std::numeric_limits<double>::infinity();
  }
  diag.prefilter_removed = pf.removed;
  diag.prefilter_radius = pf.radius;
  const double m = static_cast<double>(data.m());
  const double m_kept = static_cast<double>(pf.filtered.m());
  Eigen::MatrixXd y = pf.filtered.samples.rowwise() - pf.center.transpose();

  ProgramOptions opts = cfg.program;
  if (std::isfinite(pf.radius)) opts.ball_radius = pf.radius;
  std::vector<double> budgets{std::max(0.0, eps * m - static_cast<double>(pf.removed)) / m_kept};
  double full = std::min(eps * m / m_kept, 0.5 - 1e-12);
  if (full > budgets.front() + 1e-15) budgets.push_back(full);

  for (std::size_t attempt = 0; attempt < budgets.size(); ++attempt) {
    ProgramBundle pb = build_sparse_mean_program(y, budgets[attempt], k, M, t, opts);
    diag.relaxation_degree = pb.meta.relaxation_degree;
    diag.nominal_degree = pb.meta.nominal_degree;
    diag.eps_used = budgets[attempt];
    diag.budget_fallback = attempt > 0;
    try {
      auto [mean, report] = detail::solve_mean(pb, cfg);
      diag.solver = report;
      diag.wall_seconds = detail::seconds_since(t0);
      return detail::finish_result(mean + pf.center, k, diag, data);
    } catch (const SolveFailure& e) {
      if (attempt + 1 == budgets.size()) throw;
    }
  }
  throw Error("unreachable");
}

// Gaussian sparse mean. The program is translation equivariant, so the
// data are centered at the coordinate median before solving.
inline EstimateResult gaussian_sparse_mean(const Dataset& data, double eps, std::uint32_t k,
                                           const EstimatorConfig& cfg = {}) {
  auto t0 = std::chrono::steady_clock::now();
  check_k(k, static_cast<Eigen::Index>(data.d()));
  if (data.m() == 0) throw DegenerateInputError("empty dataset");
  EstimateDiagnostics diag;
  diag.method = "gaussian_sparse_mean";
  diag.constants = {{"c_slack", cfg.program.c_slack}};
  Eigen::VectorXd center = detail::coordinate_median(data.samples);
  Eigen::MatrixXd y = data.samples.rowwise() - center.transpose();
  ProgramBundle pb = build_gaussian_program(y, eps, k, cfg.program);
  diag.relaxation_degree = pb.meta.relaxation_degree;
  diag.nominal_degree = pb.meta.nominal_degree;
  diag.degree_deviation = pb.meta.nominal_degree != 12;
  diag.eps_used = eps;
  diag.constants["slack"] = pb.meta.slack;
  auto [mean, report] = detail::solve_mean(pb, cfg);
  diag.solver = report;
  diag.wall_seconds = detail::seconds_since(t0);
  return detail::finish_result(mean + center, k, diag, data);
}

// Scaled robust mean. Divides by sigma_tilde, adds fresh standard Gaussian noise
// drawn from `seed`, runs the Gaussian program and scales back.
inline EstimateResult robust_mean_scaled(const Dataset& data, double sigma_tilde, double eps, std::uint32_t k,
                                         std::uint64_t seed, const EstimatorConfig& cfg = {}) {
  if (!(sigma_tilde > 0.0)) throw DomainError("sigma_tilde must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Dataset scaled = data;
  scaled.truth.reset();
  for (Eigen::Index i = 0; i < scaled.samples.rows(); ++i) {
    for (Eigen::Index a = 0; a < scaled.samples.cols(); ++a) {
      scaled.samples(i, a) = data.samples(i, a) / sigma_tilde + g(rng);
    }
  }
  EstimateResult inner = gaussian_sparse_mean(scaled, eps, k, cfg);
  inner.diagnostics.method = "robust_mean_scaled";
  inner.diagnostics.constants["sigma_tilde"] = sigma_tilde;
  return detail::finish_result(sigma_tilde * inner.estimate, k, inner.diagnostics, data);
}

struct LepskiiResult {
  Eigen::VectorXd estimate;
  std::size_t j_hat = 0;
  std::size_t calls = 0;
  std::vector<double> grid;
  double gamma_prime = 0.0;
  // Index at which the black box failed, if it did.
  std::optional<std::size_t> failed_at;
};

using BlackBox = std::function<Eigen::VectorXd(double sigma_tilde, double gamma_prime)>;

// Adaptive search over sigma_j = B / 2^j, j = 0 .. floor(log2(B/A)).
// Stops at the first estimate inconsistent with an earlier one and returns
// the one before it. A black box that throws counts as inconsistent; a
// failure at j = 0 propagates.
inline LepskiiResult lepskii_search(const BlackBox& alg, double A, double B, double gamma,
                                    const std::function<double(double)>& r) {
  if (!(A > 0.0) || !(B >= A)) throw DomainError("lepskii_search needs 0 < A <= B");
  LepskiiResult out;
  double levels = std::log2(B / A);
  std::size_t n = static_cast<std::size_t>(std::floor(levels + 1e-12)) + 1;
  for (std::size_t j = 0; j < n; ++j) out.grid.push_back(B / std::pow(2.0, static_cast<double>(j)));
  out.gamma_prime = levels > 0.0 ? gamma / levels : gamma;

  std::vector<Eigen::VectorXd> est;
  est.push_back(alg(out.grid[0], out.gamma_prime));
  out.calls = 1;
  for (std::size_t J = 1; J < n; ++J) {
    Eigen::VectorXd next;
    ++out.calls;
    try {
      next = alg(out.grid[J], out.gamma_prime);
    } catch (const Error&) {
      out.failed_at = J;
      break;
    }
    bool consistent = true;
    for (std::size_t j = 0; j < J && consistent; ++j) {
      consistent = (next - est[j]).norm() <= r(out.grid[J]) + r(out.grid[j]);
    }
    if (!consistent) break;
    est.push_back(std::move(next));
  }
  out.j_hat = est.size() - 1;
  out.estimate = est.back();
  return out;
}

struct ScaleBounds {
  double A = 0.0;
  double B = 0.0;
  double D = 0.0;
  // D = 0: every paired difference vanished.
  bool degenerate = false;
};

// Rough bounds on ||Sigma||_2 from the median squared norm of paired
// half-sample differences.
inline ScaleBounds rough_scale_bounds(const Dataset& data, double c1 = 0.05, double c2 = 10.0) {
  if (data.m() < 2) throw DomainError("rough_scale_bounds needs m >= 2");
  if (!(0.0 < c1 && c1 < c2)) throw DomainError("need 0 < c1 < c2");
  const Eigen::Index half = static_cast<Eigen::Index>(data.m() / 2);
  std::vector<double> norms;
  for (Eigen::Index i = 0; i < half; ++i) {
    norms.push_back((data.samples.row(i) - data.samples.row(half + i)).squaredNorm() / 2.0);
  }
  std::sort(norms.begin(), norms.end());
  std::size_t n = norms.size();
  ScaleBounds out;
  out.D = n % 2 == 1 ? norms[n / 2] : 0.5 * (norms[n / 2 - 1] + norms[n / 2]);
  const double d = static_cast<double>(data.d());
  out.A = out.D / (c2 * d);
  out.B = d * out.D / c1;
  out.degenerate = out.D == 0.0;
  return out;
}

// Full pipeline for N(mu, Sigma) with unknown scale: rough bounds on
// ||Sigma||_2, then the adaptive search over sigma in [sqrt A, sqrt B] with
// RobustMean as black box.
inline EstimateResult robust_sparse_gaussian_mean(const Dataset& data, double eps, std::uint32_t k, double gamma,
                                                  std::uint64_t seed, const EstimatorConfig& cfg = {}) {
  auto t0 = std::chrono::steady_clock::now();
  check_k(k, static_cast<Eigen::Index>(data.d()));
  if (!(eps >= 0.0 && eps < 0.5)) throw DomainError("eps must lie in [0, 1/2)");
  EstimateDiagnostics diag;
  diag.method = "robust_sparse_gaussian_mean";
  diag.constants = {{"rate_c", cfg.rate_c}, {"c1", cfg.rough_c1}, {"c2", cfg.rough_c2},
                    {"c_prime", cfg.lepskii_c_prime}, {"gamma", gamma}};
  Eigen::VectorXd mean = data.samples.colwise().mean();
  if (eps == 0.0) {
    diag.note = "eps = 0: nothing to remove, returning the sample mean";
    diag.wall_seconds = detail::seconds_since(t0);
    return detail::finish_result(mean, k, diag, data);
  }
  ScaleBounds sb = rough_scale_bounds(data, cfg.rough_c1, cfg.rough_c2);
  diag.constants["A"] = sb.A;
  diag.constants["B"] = sb.B;
  if (sb.degenerate) {
    diag.flagged = true;
    diag.note = "zero spread (D = 0): returning the sample mean";
    diag.wall_seconds = detail::seconds_since(t0);
    return detail::finish_result(mean, k, diag, data);
  }
  diag.constants["gamma_prime_black_box"] =
      gamma / (cfg.lepskii_c_prime * std::max(1.0, std::log(static_cast<double>(data.d()))));

  const double rate = cfg.rate_c * eps * std::log(1.0 / eps);
  std::uint64_t call = 0;
  std::optional<SolverReport> last;
  std::uint32_t degree = 0;
  std::uint32_t nominal = 0;
  BlackBox alg = [&](double sigma_tilde, double) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(call++)};
    std::uint32_t s[2];
    seq.generate(s, s + 2);
    EstimateResult r = robust_mean_scaled(data, sigma_tilde, eps, k,
                                          (static_cast<std::uint64_t>(s[0]) << 32) | s[1], cfg);
    last = r.diagnostics.solver;
    degree = r.diagnostics.relaxation_degree;
    nominal = r.diagnostics.nominal_degree;
    return r.estimate;
  };
  LepskiiResult lr = lepskii_search(alg, std::sqrt(sb.A), std::sqrt(sb.B), gamma,
                                    [rate](double s) { return rate * s; });
  diag.black_box_calls = lr.calls;
  if (last) diag.solver = *last;
  diag.relaxation_degree = degree;
  diag.nominal_degree = nominal;
  diag.degree_deviation = nominal != 12;
  diag.eps_used = eps;
  diag.constants["sigma_selected"] = lr.grid[lr.j_hat];
  diag.constants["gamma_prime"] = lr.gamma_prime;
  if (lr.failed_at) diag.note = "black box failed at grid index " + std::to_string(*lr.failed_at);
  diag.wall_seconds = detail::seconds_since(t0);
  return detail::finish_result(lr.estimate, k, diag, data);
}

enum class Baseline { SampleMean, CoordMedianTruncate, NetTrimmedMean };

inline Baseline parse_baseline(const std::string& s) {
  if (s == "sample_mean") return Baseline::SampleMean;
  if (s == "coord_median_truncate") return Baseline::CoordMedianTruncate;
  if (s == "net_trimmed_mean") return Baseline::NetTrimmedMean;
  throw DomainError("unknown baseline '" + s + "'");
}

// Unit directions of a 1/2-net of k-sparse directions, k <= 2. For k = 2
// each support gets 13 directions spread over a half circle (antipodes give
// the same trimmed mean up to sign).
inline std::vector<Eigen::VectorXd> sparse_direction_net(Eigen::Index d, std::uint32_t k) {
  if (d > 10 || k > 2) throw SizeError("net of k-sparse directions needs d <= 10 and k <= 2",
                                       static_cast<std::size_t>(std::max<Eigen::Index>(d, k)), 10);
  std::vector<Eigen::VectorXd> out;
  for (Eigen::Index a = 0; a < d; ++a) out.push_back(Eigen::VectorXd::Unit(d, a));
  if (k == 2) {
    const int n = 13;
    for (Eigen::Index a = 0; a < d; ++a) {
      for (Eigen::Index b = a + 1; b < d; ++b) {
        for (int s = 1; s < n; ++s) {
          if (2 * s == n) continue;
          double th = M_PI * s / n;
          Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
          v[a] = std::cos(th);
          v[b] = std::sin(th);
          out.push_back(v);
        }
      }
    }
  }
  return out;
}

// Mean of the values left after dropping floor(tau n) from each tail; falls
// back to the median once nothing would remain.
inline double trimmed_mean(std::vector<double> v, double tau) {
  if (v.empty()) throw DegenerateInputError("trimmed mean of nothing");
  std::sort(v.begin(), v.end());
  std::size_t cut = static_cast<std::size_t>(std::floor(tau * static_cast<double>(v.size())));
  if (2 * cut >= v.size()) {
    std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  }
  double total = 0.0;
  for (std::size_t i = cut; i < v.size() - cut; ++i) total += v[i];
  return total / static_cast<double>(v.size() - 2 * cut);
}

struct NetEstimate {
  std::vector<Eigen::VectorXd> directions;
  std::vector<double> values;
  double tau = 0.0;
  Eigen::VectorXd point;
  double max_violation = 0.0;
};

// Directional trimmed means over the net and a point agreeing with all of
// them, found by subgradient steps on the largest violation.
inline NetEstimate net_trimmed_estimate(const Dataset& data, double eps, std::uint32_t k, double gamma,
                                        int iterations) {
  NetEstimate out;
  const auto d = static_cast<Eigen::Index>(data.d());
  out.directions = sparse_direction_net(d, k);
  out.tau = 8.0 * eps + std::log(1.0 / gamma) / static_cast<double>(data.m());
  for (const auto& v : out.directions) {
    Eigen::VectorXd proj = data.samples * v;
    out.values.push_back(trimmed_mean(std::vector<double>(proj.data(), proj.data() + proj.size()), out.tau));
  }
  auto violation = [&](const Eigen::VectorXd& x, std::size_t& arg) {
    double worst = -1.0;
    for (std::size_t i = 0; i < out.directions.size(); ++i) {
      double r = std::abs(out.directions[i].dot(x) - out.values[i]);
      if (r > worst) {
        worst = r;
        arg = i;
      }
    }
    return worst;
  };
  Eigen::VectorXd x = truncate_top_k(detail::coordinate_median(data.samples), k);
  std::size_t arg = 0;
  double best = violation(x, arg);
  out.point = x;
  // Polyak step toward violation 0 on the currently worst direction.
  for (int it = 0; it < iterations; ++it) {
    double cur = violation(x, arg);
    if (cur < best) {
      best = cur;
      out.point = x;
    }
    if (cur == 0.0) break;
    double sign = out.directions[arg].dot(x) > out.values[arg] ? 1.0 : -1.0;
    x -= cur * sign * out.directions[arg];
  }
  double final_v = violation(x, arg);
  if (final_v < best) {
    best = final_v;
    out.point = x;
  }
  out.max_violation = best;
  return out;
}

inline EstimateResult baseline_estimators(const Dataset& data, double eps, std::uint32_t k, Baseline variant,
                                          const EstimatorConfig& cfg = {}) {
  auto t0 = std::chrono::steady_clock::now();
  check_k(k, static_cast<Eigen::Index>(data.d()));
  if (data.m() == 0) throw DegenerateInputError("empty dataset");
  EstimateDiagnostics diag;
  Eigen::VectorXd est;
  switch (variant) {
    case Baseline::SampleMean:
      diag.method = "sample_mean";
      est = data.samples.colwise().mean();
      break;
    case Baseline::CoordMedianTruncate:
      diag.method = "coord_median_truncate";
      est = truncate_top_k(detail::coordinate_median(data.samples), k);
      break;
    case Baseline::NetTrimmedMean: {
      diag.method = "net_trimmed_mean";
      NetEstimate ne = net_trimmed_estimate(data, eps, k, cfg.gamma, cfg.net_iterations);
      diag.constants = {{"tau", ne.tau}, {"max_violation", ne.max_violation},
                        {"net_size", static_cast<double>(ne.directions.size())}};
      est = truncate_top_k(ne.point, k);
      break;
    }
  }
  diag.eps_used = eps;
  diag.wall_seconds = detail::seconds_since(t0);
  return detail::finish_result(est, k, diag, data);
}

}  // namespace sos_sparse
