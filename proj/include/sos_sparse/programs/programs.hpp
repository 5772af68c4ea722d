#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sos_sparse/data/dataset.hpp"
#include "sos_sparse/error.hpp"
#include "sos_sparse/poly/polynomial.hpp"
#include "sos_sparse/poly/symmetric_tensor.hpp"
#include "sos_sparse/programs/k_sparse.hpp"
#include "sos_sparse/programs/quantifier_elimination.hpp"
#include "sos_sparse/sos/certificate.hpp"
#include "sos_sparse/sos/constraint_system.hpp"
#include "sos_sparse/sos/solver.hpp"

namespace sos_sparse {

// Lifted: moment statistics of X' get their own variables tied to X' by
// definitional equalities, and the moment matrix is indexed by monomials of
// degree <= 1 in all variables. Products: the lifted basis plus w_i X'_ia and
// w_i mu'_a at relaxation degree 4, which ties each kept point's weight to
// its distance from mu' and is much stronger against far outliers. Full:
// every monomial up to half the nominal degree, which is only solvable on
// very small instances.
enum class BasisMode { Lifted, Products, Full };

inline const char* to_string(BasisMode b) {
  switch (b) {
    case BasisMode::Lifted:
      return "lifted";
    case BasisMode::Products:
      return "products";
    case BasisMode::Full:
      return "full";
  }
  return "?";
}

inline BasisMode parse_basis_mode(const std::string& s) {
  if (s == "lifted") return BasisMode::Lifted;
  if (s == "products") return BasisMode::Products;
  if (s == "full") return BasisMode::Full;
  throw DomainError("unknown basis mode '" + s + "'");
}

struct ProgramOptions {
  // Nominal relaxation degree in the original variables; 0 picks the default.
  std::uint32_t degree = 0;
  BasisMode basis = BasisMode::Lifted;
  // Multiplier of the eps^2 log^2(1/eps) slack in the Gaussian fourth-moment item.
  double c_slack = 100.0;
  // Per-point radius; adds sum_i |X'_i|^2 <= m R^2.
  std::optional<double> ball_radius;
};

struct ProgramMeta {
  std::string kind;
  std::size_t m = 0;
  std::size_t d = 0;
  std::uint32_t k = 0;
  std::uint32_t t = 0;
  double eps = 0.0;
  double M = 0.0;
  std::uint32_t nominal_degree = 0;
  std::uint32_t relaxation_degree = 0;
  BasisMode basis = BasisMode::Lifted;
  std::vector<std::uint32_t> proof_degrees;
  double weight_sum = 0.0;
  double slack = 0.0;
  bool eps_above_threshold = false;
  std::uint64_t fingerprint = 0;
};

struct ConsItem {
  std::string name;
  SplitPolynomial b;
  ConsFragment fragment;
};

struct ProgramBundle {
  ConstraintSystem cs;
  // Sparsity axioms over F = (v, z) shared by every cons item.
  ConstraintSystem axioms;
  Eigen::MatrixXd data;
  // mu'_a as the average of the X' variables.
  std::vector<Polynomial> mu;
  // Entries (a, b), a <= b, row-major, of Sigma' when the program defines it.
  std::vector<Polynomial> sigma;
  // Lifted variables and their defining polynomials, in evaluation order.
  std::vector<std::pair<VarId, Polynomial>> definitions;
  std::vector<ConsItem> cons;
  std::size_t base_equalities = 0;
  ProgramMeta meta;
  VarId w_first = 0;
  VarId x_first = 0;

  VarId w(std::size_t i) const { return w_first + static_cast<VarId>(i); }
  VarId x(std::size_t i, std::size_t a) const {
    return x_first + static_cast<VarId>(i * meta.d + a);
  }
};

namespace detail {

inline std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t program_fingerprint(const Eigen::MatrixXd& y, const std::string& kind,
                                         const std::vector<double>& params) {
  std::uint64_t h = 14695981039346656037ull;
  h = fnv1a(h, kind.data(), kind.size());
  std::int64_t dims[2] = {y.rows(), y.cols()};
  h = fnv1a(h, dims, sizeof(dims));
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      double v = y(i, j);
      h = fnv1a(h, &v, sizeof(v));
    }
  }
  for (double p : params) h = fnv1a(h, &p, sizeof(p));
  return h;
}

inline SplitPolynomial split_mul(const SplitPolynomial& a, const SplitPolynomial& b) {
  SplitPolynomial out;
  for (const auto& [ma, ca] : a) {
    for (const auto& [mb, cb] : b) out[ma * mb] += ca * cb;
  }
  return out;
}

inline SplitPolynomial split_add(SplitPolynomial a, const SplitPolynomial& b, double scale = 1.0) {
  for (const auto& [m, c] : b) a[m] += scale * c;
  return a;
}

inline std::size_t pair_index(std::size_t a, std::size_t b, std::size_t d) {
  if (a > b) std::swap(a, b);
  return a * d - a * (a - 1) / 2 + (b - a);
}

// Incremental builder shared by both programs.
class ProgramBuilder {
 public:
  ProgramBuilder(const Eigen::MatrixXd& y, double eps, std::uint32_t k) {
    const std::size_t m = static_cast<std::size_t>(y.rows());
    const std::size_t d = static_cast<std::size_t>(y.cols());
    if (m == 0 || d == 0) throw DomainError("empty dataset");
    if (!(eps >= 0.0 && eps < 0.5)) throw DomainError("eps must lie in [0, 1/2)");
    if (!y.allFinite()) throw DomainError("dataset contains non-finite values");
    pb_.axioms = build_k_sparse_axioms(static_cast<std::uint32_t>(d), k);
    pb_.data = y;
    pb_.meta.m = m;
    pb_.meta.d = d;
    pb_.meta.k = k;
    pb_.meta.eps = eps;
    pb_.meta.weight_sum = (1.0 - eps) * static_cast<double>(m);
    pb_.meta.eps_above_threshold = eps >= 3.0 / 1000.0;

    auto& cs = pb_.cs;
    pb_.w_first = cs.add_group("w", static_cast<std::uint32_t>(m));
    pb_.x_first = cs.add_group("x", static_cast<std::uint32_t>(m * d));
    for (std::size_t i = 0; i < m; ++i) {
      Polynomial w = Polynomial::var(pb_.w(i));
      cs.equalities.push_back(w * w - w);
    }
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t a = 0; a < d; ++a) {
        Polynomial w = Polynomial::var(pb_.w(i));
        cs.equalities.push_back(w * (Polynomial(y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a))) -
                                     Polynomial::var(pb_.x(i, a))));
      }
    }
    Polynomial wsum(-pb_.meta.weight_sum);
    for (std::size_t i = 0; i < m; ++i) wsum += Polynomial::var(pb_.w(i));
    cs.equalities.push_back(wsum);
    pb_.base_equalities = cs.equalities.size();

    for (std::size_t a = 0; a < d; ++a) {
      Polynomial avg;
      for (std::size_t i = 0; i < m; ++i) avg += (1.0 / static_cast<double>(m)) * Polynomial::var(pb_.x(i, a));
      pb_.mu.push_back(avg);
    }
    VarId mu0 = cs.add_group("mu", static_cast<std::uint32_t>(d));
    for (std::size_t a = 0; a < d; ++a) {
      mu_.push_back(Polynomial::var(mu0 + static_cast<VarId>(a)));
      define(mu0 + static_cast<VarId>(a), pb_.mu[a]);
    }
  }

  ProgramBundle& bundle() { return pb_; }
  std::size_t m() const { return pb_.meta.m; }
  std::size_t d() const { return pb_.meta.d; }

  void define(VarId v, const Polynomial& rhs) {
    pb_.cs.equalities.push_back(Polynomial::var(v) - rhs);
    pb_.definitions.emplace_back(v, rhs);
  }

  Polynomial centered(std::size_t i, std::size_t a) const {
    return Polynomial::var(pb_.x(i, a)) - mu_[a];
  }

  // Per-sample centered products Z_{i,ab}.
  void lift_products() {
    const std::size_t np = d() * (d() + 1) / 2;
    VarId z0 = pb_.cs.add_group("Z", static_cast<std::uint32_t>(m() * np));
    z_first_ = z0;
    for (std::size_t i = 0; i < m(); ++i) {
      for (std::size_t a = 0; a < d(); ++a) {
        for (std::size_t b = a; b < d(); ++b) {
          define(z(i, a, b), centered(i, a) * centered(i, b));
        }
      }
    }
  }

  VarId z(std::size_t i, std::size_t a, std::size_t b) const {
    return z_first_ + static_cast<VarId>(i * d() * (d() + 1) / 2 + pair_index(a, b, d()));
  }

  // Sigma' entries, through Z when it exists.
  void lift_covariance() {
    VarId s0 = pb_.cs.add_group("S", static_cast<std::uint32_t>(d() * (d() + 1) / 2));
    const double inv = 1.0 / static_cast<double>(m());
    for (std::size_t a = 0; a < d(); ++a) {
      for (std::size_t b = a; b < d(); ++b) {
        Polynomial rhs;
        for (std::size_t i = 0; i < m(); ++i) {
          if (z_first_ != kNone) {
            rhs += inv * Polynomial::var(z(i, a, b));
          } else {
            rhs += inv * Polynomial::var(pb_.x(i, a)) * Polynomial::var(pb_.x(i, b));
          }
        }
        if (z_first_ == kNone) rhs -= mu_[a] * mu_[b];
        VarId v = s0 + static_cast<VarId>(pair_index(a, b, d()));
        define(v, rhs);
        pb_.sigma.push_back(Polynomial::var(v));
      }
    }
  }

  Polynomial sigma(std::size_t a, std::size_t b) const { return pb_.sigma[pair_index(a, b, d())]; }

  // Order-4 central moment tensor over sorted tuples, from Z.
  std::map<IndexTuple, Polynomial> lift_fourth_moment(const std::string& name) {
    std::map<IndexTuple, Polynomial> out;
    std::vector<IndexTuple> tuples;
    for_each_sorted_tuple(static_cast<std::uint32_t>(d()), 4,
                          [&](const IndexTuple& T) { tuples.push_back(T); });
    VarId c0 = pb_.cs.add_group(name, static_cast<std::uint32_t>(tuples.size()));
    const double inv = 1.0 / static_cast<double>(m());
    for (std::size_t j = 0; j < tuples.size(); ++j) {
      const auto& T = tuples[j];
      Polynomial rhs;
      for (std::size_t i = 0; i < m(); ++i) {
        rhs += inv * Polynomial::var(z(i, T[0], T[1])) * Polynomial::var(z(i, T[2], T[3]));
      }
      VarId v = c0 + static_cast<VarId>(j);
      define(v, rhs);
      out[T] = Polynomial::var(v);
    }
    return out;
  }

  // Symmetrization of Sigma' (x) Sigma', so (v^T Sigma' v)^2 is linear in it.
  std::map<IndexTuple, Polynomial> lift_covariance_square() {
    std::map<IndexTuple, Polynomial> out;
    std::vector<IndexTuple> tuples;
    for_each_sorted_tuple(static_cast<std::uint32_t>(d()), 4,
                          [&](const IndexTuple& T) { tuples.push_back(T); });
    VarId u0 = pb_.cs.add_group("U", static_cast<std::uint32_t>(tuples.size()));
    for (std::size_t j = 0; j < tuples.size(); ++j) {
      const auto& T = tuples[j];
      Polynomial rhs = (1.0 / 3.0) * (sigma(T[0], T[1]) * sigma(T[2], T[3]) +
                                      sigma(T[0], T[2]) * sigma(T[1], T[3]) +
                                      sigma(T[0], T[3]) * sigma(T[1], T[2]));
      VarId v = u0 + static_cast<VarId>(j);
      define(v, rhs);
      out[T] = Polynomial::var(v);
    }
    return out;
  }

  // v^T Sigma' v as a split polynomial over F.
  SplitPolynomial quadratic_form() const {
    SplitPolynomial out;
    for (std::size_t a = 0; a < d(); ++a) {
      for (std::size_t b = a; b < d(); ++b) {
        Monomial mono = Monomial::var(static_cast<VarId>(a)) * Monomial::var(static_cast<VarId>(b));
        out[mono] += (a == b ? 1.0 : 2.0) * sigma(a, b);
      }
    }
    return out;
  }

  // sum over ordered 4-tuples of E_T v_T, for a tensor stored by sorted tuple.
  static SplitPolynomial quartic_form(const std::map<IndexTuple, Polynomial>& e) {
    SplitPolynomial out;
    for (const auto& [T, p] : e) {
      std::vector<Monomial::Factor> f;
      for (auto i : T) f.emplace_back(static_cast<VarId>(i), 1);
      out[Monomial::from_factors(std::move(f))] += tuple_multiplicity(T) * p;
    }
    return out;
  }

  void add_cons(const std::string& name, const SplitPolynomial& b) {
    std::uint32_t deg = split_degree(b);
    std::uint32_t t = (deg + 1) / 2;
    ConsFragment frag = build_cons_constraints(pb_.cs, pb_.axioms, b, t, name);
    pb_.meta.proof_degrees.push_back(frag.proof_degree);
    pb_.cons.push_back({name, b, std::move(frag)});
  }

  void finish(std::uint32_t nominal, const ProgramOptions& opts, const std::vector<double>& params) {
    auto& meta = pb_.meta;
    meta.nominal_degree = nominal;
    meta.basis = opts.basis;
    if (opts.basis == BasisMode::Lifted) {
      pb_.cs.relaxation_degree = 2;
      pb_.cs.basis.full_degree = 1;
    } else if (opts.basis == BasisMode::Products) {
      pb_.cs.relaxation_degree = 4;
      pb_.cs.basis.full_degree = 1;
      const auto& mu = pb_.cs.group("mu");
      for (std::size_t i = 0; i < m(); ++i) {
        Monomial w = Monomial::var(pb_.w(i));
        for (std::size_t a = 0; a < pb_.data.cols(); ++a) {
          pb_.cs.basis.extra.push_back(w * Monomial::var(pb_.x(i, a)));
          pb_.cs.basis.extra.push_back(w * Monomial::var(mu.at(static_cast<std::uint32_t>(a))));
        }
      }
    } else {
      pb_.cs.relaxation_degree = nominal;
    }
    meta.relaxation_degree = pb_.cs.relaxation_degree;
    if (opts.ball_radius) {
      if (!(*opts.ball_radius > 0.0)) throw DomainError("ball radius must be positive");
      pb_.cs.ball = BallBound{std::sqrt(static_cast<double>(m())) * *opts.ball_radius, {"x"}};
    }
    std::vector<double> all = params;
    all.push_back(meta.eps);
    all.push_back(static_cast<double>(meta.k));
    all.push_back(static_cast<double>(nominal));
    all.push_back(static_cast<double>(opts.basis));
    all.push_back(opts.ball_radius.value_or(0.0));
    meta.fingerprint = program_fingerprint(pb_.data, meta.kind, all);
  }

 private:
  static constexpr VarId kNone = static_cast<VarId>(-1);
  ProgramBundle pb_;
  std::vector<Polynomial> mu_;
  VarId z_first_ = kNone;
};

inline bool is_power_of_two(std::uint32_t t) { return t != 0 && (t & (t - 1)) == 0; }

}  // namespace detail

// Sparse mean estimation axioms: corruption constraints on (w, X') plus the
// certifiably bounded t-th central moment of X' in k-sparse directions.
// The lifted basis supports t = 2 (Sigma' lifted) and t = 4 (fourth-moment
// tensor lifted through per-sample products).
inline ProgramBundle build_sparse_mean_program(const Eigen::MatrixXd& y, double eps, std::uint32_t k,
                                               double M, std::uint32_t t,
                                               const ProgramOptions& opts = {}) {
  if (!(eps > 0.0 && eps < 0.5) && eps != 0.0) throw DomainError("eps must lie in [0, 1/2)");
  if (!detail::is_power_of_two(t) || t < 2) throw DomainError("t must be a power of two, at least 2");
  if (t > 4) throw UnsupportedOrderError("moment order t > 4 is not supported");
  if (!(M > 0.0)) throw DomainError("moment bound M must be positive");
  std::uint32_t nominal = opts.degree == 0 ? std::max<std::uint32_t>(2 * t, 4) : opts.degree;
  if (nominal % 2 == 1 || nominal < 2 * t) throw DomainError("relaxation degree must be even and >= 2t");
  ProgramOptions o = opts;
  if (nominal != std::max<std::uint32_t>(2 * t, 4)) o.basis = BasisMode::Full;

  detail::ProgramBuilder b(y, eps, k);
  auto& pb = b.bundle();
  pb.meta.kind = "sparse-mean";
  pb.meta.t = t;
  pb.meta.M = M;
  SplitPolynomial moment;
  if (t == 2) {
    b.lift_covariance();
    moment = b.quadratic_form();
  } else {
    b.lift_products();
    b.lift_covariance();
    moment = detail::ProgramBuilder::quartic_form(b.lift_fourth_moment("C"));
  }
  SplitPolynomial target = detail::split_add(
      SplitPolynomial{{Monomial{}, Polynomial(M * M)}}, detail::split_mul(moment, moment), -1.0);
  b.add_cons("moments", target);
  b.finish(nominal, o, {M, static_cast<double>(t)});
  return std::move(pb);
}

// Slack of the Gaussian fourth-moment item: c eps_s^2 log^2(1/eps_s) with
// eps_s = max(eps, k^2 / sqrt(m)) capped at 1/e, so the planted inliers stay
// feasible at sample sizes below the asymptotic regime.
inline double gaussian_slack(double eps, std::uint32_t k, std::size_t m, double c_slack) {
  double floor = static_cast<double>(k) * k / std::sqrt(static_cast<double>(m));
  double e = std::min(std::max(eps, floor), std::exp(-1.0));
  double l = std::log(1.0 / e);
  return c_slack * e * e * l * l;
}

// Gaussian sparse mean axioms: corruption constraints, Sigma' defined from
// X', and two certified inequalities in k-sparse directions,
//   (E<v, X'-mu'>^4 - 3 (v^T Sigma' v)^2)^2 <= slack (v^T Sigma' v)^4,
//   (v^T Sigma' v)^2 <= 9.
inline ProgramBundle build_gaussian_program(const Eigen::MatrixXd& y, double eps, std::uint32_t k,
                                            const ProgramOptions& opts = {}) {
  if (!(eps >= 0.0 && eps < 0.5)) throw DomainError("eps must lie in [0, 1/2)");
  std::uint32_t nominal = opts.degree == 0 ? 4 : opts.degree;
  if (nominal != 4 && nominal != 6 && nominal != 12) {
    throw DomainError("Gaussian program degree must be 4, 6 or 12");
  }
  ProgramOptions o = opts;
  if (nominal != 4) o.basis = BasisMode::Full;

  detail::ProgramBuilder b(y, eps, k);
  auto& pb = b.bundle();
  pb.meta.kind = "gaussian";
  pb.meta.t = 4;
  b.lift_products();
  b.lift_covariance();
  SplitPolynomial fourth = detail::ProgramBuilder::quartic_form(b.lift_fourth_moment("T"));
  SplitPolynomial quad_sq = detail::ProgramBuilder::quartic_form(b.lift_covariance_square());
  pb.meta.slack = gaussian_slack(eps, k, b.m(), o.c_slack);

  SplitPolynomial dev = detail::split_add(fourth, quad_sq, -3.0);
  SplitPolynomial scaled;
  for (const auto& [m, c] : detail::split_mul(quad_sq, quad_sq)) scaled[m] += pb.meta.slack * c;
  SplitPolynomial item3 = detail::split_add(scaled, detail::split_mul(dev, dev), -1.0);
  b.add_cons("fourth", item3);

  SplitPolynomial item4 = detail::split_add(SplitPolynomial{{Monomial{}, Polynomial(9.0)}}, quad_sq, -1.0);
  b.add_cons("variance", item4);
  b.finish(nominal, o, {pb.meta.slack});
  return std::move(pb);
}

struct ConsItemReport {
  std::string name;
  bool found = false;
  // Coefficient mismatch of the recovered certificate against b at the
  // planted assignment.
  double mismatch = 0.0;
  double residual = 0.0;
  double min_gram_eigenvalue = 0.0;
  SolverReport solver;
};

struct FeasibilityReport {
  double max_residual = 0.0;
  std::size_t worst_equality = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  std::vector<ConsItemReport> items;
  bool feasible = false;
};

// Values of every moment variable of the program at w and X' = x.
inline std::map<VarId, double> planted_assignment(const ProgramBundle& pb, const Eigen::MatrixXd& x,
                                                  const std::vector<int>& w) {
  std::map<VarId, double> out;
  for (std::size_t i = 0; i < pb.meta.m; ++i) {
    out[pb.w(i)] = static_cast<double>(w[i]);
    for (std::size_t a = 0; a < pb.meta.d; ++a) {
      out[pb.x(i, a)] = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a));
    }
  }
  for (const auto& [v, rhs] : pb.definitions) out[v] = rhs.evaluate(out);
  return out;
}

inline Polynomial evaluate_split(const SplitPolynomial& b, const std::map<VarId, double>& values) {
  Polynomial out;
  for (const auto& [m, c] : b) out.add_term(m, c.evaluate(values));
  return out;
}

// Evaluates the program at X' = inliers and the given weights, and solves
// for the inner certificate of every cons item.
inline FeasibilityReport check_planted_feasibility(const ProgramBundle& pb, const Eigen::MatrixXd& inliers,
                                                   const std::vector<int>& w, double tol,
                                                   const SolverConfig& cfg = {}) {
  if (static_cast<std::size_t>(inliers.rows()) != pb.meta.m ||
      static_cast<std::size_t>(inliers.cols()) != pb.meta.d) {
    throw DomainError("inlier matrix shape does not match the program");
  }
  if (w.size() != pb.meta.m) throw DomainError("weight vector length does not match m");
  long ones = 0;
  for (int v : w) {
    if (v != 0 && v != 1) throw DomainError("weights must be 0 or 1");
    ones += v;
  }
  const long expected = static_cast<long>(std::floor(pb.meta.weight_sum + 1e-9));
  if (ones != expected) {
    throw DomainError("expected " + std::to_string(expected) + " unit weights, got " +
                      std::to_string(ones));
  }

  FeasibilityReport rep;
  auto values = planted_assignment(pb, inliers, w);
  std::size_t cons_begin = pb.cs.equalities.size();
  for (const auto& item : pb.cons) cons_begin = std::min(cons_begin, item.fragment.first_equality);
  for (std::size_t e = 0; e < cons_begin; ++e) {
    double r = std::abs(pb.cs.equalities[e].evaluate(values));
    if (r > rep.max_residual) {
      rep.max_residual = r;
      rep.worst_equality = e;
    }
  }
  for (const auto& p : pb.cs.inequalities) rep.min_margin = std::min(rep.min_margin, p.evaluate(values));
  if (pb.cs.ball) rep.min_margin = std::min(rep.min_margin, pb.cs.ball_polynomial().evaluate(values));

  bool ok = rep.max_residual <= tol;
  for (const auto& item : pb.cons) {
    ConsItemReport ir;
    ir.name = item.name;
    InnerCertificate inner = solve_inner_certificate(pb.cs, {item.fragment}, values, cfg);
    ir.solver = inner.report;
    ir.found = inner.found;
    ir.residual = inner.max_residual;
    ir.min_gram_eigenvalue = inner.min_gram_eigenvalue;
    if (inner.found) {
      Polynomial target = evaluate_split(item.b, values);
      CertificateCheck chk = verify_sos_certificate(inner.certificates[0], target, pb.axioms, cfg.psd_tol);
      ir.mismatch = chk.max_mismatch;
      rep.max_residual = std::max(rep.max_residual, ir.residual);
    }
    ok = ok && ir.found && ir.residual <= tol && ir.mismatch <= tol * (1.0 + evaluate_split(item.b, values).max_abs_coefficient()) &&
         ir.min_gram_eigenvalue >= -cfg.psd_tol;
    rep.items.push_back(std::move(ir));
  }
  rep.feasible = ok && rep.min_margin >= -tol;
  return rep;
}

}  // namespace sos_sparse
