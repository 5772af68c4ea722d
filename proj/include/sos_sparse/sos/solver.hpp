#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <Eigen/SPQRSupport>

#include "sos_sparse/error.hpp"
#include "sos_sparse/sos/sdp_problem.hpp"

namespace sos_sparse {

struct SolverConfig {
  double eq_tol = 1e-7;
  double psd_tol = 1e-6;
  int max_iters = 50000;
  int stall_window = 2000;
  // Relaxation factor of the Douglas-Rachford update, in (0, 2).
  double relaxation = 1.6;
  // Weight of the objective inside the cone prox step.
  double step = 1.0;
  int check_every = 10;
};

enum class SolveStatus { Feasible, Infeasible, Inconclusive };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Feasible:
      return "feasible";
    case SolveStatus::Infeasible:
      return "infeasible";
    case SolveStatus::Inconclusive:
      return "inconclusive";
  }
  return "?";
}

struct SolverReport {
  SolveStatus status = SolveStatus::Inconclusive;
  int iterations = 0;
  double max_eq_residual = 0.0;
  double min_eigenvalue = 0.0;
  std::string message;
};

struct SdpSolution {
  SolverReport report;
  // Dense psd blocks; diagonal blocks are stored as n x 1 columns.
  std::vector<Eigen::MatrixXd> blocks;

  double value(std::uint32_t block, std::uint32_t i, std::uint32_t j) const {
    const auto& b = blocks.at(block);
    if (b.cols() == 1 && b.rows() > 1) return i == j ? b(i, 0) : 0.0;
    return b(i, j);
  }
};

namespace detail {

inline std::string format_residual(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}


// Maps block entries to coordinates of the stacked vectorization. Off-diagonal
// entries of psd blocks are scaled by sqrt(2) so the Euclidean inner product
// matches the trace inner product.
class SvecLayout {
 public:
  explicit SvecLayout(const SdpProblem& p) : sizes_(p.block_sizes) {
    std::size_t off = 0;
    for (int s : sizes_) {
      offsets_.push_back(off);
      std::size_t n = static_cast<std::size_t>(std::abs(s));
      off += s < 0 ? n : n * (n + 1) / 2;
    }
    total_ = off;
  }

  std::size_t size() const { return total_; }
  std::size_t num_blocks() const { return sizes_.size(); }
  bool diagonal(std::size_t b) const { return sizes_[b] < 0; }
  std::size_t dim(std::size_t b) const { return static_cast<std::size_t>(std::abs(sizes_[b])); }

  std::size_t index(std::size_t b, std::size_t i, std::size_t j) const {
    if (diagonal(b)) return offsets_[b] + i;
    return offsets_[b] + j * (j + 1) / 2 + i;
  }

  // Coefficient on the coordinate for the linear form <F, Y> of one entry.
  static double weight(const SdpEntry& e) { return e.i == e.j ? e.value : std::sqrt(2.0) * e.value; }

  Eigen::MatrixXd unpack(const Eigen::VectorXd& x, std::size_t b) const {
    std::size_t n = dim(b);
    if (diagonal(b)) return x.segment(offsets_[b], n);
    Eigen::MatrixXd m(n, n);
    const double r = 1.0 / std::sqrt(2.0);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i <= j; ++i) {
        double v = x[index(b, i, j)];
        if (i != j) v *= r;
        m(i, j) = v;
        m(j, i) = v;
      }
    }
    return m;
  }

  void pack(const Eigen::MatrixXd& m, std::size_t b, Eigen::VectorXd& x) const {
    std::size_t n = dim(b);
    if (diagonal(b)) {
      x.segment(offsets_[b], n) = m.col(0);
      return;
    }
    const double s = std::sqrt(2.0);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i <= j; ++i) x[index(b, i, j)] = i == j ? m(i, j) : s * m(i, j);
    }
  }

 private:
  std::vector<int> sizes_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
};

// Projects onto the cone; returns the smallest eigenvalue seen before clipping.
inline double project_cone(const SvecLayout& layout, Eigen::VectorXd& x) {
  double min_eig = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < layout.num_blocks(); ++b) {
    if (layout.diagonal(b)) {
      std::size_t n = layout.dim(b);
      std::size_t off = layout.index(b, 0, 0);
      for (std::size_t i = 0; i < n; ++i) {
        min_eig = std::min(min_eig, x[off + i]);
        x[off + i] = std::max(0.0, x[off + i]);
      }
      continue;
    }
    Eigen::MatrixXd m = layout.unpack(x, b);
    if (m.rows() == 1) {
      min_eig = std::min(min_eig, m(0, 0));
      m(0, 0) = std::max(0.0, m(0, 0));
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
      Eigen::VectorXd ev = es.eigenvalues();
      min_eig = std::min(min_eig, ev.minCoeff());
      if (ev.minCoeff() >= 0.0) continue;
      const Eigen::MatrixXd& V = es.eigenvectors();
      m = V * ev.cwiseMax(0.0).asDiagonal() * V.transpose();
    }
    layout.pack(m, b, x);
  }
  return min_eig;
}

inline double min_cone_eigenvalue(const SvecLayout& layout, const Eigen::VectorXd& x) {
  double min_eig = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < layout.num_blocks(); ++b) {
    if (layout.diagonal(b)) {
      std::size_t off = layout.index(b, 0, 0);
      min_eig = std::min(min_eig, x.segment(off, layout.dim(b)).minCoeff());
      continue;
    }
    Eigen::MatrixXd m = layout.unpack(x, b);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
  }
  return min_eig;
}

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

// Orthogonal projection onto {x : A x = b} for a full-row-rank A.
class AffineProjector {
 public:
  AffineProjector(SparseMatrix a, Eigen::VectorXd b) : a_(std::move(a)), b_(std::move(b)) {
    at_ = a_.transpose();
    SparseMatrix aat = a_ * at_;
    llt_.compute(aat);
    if (llt_.info() != Eigen::Success) throw DomainError("affine system is singular");
  }

  void project(Eigen::VectorXd& x) const {
    Eigen::VectorXd r = a_ * x - b_;
    x -= at_ * llt_.solve(r);
  }

 private:
  SparseMatrix a_;
  SparseMatrix at_;
  Eigen::VectorXd b_;
  Eigen::SimplicialLDLT<SparseMatrix> llt_;
};

}  // namespace detail

// First-order Douglas-Rachford splitting between the cone and the affine
// set, with the objective folded into the cone step. Returns the final affine
// iterate, which satisfies the equalities to rounding error.
inline SdpSolution solve_sdp(const SdpProblem& problem, const SolverConfig& cfg = {}) {
  problem.validate();
  detail::SvecLayout layout(problem);
  const std::size_t n = layout.size();
  const std::size_t m = problem.constraints.size();

  SdpSolution sol;
  auto finish = [&](const Eigen::VectorXd& y) {
    for (std::size_t b = 0; b < layout.num_blocks(); ++b) sol.blocks.push_back(layout.unpack(y, b));
    return sol;
  };

  // Unscaled constraint matrix, used for reporting residuals.
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd rhs(m);
  Eigen::VectorXd row_norm = Eigen::VectorXd::Zero(m);
  for (std::size_t r = 0; r < m; ++r) {
    const auto& c = problem.constraints[r];
    rhs[r] = c.rhs;
    for (const auto& e : c.entries) {
      double w = detail::SvecLayout::weight(e);
      trips.emplace_back(static_cast<int>(r), static_cast<int>(layout.index(e.block, e.i, e.j)), w);
      row_norm[r] += w * w;
    }
  }
  detail::SparseMatrix a(static_cast<int>(m), static_cast<int>(n));
  a.setFromTriplets(trips.begin(), trips.end());

  Eigen::VectorXd cost = Eigen::VectorXd::Zero(n);
  for (const auto& e : problem.objective) {
    cost[layout.index(e.block, e.i, e.j)] -= detail::SvecLayout::weight(e);
  }

  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  // Residual per unit row norm, so rows with large constants (ball bounds)
  // are held to the same relative accuracy as the rest.
  Eigen::VectorXd inv_norm(m);
  for (std::size_t r = 0; r < m; ++r) inv_norm[r] = row_norm[r] > 0.0 ? 1.0 / std::sqrt(row_norm[r]) : 1.0;
  auto eq_residual = [&](const Eigen::VectorXd& v) {
    return m == 0 ? 0.0 : (a * v - rhs).cwiseProduct(inv_norm).cwiseAbs().maxCoeff();
  };

  // Empty rows must have zero right-hand side.
  for (std::size_t r = 0; r < m; ++r) {
    if (row_norm[r] == 0.0 && std::abs(rhs[r]) > cfg.eq_tol) {
      sol.report.status = SolveStatus::Infeasible;
      sol.report.message = "constraint " + std::to_string(r) + " reads 0 = nonzero";
      return finish(y);
    }
  }

  // Normalize rows, then keep a maximal independent subset.
  std::vector<int> nonempty;
  for (std::size_t r = 0; r < m; ++r) {
    if (row_norm[r] > 0.0) nonempty.push_back(static_cast<int>(r));
  }
  std::vector<int> independent;
  if (!nonempty.empty()) {
    std::vector<Eigen::Triplet<double>> tt;
    for (std::size_t k = 0; k < nonempty.size(); ++k) {
      int r = nonempty[k];
      double s = 1.0 / std::sqrt(row_norm[r]);
      for (const auto& e : problem.constraints[r].entries) {
        tt.emplace_back(static_cast<int>(layout.index(e.block, e.i, e.j)), static_cast<int>(k),
                        s * detail::SvecLayout::weight(e));
      }
    }
    detail::SparseMatrix at(static_cast<int>(n), static_cast<int>(nonempty.size()));
    at.setFromTriplets(tt.begin(), tt.end());
    at.makeCompressed();
    Eigen::SPQR<detail::SparseMatrix> qr;
    qr.setPivotThreshold(1e-9);
    qr.compute(at);
    if (qr.info() != Eigen::Success) throw DomainError("QR factorization of constraints failed");
    auto perm = qr.colsPermutation().indices();
    for (Eigen::Index k = 0; k < qr.rank(); ++k) independent.push_back(nonempty[perm[k]]);
    std::sort(independent.begin(), independent.end());
  }

  std::vector<Eigen::Triplet<double>> ti;
  Eigen::VectorXd bi(independent.size());
  for (std::size_t k = 0; k < independent.size(); ++k) {
    int r = independent[k];
    double s = 1.0 / std::sqrt(row_norm[r]);
    bi[k] = s * rhs[r];
    for (const auto& e : problem.constraints[r].entries) {
      ti.emplace_back(static_cast<int>(k), static_cast<int>(layout.index(e.block, e.i, e.j)),
                      s * detail::SvecLayout::weight(e));
    }
  }
  detail::SparseMatrix ai(static_cast<int>(independent.size()), static_cast<int>(n));
  ai.setFromTriplets(ti.begin(), ti.end());
  detail::AffineProjector affine(ai, bi);

  // Linear consistency: the projection of 0 must satisfy every row.
  affine.project(y);
  double lin = eq_residual(y);
  double rhs_scale = 1.0 + (m == 0 ? 0.0 : rhs.cwiseProduct(inv_norm).cwiseAbs().maxCoeff());
  if (lin > 1e-8 * rhs_scale) {
    sol.report.status = SolveStatus::Infeasible;
    sol.report.max_eq_residual = lin;
    sol.report.message = "linear constraints are inconsistent (residual " + detail::format_residual(lin) + ")";
    return finish(y);
  }

  Eigen::VectorXd z = y;
  Eigen::VectorXd x(n);
  const double alpha = cfg.relaxation;
  Eigen::VectorXd z_window = z;
  double gap_window = std::numeric_limits<double>::infinity();
  int stall_hits = 0;
  const int window = std::max(1, cfg.stall_window);

  for (int it = 1; it <= cfg.max_iters; ++it) {
    x = z - cfg.step * cost;
    detail::project_cone(layout, x);
    y = 2.0 * x - z;
    affine.project(y);
    Eigen::VectorXd diff = y - x;
    z += alpha * diff;
    sol.report.iterations = it;

    double gap = diff.norm();
    if (it % cfg.check_every == 0 && gap < 1e3 * cfg.psd_tol) {
      double min_eig = detail::min_cone_eigenvalue(layout, y);
      double res = eq_residual(y);
      if (min_eig >= -cfg.psd_tol && res <= cfg.eq_tol) {
        sol.report.status = SolveStatus::Feasible;
        sol.report.min_eigenvalue = min_eig;
        sol.report.max_eq_residual = res;
        sol.report.message = "converged";
        return finish(y);
      }
    }

    if (it % window == 0) {
      // An infeasible pair makes z drift along a fixed direction while the
      // gap between the two iterates stops shrinking.
      double drift = (z - z_window).norm();
      bool stalled = gap > 1e2 * cfg.psd_tol && gap > 0.99 * gap_window &&
                     drift > 0.5 * alpha * window * gap;
      stall_hits = stalled ? stall_hits + 1 : 0;
      gap_window = gap;
      z_window = z;
      if (stall_hits >= 2) {
        sol.report.status = SolveStatus::Infeasible;
        sol.report.min_eigenvalue = detail::min_cone_eigenvalue(layout, y);
        sol.report.max_eq_residual = eq_residual(y);
        sol.report.message = "residual stalled at " + std::to_string(gap) + " with drifting iterates";
        return finish(y);
      }
    }
  }
  sol.report.status = SolveStatus::Inconclusive;
  sol.report.min_eigenvalue = detail::min_cone_eigenvalue(layout, y);
  sol.report.max_eq_residual = eq_residual(y);
  sol.report.message = "iteration cap reached";
  return finish(y);
}

}  // namespace sos_sparse
