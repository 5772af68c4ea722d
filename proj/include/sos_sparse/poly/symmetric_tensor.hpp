#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "sos_sparse/error.hpp"

namespace sos_sparse {

using IndexTuple = std::vector<std::uint32_t>;

// Calls f(tuple) for every nondecreasing tuple of length `order` over [0, dim).
inline void for_each_sorted_tuple(std::uint32_t dim, std::uint32_t order,
                                  const std::function<void(const IndexTuple&)>& f) {
  if (dim == 0) return;
  IndexTuple idx(order, 0);
  while (true) {
    f(idx);
    int pos = static_cast<int>(order) - 1;
    while (pos >= 0 && idx[pos] == dim - 1) --pos;
    if (pos < 0) return;
    ++idx[pos];
    for (std::uint32_t j = pos + 1; j < order; ++j) idx[j] = idx[pos];
  }
}

// Number of distinct orderings of a sorted tuple.
inline double tuple_multiplicity(const IndexTuple& sorted) {
  double out = std::tgamma(static_cast<double>(sorted.size()) + 1.0);
  std::size_t run = 1;
  for (std::size_t i = 1; i <= sorted.size(); ++i) {
    if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
      ++run;
    } else {
      out /= std::tgamma(static_cast<double>(run) + 1.0);
      run = 1;
    }
  }
  return std::round(out);
}

// Order-t symmetric tensor over d coordinates, stored once per sorted index
// tuple. Absent entries are zero.
class SymmetricTensor {
 public:
  SymmetricTensor(std::uint32_t order, std::uint32_t dim) : order_(order), dim_(dim) {
    if (order == 0) throw DomainError("tensor order must be positive");
  }

  static SymmetricTensor from_matrix(const Eigen::MatrixXd& m, double sym_tol = 1e-12) {
    if (m.rows() != m.cols()) throw DomainError("matrix is not square");
    SymmetricTensor out(2, static_cast<std::uint32_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = i; j < m.cols(); ++j) {
        if (std::abs(m(i, j) - m(j, i)) > sym_tol * (1.0 + std::abs(m(i, j)))) {
          throw DomainError("matrix is not symmetric");
        }
        out.set({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)}, m(i, j));
      }
    }
    return out;
  }

  Eigen::MatrixXd to_matrix() const {
    if (order_ != 2) throw DomainError("to_matrix needs an order-2 tensor");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim_, dim_);
    for (const auto& [idx, v] : entries_) {
      m(idx[0], idx[1]) = v;
      m(idx[1], idx[0]) = v;
    }
    return m;
  }

  std::uint32_t order() const { return order_; }
  std::uint32_t dim() const { return dim_; }
  const std::map<IndexTuple, double>& entries() const { return entries_; }

  double get(IndexTuple idx) const {
    check(idx);
    std::sort(idx.begin(), idx.end());
    auto it = entries_.find(idx);
    return it == entries_.end() ? 0.0 : it->second;
  }

  void set(IndexTuple idx, double value) {
    check(idx);
    std::sort(idx.begin(), idx.end());
    if (value == 0.0) {
      entries_.erase(idx);
    } else {
      entries_[idx] = value;
    }
  }

  double linf_norm() const {
    double out = 0.0;
    for (const auto& [idx, v] : entries_) out = std::max(out, std::abs(v));
    return out;
  }

  // Sum over all ordered tuples T of entry(T) * prod_j v[T_j].
  double contract(const Eigen::VectorXd& v) const {
    if (static_cast<std::uint32_t>(v.size()) != dim_) throw DomainError("dimension mismatch");
    double total = 0.0;
    for (const auto& [idx, val] : entries_) {
      double term = val * tuple_multiplicity(idx);
      for (auto i : idx) term *= v[i];
      total += term;
    }
    return total;
  }

  SymmetricTensor operator-(const SymmetricTensor& o) const {
    if (o.order_ != order_ || o.dim_ != dim_) throw DomainError("tensor shape mismatch");
    SymmetricTensor out = *this;
    for (const auto& [idx, v] : o.entries_) out.set(idx, out.get(idx) - v);
    return out;
  }

 private:
  void check(const IndexTuple& idx) const {
    if (idx.size() != order_) throw DomainError("index tuple has the wrong length");
    for (auto i : idx) {
      if (i >= dim_) throw DomainError("tensor index out of range");
    }
  }

  std::uint32_t order_;
  std::uint32_t dim_;
  std::map<IndexTuple, double> entries_;
};

}  // namespace sos_sparse
