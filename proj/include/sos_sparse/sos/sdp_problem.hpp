#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <tuple>
#include <vector>

#include "sos_sparse/error.hpp"

namespace sos_sparse {

// One coefficient of a symmetric block matrix, addressed on or above the
// diagonal (i <= j, zero-based). The matrix has this value at both (i, j)
// and (j, i), so <F, Y> picks up 2 * value * Y(i, j) off the diagonal.
struct SdpEntry {
  std::uint32_t block = 0;
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  double value = 0.0;

  bool operator==(const SdpEntry&) const = default;
};

struct SdpConstraint {
  std::vector<SdpEntry> entries;
  double rhs = 0.0;

  bool operator==(const SdpConstraint&) const = default;
};

// Block-diagonal SDP in the form
//   maximize <F0, Y>  subject to  <F_i, Y> = b_i,  Y psd,
// where diagonal blocks (negative size) are constrained entry-wise
// nonnegative. `objective` holds F0.
struct SdpProblem {
  std::vector<int> block_sizes;
  std::vector<SdpConstraint> constraints;
  std::vector<SdpEntry> objective;

  bool operator==(const SdpProblem&) const = default;

  std::uint32_t block_dim(std::uint32_t b) const {
    return static_cast<std::uint32_t>(std::abs(block_sizes.at(b)));
  }
  bool is_diagonal(std::uint32_t b) const { return block_sizes.at(b) < 0; }

  void check_entry(const SdpEntry& e) const {
    if (e.block >= block_sizes.size()) throw DomainError("entry references a missing block");
    std::uint32_t n = block_dim(e.block);
    if (e.i > e.j) throw DomainError("entry below the diagonal");
    if (e.j >= n) throw DomainError("entry index out of range");
    if (is_diagonal(e.block) && e.i != e.j) {
      throw DomainError("off-diagonal entry in a diagonal block");
    }
  }

  void validate() const {
    for (int s : block_sizes) {
      if (s == 0) throw DomainError("empty block");
    }
    for (const auto& e : objective) check_entry(e);
    for (const auto& c : constraints) {
      for (const auto& e : c.entries) check_entry(e);
    }
  }
};

// Sorts entries by (block, i, j), merges duplicates and drops zeros.
inline std::vector<SdpEntry> canonical_entries(std::vector<SdpEntry> entries) {
  std::sort(entries.begin(), entries.end(), [](const SdpEntry& a, const SdpEntry& b) {
    return std::tie(a.block, a.i, a.j) < std::tie(b.block, b.i, b.j);
  });
  std::vector<SdpEntry> out;
  for (const auto& e : entries) {
    if (!out.empty() && out.back().block == e.block && out.back().i == e.i &&
        out.back().j == e.j) {
      out.back().value += e.value;
    } else {
      out.push_back(e);
    }
  }
  std::erase_if(out, [](const SdpEntry& e) { return e.value == 0.0; });
  return out;
}

}  // namespace sos_sparse
