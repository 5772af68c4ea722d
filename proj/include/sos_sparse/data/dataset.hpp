#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sos_sparse/error.hpp"

namespace sos_sparse {

struct GroundTruth {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  std::uint32_t k = 0;
};

struct Provenance {
  std::uint64_t seed = 0;
  std::string generator;
  std::string adversary = "none";
  double eps = 0.0;
};

// Rows of `samples` are the points. `original_rows` keeps the pre-corruption
// value of every replaced row, keyed by row index, for auditing.
struct Dataset {
  Eigen::MatrixXd samples;
  std::optional<std::vector<bool>> inlier_mask;
  std::optional<GroundTruth> truth;
  Provenance provenance;
  std::vector<std::pair<std::size_t, Eigen::VectorXd>> original_rows;

  std::size_t m() const { return static_cast<std::size_t>(samples.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(samples.cols()); }

  static Dataset from_matrix(Eigen::MatrixXd x) {
    Dataset out;
    out.samples = std::move(x);
    return out;
  }

  const GroundTruth& require_truth() const {
    if (!truth) throw MissingTruthError("dataset has no ground truth");
    return *truth;
  }

  Dataset subset(const std::vector<std::size_t>& rows) const {
    Dataset out;
    out.samples.resize(static_cast<Eigen::Index>(rows.size()), samples.cols());
    std::vector<bool> mask;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out.samples.row(static_cast<Eigen::Index>(r)) = samples.row(static_cast<Eigen::Index>(rows[r]));
      if (inlier_mask) mask.push_back((*inlier_mask)[rows[r]]);
    }
    if (inlier_mask) out.inlier_mask = std::move(mask);
    out.truth = truth;
    out.provenance = provenance;
    return out;
  }
};

}  // namespace sos_sparse
