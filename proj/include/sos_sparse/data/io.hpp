#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sos_sparse/data/dataset.hpp"
#include "sos_sparse/error.hpp"
#include "sos_sparse/sos/sdpa.hpp"

namespace sos_sparse {

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what) : Error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

inline std::string sidecar_path(const std::string& csv_path) { return csv_path + ".json"; }

inline nlohmann::json vector_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(vector_json(m.row(i).transpose()));
  return out;
}

inline Eigen::VectorXd json_vector(const nlohmann::json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

inline Eigen::MatrixXd json_matrix(const nlohmann::json& j) {
  if (j.empty()) return Eigen::MatrixXd();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j[0].size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].size() != j[0].size()) throw DomainError("ragged matrix in JSON");
    m.row(static_cast<Eigen::Index>(i)) = json_vector(j[i]).transpose();
  }
  return m;
}

inline std::string dataset_csv(const Dataset& data) {
  std::ostringstream os;
  for (Eigen::Index i = 0; i < data.samples.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.samples.cols(); ++j) {
      os << (j ? "," : "") << format_double(data.samples(i, j));
    }
    os << '\n';
  }
  return os.str();
}

inline nlohmann::json dataset_sidecar(const Dataset& data) {
  nlohmann::json j;
  j["m"] = data.m();
  j["d"] = data.d();
  j["seed"] = data.provenance.seed;
  j["eps"] = data.provenance.eps;
  j["generator"] = data.provenance.generator;
  j["adversary"] = data.provenance.adversary;
  if (data.truth) {
    j["truth"] = {{"mu", vector_json(data.truth->mu)},
                  {"sigma", matrix_json(data.truth->sigma)},
                  {"k", data.truth->k}};
  } else {
    j["truth"] = nullptr;
  }
  if (data.inlier_mask) {
    j["mask"] = *data.inlier_mask;
  } else {
    j["mask"] = nullptr;
  }
  nlohmann::json orig = nlohmann::json::array();
  for (const auto& [r, v] : data.original_rows) orig.push_back({{"row", r}, {"values", vector_json(v)}});
  j["original_rows"] = orig;
  return j;
}

inline void write_dataset(const Dataset& data, const std::string& csv_path) {
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw IoError(csv_path, "cannot open for writing");
  csv << dataset_csv(data);
  std::ofstream side(sidecar_path(csv_path), std::ios::binary);
  if (!side) throw IoError(sidecar_path(csv_path), "cannot open for writing");
  side << dataset_sidecar(data).dump(2) << '\n';
  if (!csv || !side) throw IoError(csv_path, "write failed");
}

inline Eigen::MatrixXd parse_csv_matrix(const std::string& text, const std::string& path = "<memory>") {
  std::vector<std::vector<double>> rows;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      auto b = cell.find_first_not_of(" \t");
      auto e = cell.find_last_not_of(" \t");
      std::string trimmed = b == std::string::npos ? "" : cell.substr(b, e - b + 1);
      double v = 0.0;
      if (!parse_double(trimmed, v)) {
        throw IoError(path, "line " + std::to_string(lineno) + ": malformed number '" + trimmed + "'");
      }
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError(path, "line " + std::to_string(lineno) + ": wrong number of columns");
    }
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.empty() ? 0 : rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

inline void apply_sidecar(Dataset& data, const nlohmann::json& j, const std::string& path) {
  try {
    if (j.at("m").get<std::size_t>() != data.m() || j.at("d").get<std::size_t>() != data.d()) {
      throw IoError(path, "sidecar shape does not match the CSV");
    }
    data.provenance.seed = j.at("seed").get<std::uint64_t>();
    data.provenance.eps = j.at("eps").get<double>();
    data.provenance.generator = j.at("generator").get<std::string>();
    data.provenance.adversary = j.at("adversary").get<std::string>();
    if (!j.at("truth").is_null()) {
      const auto& t = j.at("truth");
      data.truth = GroundTruth{json_vector(t.at("mu")), json_matrix(t.at("sigma")), t.at("k").get<std::uint32_t>()};
    }
    if (!j.at("mask").is_null()) {
      data.inlier_mask = j.at("mask").get<std::vector<bool>>();
      if (data.inlier_mask->size() != data.m()) throw IoError(path, "mask length does not match m");
    }
    if (j.contains("original_rows")) {
      for (const auto& o : j.at("original_rows")) {
        data.original_rows.emplace_back(o.at("row").get<std::size_t>(), json_vector(o.at("values")));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path, std::string("malformed sidecar: ") + e.what());
  }
}

// Reads the CSV and, when present, its sidecar.
inline Dataset read_dataset(const std::string& csv_path) {
  std::ifstream csv(csv_path, std::ios::binary);
  if (!csv) throw IoError(csv_path, "cannot open for reading");
  std::stringstream buf;
  buf << csv.rdbuf();
  Dataset data = Dataset::from_matrix(parse_csv_matrix(buf.str(), csv_path));
  std::ifstream side(sidecar_path(csv_path), std::ios::binary);
  if (side) {
    nlohmann::json j;
    try {
      side >> j;
    } catch (const nlohmann::json::exception& e) {
      throw IoError(sidecar_path(csv_path), std::string("malformed JSON: ") + e.what());
    }
    apply_sidecar(data, j, sidecar_path(csv_path));
  }
  return data;
}

}  // namespace sos_sparse
