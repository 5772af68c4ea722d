#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sos_sparse/data/io.hpp"
#include "sos_sparse/error.hpp"
#include "sos_sparse/estimators/estimators.hpp"

namespace sos_sparse {

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct GeneratorSpec {
  // "gaussian" or "planted" (moment-matched law from the hardness section
  // along a k-sparse direction).
  std::string type = "gaussian";
  std::size_t m = 100;
  std::size_t d = 10;
  std::uint32_t k = 1;
  // Mean; when absent, mu_scale on the first k coordinates.
  std::optional<Eigen::VectorXd> mu;
  double mu_scale = 1.0;
  // Covariance; when absent, sigma_scale * I.
  std::optional<Eigen::MatrixXd> sigma;
  double sigma_scale = 1.0;

  bool operator==(const GeneratorSpec&) const = default;
};

struct AdversarySpec {
  // "none", "replace_random", "shift_attack" or "cluster".
  std::string type = "none";
  double eps = 0.0;
  double magnitude = 1e4;
  std::optional<Eigen::VectorXd> direction;
  std::optional<Eigen::VectorXd> point;

  bool operator==(const AdversarySpec&) const = default;
};

struct EstimatorSpec {
  // sos_sparse_mean, gaussian_sparse_mean, robust_sparse_gaussian_mean,
  // sample_mean, coord_median_truncate or net_trimmed_mean.
  std::string name = "sos_sparse_mean";
  // Defaults to the adversary's eps and the generator's k.
  std::optional<double> eps;
  std::optional<std::uint32_t> k;
  std::uint32_t t = 2;
  double M = 4.0;
  double gamma = 0.1;
  bool prefilter = true;
  double prefilter_c = 10.0;
  double rate_c = 5.0;
  double rough_c1 = 0.05;
  double rough_c2 = 10.0;
  double c_prime = 1.0;
  double c_slack = 100.0;
  std::string basis = "lifted";
  int net_iterations = 500;

  bool operator==(const EstimatorSpec&) const = default;
};

struct SolverSpec {
  double eq_tol = 1e-7;
  double psd_tol = 1e-6;
  int max_iters = 50000;
  int stall_window = 2000;
  double relaxation = 1.6;
  std::size_t max_matrix_dim = 5000;

  bool operator==(const SolverSpec&) const = default;
};

struct SqSpec {
  double d = 1e4;
  double k = 100;
  double c = 0.5;

  bool operator==(const SqSpec&) const = default;
};

struct HardnessSpec {
  // "moment_matched" or "three_moment".
  std::string kind = "moment_matched";
  std::uint32_t t = 4;
  double eps = 1e-4;
  double delta_c = 1.0 / 2000.0;
  SqSpec sq;

  bool operator==(const HardnessSpec&) const = default;
};

struct DiagnoseSpec {
  std::vector<std::string> items = {"tensor_distance"};
  std::uint32_t t = 2;
  // Sample sizes of the slope item; each point is a fresh clean draw.
  std::vector<std::size_t> m_grid = {100, 1000, 10000};

  bool operator==(const DiagnoseSpec&) const = default;
};

struct ScenarioConfig {
  GeneratorSpec generator;
  AdversarySpec adversary;
  EstimatorSpec estimator;
  SolverSpec solver;
  HardnessSpec hardness;
  DiagnoseSpec diagnose;
  std::vector<std::uint64_t> seeds = {0};
  std::string output = "out";
  // Nominal relaxation degree; 0 keeps the estimator default.
  std::uint32_t degree = 0;

  bool operator==(const ScenarioConfig&) const = default;
};

namespace detail {

inline nlohmann::json optional_vector(const std::optional<Eigen::VectorXd>& v) {
  return v ? vector_json(*v) : nlohmann::json(nullptr);
}

// Reads an object and rejects keys outside `allowed`.
class StrictObject {
 public:
  StrictObject(const nlohmann::json& j, std::string where, std::set<std::string> allowed)
      : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ConfigError(where_ + ": expected an object");
    for (const auto& [key, value] : j.items()) {
      if (!allowed.count(key)) throw ConfigError(where_ + ": unknown key '" + key + "'");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  const nlohmann::json& at(const std::string& key) const { return j_.at(key); }
  std::string path(const std::string& key) const { return where_ + "." + key; }

  template <class T>
  void get(const std::string& key, T& out) const {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(path(key) + ": wrong type");
    }
  }

  void get_vector(const std::string& key, std::optional<Eigen::VectorXd>& out) const {
    if (!has(key)) return;
    try {
      out = json_vector(j_.at(key));
    } catch (const std::exception&) {
      throw ConfigError(path(key) + ": expected a list of numbers");
    }
  }

 private:
  const nlohmann::json& j_;
  std::string where_;
};

}  // namespace detail

inline nlohmann::json to_json(const ScenarioConfig& c) {
  nlohmann::json j;
  j["generator"] = {{"type", c.generator.type},
                    {"m", c.generator.m},
                    {"d", c.generator.d},
                    {"k", c.generator.k},
                    {"mu", detail::optional_vector(c.generator.mu)},
                    {"mu_scale", c.generator.mu_scale},
                    {"sigma", c.generator.sigma ? matrix_json(*c.generator.sigma) : nlohmann::json(nullptr)},
                    {"sigma_scale", c.generator.sigma_scale}};
  j["adversary"] = {{"type", c.adversary.type},
                    {"eps", c.adversary.eps},
                    {"magnitude", c.adversary.magnitude},
                    {"direction", detail::optional_vector(c.adversary.direction)},
                    {"point", detail::optional_vector(c.adversary.point)}};
  const auto& e = c.estimator;
  j["estimator"] = {{"name", e.name},
                    {"eps", e.eps ? nlohmann::json(*e.eps) : nlohmann::json(nullptr)},
                    {"k", e.k ? nlohmann::json(*e.k) : nlohmann::json(nullptr)},
                    {"t", e.t},
                    {"M", e.M},
                    {"gamma", e.gamma},
                    {"prefilter", e.prefilter},
                    {"prefilter_c", e.prefilter_c},
                    {"rate_c", e.rate_c},
                    {"rough_c1", e.rough_c1},
                    {"rough_c2", e.rough_c2},
                    {"c_prime", e.c_prime},
                    {"c_slack", e.c_slack},
                    {"basis", e.basis},
                    {"net_iterations", e.net_iterations}};
  j["solver"] = {{"eq_tol", c.solver.eq_tol},
                 {"psd_tol", c.solver.psd_tol},
                 {"max_iters", c.solver.max_iters},
                 {"stall_window", c.solver.stall_window},
                 {"relaxation", c.solver.relaxation},
                 {"max_matrix_dim", c.solver.max_matrix_dim}};
  j["hardness"] = {{"kind", c.hardness.kind},
                   {"t", c.hardness.t},
                   {"eps", c.hardness.eps},
                   {"delta_c", c.hardness.delta_c},
                   {"sq", {{"d", c.hardness.sq.d}, {"k", c.hardness.sq.k}, {"c", c.hardness.sq.c}}}};
  j["diagnose"] = {{"items", c.diagnose.items}, {"t", c.diagnose.t}, {"m_grid", c.diagnose.m_grid}};
  j["seeds"] = c.seeds;
  j["output"] = c.output;
  j["degree"] = c.degree;
  return j;
}

inline void validate(const ScenarioConfig& c) {
  static const std::set<std::string> generators = {"gaussian", "planted"};
  static const std::set<std::string> adversaries = {"none", "replace_random", "shift_attack", "cluster"};
  static const std::set<std::string> estimators = {"sos_sparse_mean",   "gaussian_sparse_mean",
                                                   "robust_sparse_gaussian_mean", "sample_mean",
                                                   "coord_median_truncate", "net_trimmed_mean"};
  if (!generators.count(c.generator.type)) throw ConfigError("generator.type: unknown '" + c.generator.type + "'");
  if (c.generator.m == 0 || c.generator.d == 0) throw ConfigError("generator: m and d must be positive");
  if (c.generator.k < 1 || c.generator.k > c.generator.d) throw ConfigError("generator.k: need 1 <= k <= d");
  if (c.generator.mu && static_cast<std::size_t>(c.generator.mu->size()) != c.generator.d) {
    throw ConfigError("generator.mu: length differs from d");
  }
  if (c.generator.sigma && (static_cast<std::size_t>(c.generator.sigma->rows()) != c.generator.d ||
                            c.generator.sigma->cols() != c.generator.sigma->rows())) {
    throw ConfigError("generator.sigma: expected a d x d matrix");
  }
  if (!adversaries.count(c.adversary.type)) throw ConfigError("adversary.type: unknown '" + c.adversary.type + "'");
  auto check_eps = [](double eps, const std::string& where) {
    if (!(eps >= 0.0 && eps < 0.5)) {
      throw ConfigError(where + " = " + format_double(eps) +
                        " violates the contamination bound 0 <= eps < 1/2");
    }
  };
  check_eps(c.adversary.eps, "adversary.eps");
  if (c.estimator.eps) check_eps(*c.estimator.eps, "estimator.eps");
  if (c.adversary.type == "cluster" && !c.adversary.point) throw ConfigError("adversary.point: required for cluster");
  if (!estimators.count(c.estimator.name)) throw ConfigError("estimator.name: unknown '" + c.estimator.name + "'");
  try {
    parse_basis_mode(c.estimator.basis);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("estimator.basis: ") + e.what());
  }
  if (c.hardness.kind != "moment_matched" && c.hardness.kind != "three_moment") {
    throw ConfigError("hardness.kind: unknown '" + c.hardness.kind + "'");
  }
  if (c.seeds.empty()) throw ConfigError("seeds: at least one seed is required");
}

inline ScenarioConfig config_from_json(const nlohmann::json& j) {
  using detail::StrictObject;
  ScenarioConfig c;
  StrictObject top(j, "config",
                   {"generator", "adversary", "estimator", "solver", "hardness", "diagnose", "seeds", "output",
                    "degree"});
  if (top.has("generator")) {
    StrictObject g(top.at("generator"), "generator",
                   {"type", "m", "d", "k", "mu", "mu_scale", "sigma", "sigma_scale"});
    g.get("type", c.generator.type);
    g.get("m", c.generator.m);
    g.get("d", c.generator.d);
    g.get("k", c.generator.k);
    g.get_vector("mu", c.generator.mu);
    g.get("mu_scale", c.generator.mu_scale);
    if (g.has("sigma")) {
      try {
        c.generator.sigma = json_matrix(g.at("sigma"));
      } catch (const std::exception&) {
        throw ConfigError("generator.sigma: expected a list of rows");
      }
    }
    g.get("sigma_scale", c.generator.sigma_scale);
  }
  if (top.has("adversary")) {
    StrictObject a(top.at("adversary"), "adversary", {"type", "eps", "magnitude", "direction", "point"});
    a.get("type", c.adversary.type);
    a.get("eps", c.adversary.eps);
    a.get("magnitude", c.adversary.magnitude);
    a.get_vector("direction", c.adversary.direction);
    a.get_vector("point", c.adversary.point);
  }
  if (top.has("estimator")) {
    StrictObject e(top.at("estimator"), "estimator",
                   {"name", "eps", "k", "t", "M", "gamma", "prefilter", "prefilter_c", "rate_c", "rough_c1",
                    "rough_c2", "c_prime", "c_slack", "basis", "net_iterations"});
    auto& s = c.estimator;
    e.get("name", s.name);
    if (e.has("eps")) {
      double v = 0.0;
      e.get("eps", v);
      s.eps = v;
    }
    if (e.has("k")) {
      std::uint32_t v = 0;
      e.get("k", v);
      s.k = v;
    }
    e.get("t", s.t);
    e.get("M", s.M);
    e.get("gamma", s.gamma);
    e.get("prefilter", s.prefilter);
    e.get("prefilter_c", s.prefilter_c);
    e.get("rate_c", s.rate_c);
    e.get("rough_c1", s.rough_c1);
    e.get("rough_c2", s.rough_c2);
    e.get("c_prime", s.c_prime);
    e.get("c_slack", s.c_slack);
    e.get("basis", s.basis);
    e.get("net_iterations", s.net_iterations);
  }
  if (top.has("solver")) {
    StrictObject s(top.at("solver"), "solver",
                   {"eq_tol", "psd_tol", "max_iters", "stall_window", "relaxation", "max_matrix_dim"});
    s.get("eq_tol", c.solver.eq_tol);
    s.get("psd_tol", c.solver.psd_tol);
    s.get("max_iters", c.solver.max_iters);
    s.get("stall_window", c.solver.stall_window);
    s.get("relaxation", c.solver.relaxation);
    s.get("max_matrix_dim", c.solver.max_matrix_dim);
  }
  if (top.has("hardness")) {
    StrictObject h(top.at("hardness"), "hardness", {"kind", "t", "eps", "delta_c", "sq"});
    h.get("kind", c.hardness.kind);
    h.get("t", c.hardness.t);
    h.get("eps", c.hardness.eps);
    h.get("delta_c", c.hardness.delta_c);
    if (h.has("sq")) {
      StrictObject q(h.at("sq"), "hardness.sq", {"d", "k", "c"});
      q.get("d", c.hardness.sq.d);
      q.get("k", c.hardness.sq.k);
      q.get("c", c.hardness.sq.c);
    }
  }
  if (top.has("diagnose")) {
    StrictObject d(top.at("diagnose"), "diagnose", {"items", "t", "m_grid"});
    d.get("items", c.diagnose.items);
    d.get("t", c.diagnose.t);
    d.get("m_grid", c.diagnose.m_grid);
  }
  top.get("seeds", c.seeds);
  top.get("output", c.output);
  top.get("degree", c.degree);
  validate(c);
  return c;
}

inline ScenarioConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open config");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline std::string config_text(const ScenarioConfig& c) { return to_json(c).dump(2) + "\n"; }

inline EstimatorConfig estimator_config(const ScenarioConfig& c) {
  EstimatorConfig e;
  e.solver.eq_tol = c.solver.eq_tol;
  e.solver.psd_tol = c.solver.psd_tol;
  e.solver.max_iters = c.solver.max_iters;
  e.solver.stall_window = c.solver.stall_window;
  e.solver.relaxation = c.solver.relaxation;
  e.limits.max_matrix_dim = c.solver.max_matrix_dim;
  e.program.degree = c.degree;
  e.program.basis = parse_basis_mode(c.estimator.basis);
  e.program.c_slack = c.estimator.c_slack;
  e.prefilter = c.estimator.prefilter;
  e.prefilter_c = c.estimator.prefilter_c;
  e.rate_c = c.estimator.rate_c;
  e.rough_c1 = c.estimator.rough_c1;
  e.rough_c2 = c.estimator.rough_c2;
  e.lepskii_c_prime = c.estimator.c_prime;
  e.gamma = c.estimator.gamma;
  e.net_iterations = c.estimator.net_iterations;
  e.export_dir = c.output;
  return e;
}

}  // namespace sos_sparse
