#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "sos_sparse/cli/scenario.hpp"
#include "sos_sparse/data/diagnostics.hpp"
#include "sos_sparse/data/generate.hpp"
#include "sos_sparse/data/io.hpp"
#include "sos_sparse/estimators/estimators.hpp"
#include "sos_sparse/hardness/hardness.hpp"
#include "sos_sparse/sos/certificate.hpp"
#include "sos_sparse/sos/sdpa.hpp"
#include "sos_sparse/sos/solver.hpp"

namespace sos_sparse::cli {

enum ExitCode : int {
  kOk = 0,
  kRejected = 1,
  kConfig = 2,
  kInconclusive = 3,
  kInfeasible = 4,
  kSize = 5,
  kConstructionFailed = 6,
  kMissingTruth = 7,
};

inline int exit_code_for(SolveStatus s) {
  switch (s) {
    case SolveStatus::Feasible:
      return kOk;
    case SolveStatus::Infeasible:
      return kInfeasible;
    case SolveStatus::Inconclusive:
      return kInconclusive;
  }
  return kInconclusive;
}

// Maps a library exception onto the documented exit codes.
inline int exit_code_for(const std::exception& e) {
  if (auto* f = dynamic_cast<const SolveFailure*>(&e)) return exit_code_for(f->report().status);
  if (dynamic_cast<const SizeError*>(&e)) return kSize;
  if (dynamic_cast<const ConstructionFailed*>(&e)) return kConstructionFailed;
  if (dynamic_cast<const MissingTruthError*>(&e)) return kMissingTruth;
  return kConfig;
}

// Worker count: hardware concurrency, capped by SOS_SPARSE_THREADS.
inline std::size_t worker_count(std::size_t tasks) {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SOS_SPARSE_THREADS")) {
    char* end = nullptr;
    long cap = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || cap < 1) {
      throw ConfigError(std::string("SOS_SPARSE_THREADS must be a positive integer, got '") + env + "'");
    }
    n = std::min(n, static_cast<std::size_t>(cap));
  }
  return std::max<std::size_t>(1, std::min(n, tasks));
}

// Runs task(i) for i < n on a small pool; results are slotted by index.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task) {
  std::size_t workers = worker_count(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) task(i);
    });
  }
  for (auto& t : pool) t.join();
}

inline void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  out << text;
  if (!out) throw IoError(path, "write failed");
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Eigen::VectorXd planted_direction(std::size_t d, std::uint32_t k) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  v.head(k).setConstant(1.0 / std::sqrt(static_cast<double>(k)));
  return v;
}

inline Univariate hardness_law(const HardnessSpec& h) {
  if (h.kind == "three_moment") return build_three_moment_instance(h.eps).law();
  return build_moment_matched_instance(h.t, h.eps, h.delta_c).mixture.law();
}

inline Adversary make_adversary(const AdversarySpec& a) {
  if (a.type == "shift_attack") return Adversary::shift(a.magnitude, a.direction);
  if (a.type == "cluster") return Adversary::cluster(*a.point);
  return Adversary::replace_random();
}

// Clean draw from the generator, then the adversary (same seed).
inline Dataset generate_dataset(const ScenarioConfig& c, std::uint64_t seed, std::optional<std::size_t> m = {}) {
  const auto& g = c.generator;
  std::size_t n = m.value_or(g.m);
  Dataset data;
  if (g.type == "planted") {
    data = sample_planted(hardness_law(c.hardness), planted_direction(g.d, g.k), n, seed);
  } else {
    Eigen::VectorXd mu = g.mu ? *g.mu : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.d));
    if (!g.mu) mu.head(g.k).setConstant(g.mu_scale);
    Eigen::MatrixXd sigma =
        g.sigma ? *g.sigma : Eigen::MatrixXd(g.sigma_scale * Eigen::MatrixXd::Identity(mu.size(), mu.size()));
    data = sample_gaussian(mu, sigma, n, seed, g.k);
  }
  if (c.adversary.type != "none" && c.adversary.eps > 0.0) {
    data = corrupt(data, c.adversary.eps, make_adversary(c.adversary), seed);
  }
  return data;
}

inline std::vector<std::uint64_t> seed_list(const ScenarioConfig& c, std::optional<std::uint64_t> seed) {
  return seed ? std::vector<std::uint64_t>{*seed} : c.seeds;
}

inline std::string dataset_file(const std::string& dir, std::uint64_t seed) {
  return (std::filesystem::path(dir) / ("data_seed" + std::to_string(seed) + ".csv")).string();
}

struct CommandOptions {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "json";
};

// Writes one CSV + sidecar per seed and prints the written paths.
inline int cmd_gen(const ScenarioConfig& c, const CommandOptions& o) {
  const std::string dir = o.out.empty() ? c.output : o.out;
  auto seeds = seed_list(c, o.seed);
  std::vector<Dataset> out(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) { out[i] = generate_dataset(c, seeds[i]); });
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    std::string path = dataset_file(dir, seeds[i]);
    write_dataset(out[i], path);
    std::cout << path << "\n";
  }
  return kOk;
}

inline nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

inline nlohmann::json solver_json(const SolverReport& r) {
  return {{"status", to_string(r.status)},
          {"iters", r.iterations},
          {"residuals", {{"max_eq", r.max_eq_residual}, {"min_eig", r.min_eigenvalue}}},
          {"message", r.message}};
}

struct EstimateOutcome {
  nlohmann::json json;
  int code = kOk;
  double seconds = 0.0;
};

inline EstimateResult run_estimator(const Dataset& data, const ScenarioConfig& c, std::uint64_t seed) {
  const auto& e = c.estimator;
  double eps = e.eps.value_or(data.provenance.eps > 0.0 ? data.provenance.eps : c.adversary.eps);
  std::uint32_t k = e.k.value_or(data.truth ? data.truth->k : c.generator.k);
  EstimatorConfig cfg = estimator_config(c);
  if (e.name == "sos_sparse_mean") return sos_sparse_mean(data, eps, k, e.M, e.t, cfg);
  if (e.name == "gaussian_sparse_mean") return gaussian_sparse_mean(data, eps, k, cfg);
  if (e.name == "robust_sparse_gaussian_mean") return robust_sparse_gaussian_mean(data, eps, k, e.gamma, seed, cfg);
  return baseline_estimators(data, eps, k, parse_baseline(e.name), cfg);
}

inline EstimateOutcome estimate_one(const Dataset& data, const ScenarioConfig& c, std::uint64_t seed) {
  EstimateOutcome out;
  nlohmann::json j;
  j["seed"] = seed;
  try {
    EstimateResult r = run_estimator(data, c, seed);
    const auto& dg = r.diagnostics;
    j["estimate"] = vector_json(r.estimate);
    j["truncated_estimate"] = vector_json(r.truncated_estimate);
    j["err_2k"] = r.errors_vs_truth ? nlohmann::json(r.errors_vs_truth->norm_2k) : nlohmann::json(nullptr);
    j["err_l2_truncated"] =
        r.errors_vs_truth ? nlohmann::json(r.errors_vs_truth->truncated_l2) : nlohmann::json(nullptr);
    j["degree_used"] = {{"relaxation", dg.relaxation_degree},
                        {"nominal", dg.nominal_degree},
                        {"deviation", dg.degree_deviation}};
    // Baselines run no relaxation and report no solver.
    j["solver"] = dg.relaxation_degree > 0 ? solver_json(dg.solver) : nlohmann::json(nullptr);
    j["diagnostics"] = {{"method", dg.method},
                        {"prefilter_removed", dg.prefilter_removed},
                        {"prefilter_radius", finite_or_null(dg.prefilter_radius)},
                        {"eps_used", dg.eps_used},
                        {"budget_fallback", dg.budget_fallback},
                        {"black_box_calls", dg.black_box_calls},
                        {"flagged", dg.flagged},
                        {"note", dg.note},
                        {"constants", dg.constants}};
    out.seconds = dg.wall_seconds;
  } catch (const ProgramTooLarge& e) {
    j["error"] = e.what();
    j["export_path"] = e.export_path();
    out.code = kSize;
  } catch (const SolveFailure& e) {
    j["error"] = e.what();
    j["solver"] = solver_json(e.report());
    out.code = exit_code_for(e);
  } catch (const ConfigError&) {
    throw;
  } catch (const IoError&) {
    throw;
  } catch (const Error& e) {
    j["error"] = e.what();
    out.code = exit_code_for(e);
  }
  j["config_echo"] = to_json(c);
  out.json = std::move(j);
  return out;
}

inline const char* kEstimateCsvHeader = "seed,status,err_2k,err_l2_truncated,relaxation_degree,estimate\n";

inline std::string estimate_csv_row(const nlohmann::json& j) {
  std::ostringstream row;
  auto num = [](const nlohmann::json& v) { return v.is_number() ? format_double(v.get<double>()) : std::string(); };
  row << j["seed"].get<std::uint64_t>() << ",";
  if (j.contains("error")) {
    row << "error,";
  } else {
    row << (j["solver"].is_null() ? std::string("ok") : j["solver"]["status"].get<std::string>()) << ",";
  }
  row << (j.contains("err_2k") ? num(j["err_2k"]) : "") << ",";
  row << (j.contains("err_l2_truncated") ? num(j["err_l2_truncated"]) : "") << ",";
  row << (j.contains("degree_used") ? std::to_string(j["degree_used"]["relaxation"].get<int>()) : "") << ",";
  if (j.contains("estimate")) {
    std::string sep;
    for (const auto& v : j["estimate"]) {
      row << sep << format_double(v.get<double>());
      sep = ";";
    }
  }
  row << "\n";
  return row.str();
}

// Estimates on the given dataset files, or on freshly generated data for
// every configured seed when no file is given.
inline int cmd_estimate(const ScenarioConfig& c, const std::vector<std::string>& paths, const CommandOptions& o) {
  std::vector<Dataset> data;
  std::vector<std::uint64_t> seeds;
  if (paths.empty()) {
    seeds = seed_list(c, o.seed);
    data.resize(seeds.size());
    for (std::size_t i = 0; i < seeds.size(); ++i) data[i] = generate_dataset(c, seeds[i]);
  } else {
    for (const auto& p : paths) {
      data.push_back(read_dataset(p));
      seeds.push_back(o.seed.value_or(data.back().provenance.seed));
    }
  }
  std::vector<EstimateOutcome> results(data.size());
  parallel_for(data.size(), [&](std::size_t i) { results[i] = estimate_one(data[i], c, seeds[i]); });
  int code = kOk;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (code == kOk) code = results[i].code;
    std::cerr << "seed " << seeds[i] << ": " << results[i].seconds << " s\n";
    if (results[i].json.contains("export_path")) {
      std::cerr << "program exported to " << results[i].json["export_path"].get<std::string>() << "\n";
    }
  }
  std::string text;
  if (o.format == "csv") {
    text = kEstimateCsvHeader;
    for (const auto& r : results) text += estimate_csv_row(r.json);
  } else if (results.size() == 1) {
    text = results[0].json.dump(2) + "\n";
  } else {
    nlohmann::json arr = nlohmann::json::array();
    for (auto& r : results) arr.push_back(std::move(r.json));
    text = arr.dump(2) + "\n";
  }
  write_text(o.out, text);
  return code;
}

inline const std::vector<std::string>& diagnose_items() {
  static const std::vector<std::string> items = {"tensor_distance", "certificate", "slope",
                                                 "resilience1",     "resilience2", "resilience3",
                                                 "resilience4",     "resilience5", "resilience6"};
  return items;
}

inline void check_items(const std::vector<std::string>& items) {
  const auto& known = diagnose_items();
  for (const auto& it : items) {
    if (std::find(known.begin(), known.end(), it) == known.end()) {
      throw ConfigError("unknown diagnostic item '" + it + "'");
    }
  }
}

inline double diagnose_value(const std::string& item, const Dataset& data, const ScenarioConfig& c,
                             std::uint64_t seed) {
  const std::uint32_t t = c.diagnose.t;
  const std::uint32_t k = c.estimator.k.value_or(data.truth ? data.truth->k : c.generator.k);
  if (item == "tensor_distance") return linf_tensor_distance(data, t);
  if (item == "certificate") {
    return sparse_moment_certificate(empirical_moment_tensor(data, t, TensorCenter::Empirical), k);
  }
  if (item == "slope") {
    ScenarioConfig clean = c;
    clean.adversary.type = "none";
    std::vector<double> ms, ds;
    for (std::size_t m : c.diagnose.m_grid) {
      ms.push_back(static_cast<double>(m));
      ds.push_back(linf_tensor_distance(generate_dataset(clean, seed, m), t));
    }
    return loglog_slope(ms, ds);
  }
  ResilienceOptions opts;
  opts.eps = data.provenance.eps;
  opts.items = {item.back() - '0'};
  opts.seed = seed;
  auto rep = resilience_check(data, ResilienceWeights::ones(data.m()), k, opts);
  return rep.items.at(0).ratio;
}

// One row per (seed, item): seed,item,value.
inline int cmd_diagnose(const ScenarioConfig& c, const std::vector<std::string>& paths,
                        const std::vector<std::string>& items_override, const CommandOptions& o) {
  std::vector<std::string> items = items_override.empty() ? c.diagnose.items : items_override;
  check_items(items);
  std::vector<Dataset> data;
  std::vector<std::uint64_t> seeds;
  if (paths.empty()) {
    for (auto s : seed_list(c, o.seed)) {
      seeds.push_back(s);
      data.push_back(generate_dataset(c, s));
    }
  } else {
    for (const auto& p : paths) {
      data.push_back(read_dataset(p));
      seeds.push_back(o.seed.value_or(data.back().provenance.seed));
    }
  }
  std::vector<std::vector<double>> values(data.size(), std::vector<double>(items.size()));
  parallel_for(data.size(), [&](std::size_t i) {
    for (std::size_t j = 0; j < items.size(); ++j) values[i][j] = diagnose_value(items[j], data[i], c, seeds[i]);
  });
  std::string text;
  if (o.format == "json") {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < data.size(); ++i) {
      for (std::size_t j = 0; j < items.size(); ++j) {
        arr.push_back({{"seed", seeds[i]}, {"item", items[j]}, {"value", values[i][j]}});
      }
    }
    text = arr.dump(2) + "\n";
  } else {
    text = "seed,item,value\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
      for (std::size_t j = 0; j < items.size(); ++j) {
        text += std::to_string(seeds[i]) + "," + items[j] + "," + format_double(values[i][j]) + "\n";
      }
    }
  }
  write_text(o.out, text);
  return kOk;
}

inline nlohmann::json sq_json(const SqBounds& b) {
  return {{"query_lower_bound", b.query_lower_bound},
          {"log10_query_lower_bound", b.log10_query_lower_bound},
          {"dimension_factor", b.dimension_factor},
          {"tolerance_bound", b.tolerance_bound},
          {"note", b.note}};
}

inline int cmd_hardness(const ScenarioConfig& c, bool with_sq, const CommandOptions& o) {
  const auto& h = c.hardness;
  nlohmann::json j;
  Univariate law;
  double matched = 0.0;
  if (h.kind == "three_moment") {
    auto inst = build_three_moment_instance(h.eps);
    j["instance"] = instance_json(inst);
    law = inst.law();
    matched = 3.0;
  } else {
    auto inst = build_moment_matched_instance(h.t, h.eps, h.delta_c);
    j["instance"] = instance_json(inst);
    law = inst.mixture.law();
    matched = h.t;
  }
  if (with_sq) {
    try {
      auto chi = chi_squared_vs_gaussian(law);
      j["chi_squared"] = {{"value", chi.value}, {"quadrature_error", chi.quadrature_error}};
      j["sq_bounds"] = sq_json(sq_bounds(h.sq.d, h.sq.k, h.sq.c, matched, std::max(chi.value, 1e-300)));
    } catch (const DivergenceError& e) {
      j["chi_squared"] = {{"value", nullptr}, {"divergent", e.what()}};
      SqBounds b = sq_bounds(h.sq.d, h.sq.k, h.sq.c, matched, 1.0);
      nlohmann::json sj = sq_json(b);
      sj["tolerance_bound"] = nullptr;
      sj["tolerance_bound_per_sqrt_chi2"] = b.tolerance_bound;
      j["sq_bounds"] = sj;
    }
  }
  write_text(o.out, j.dump(2) + "\n");
  return kOk;
}

inline int cmd_solve_sdp(const ScenarioConfig& c, const std::string& path, const CommandOptions& o) {
  SdpProblem p = parse_sdpa(read_text(path));
  EstimatorConfig ec = estimator_config(c);
  SdpSolution sol = solve_sdp(p, ec.solver);
  nlohmann::json j;
  j["status"] = to_string(sol.report.status);
  j["iterations"] = sol.report.iterations;
  j["max_eq_residual"] = sol.report.max_eq_residual;
  j["min_eigenvalue"] = sol.report.min_eigenvalue;
  j["message"] = sol.report.message;
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : sol.blocks) blocks.push_back(matrix_json(b));
  j["blocks"] = blocks;
  write_text(o.out, j.dump(2) + "\n");
  return exit_code_for(sol.report.status);
}

// Polynomials in certificate files: [[coef, [[var, exp], ...]], ...].
inline Polynomial polynomial_from_json(const nlohmann::json& j) {
  Polynomial p;
  for (const auto& term : j) {
    if (!term.is_array() || term.size() != 2) throw ConfigError("polynomial term must be [coef, factors]");
    std::vector<std::pair<VarId, std::uint32_t>> f;
    for (const auto& ve : term[1]) f.emplace_back(ve.at(0).get<VarId>(), ve.at(1).get<std::uint32_t>());
    Monomial m;
    for (const auto& [v, e] : f) m = m * Monomial::var(v, e);
    p.add_term(m, term[0].get<double>());
  }
  return p;
}

inline nlohmann::json polynomial_json(const Polynomial& p) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [m, c] : p.terms()) {
    nlohmann::json f = nlohmann::json::array();
    for (const auto& [v, e] : m.factors()) f.push_back({v, e});
    out.push_back({c, f});
  }
  return out;
}

inline Monomial monomial_from_json(const nlohmann::json& j) {
  Monomial m;
  for (const auto& ve : j) m = m * Monomial::var(ve.at(0).get<VarId>(), ve.at(1).get<std::uint32_t>());
  return m;
}

struct CertificateFile {
  Polynomial target;
  ConstraintSystem axioms;
  SosCertificate certificate;
  double tol = 1e-9;
};

inline CertificateFile certificate_from_json(const nlohmann::json& j) {
  detail::StrictObject top(j, "certificate file", {"target", "equalities", "inequalities", "certificate", "tol"});
  CertificateFile f;
  try {
    f.target = polynomial_from_json(top.at("target"));
    if (top.has("equalities")) {
      for (const auto& p : top.at("equalities")) f.axioms.equalities.push_back(polynomial_from_json(p));
    }
    if (top.has("inequalities")) {
      for (const auto& p : top.at("inequalities")) f.axioms.inequalities.push_back(polynomial_from_json(p));
    }
    top.get("tol", f.tol);
    detail::StrictObject cert(top.at("certificate"), "certificate", {"multipliers", "squares"});
    if (cert.has("multipliers")) {
      for (const auto& p : cert.at("multipliers")) f.certificate.multipliers.push_back(polynomial_from_json(p));
    }
    if (cert.has("squares")) {
      for (const auto& s : cert.at("squares")) {
        detail::StrictObject sq(s, "certificate.squares", {"basis", "gram", "inequality"});
        GramTerm g;
        for (const auto& m : sq.at("basis")) g.basis.push_back(monomial_from_json(m));
        g.gram = json_matrix(sq.at("gram"));
        if (sq.has("inequality")) g.inequality = sq.at("inequality").get<std::size_t>();
        if (static_cast<std::size_t>(g.gram.rows()) != g.basis.size() || g.gram.rows() != g.gram.cols()) {
          throw ConfigError("certificate.squares: Gram size differs from the basis size");
        }
        f.certificate.squares.push_back(std::move(g));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed certificate file: ") + e.what());
  }
  return f;
}

inline nlohmann::json certificate_json(const CertificateFile& f) {
  nlohmann::json eqs = nlohmann::json::array(), ineqs = nlohmann::json::array();
  for (const auto& p : f.axioms.equalities) eqs.push_back(polynomial_json(p));
  for (const auto& p : f.axioms.inequalities) ineqs.push_back(polynomial_json(p));
  nlohmann::json mults = nlohmann::json::array(), squares = nlohmann::json::array();
  for (const auto& p : f.certificate.multipliers) mults.push_back(polynomial_json(p));
  for (const auto& g : f.certificate.squares) {
    nlohmann::json basis = nlohmann::json::array();
    for (const auto& m : g.basis) {
      nlohmann::json fac = nlohmann::json::array();
      for (const auto& [v, e] : m.factors()) fac.push_back({v, e});
      basis.push_back(fac);
    }
    squares.push_back({{"basis", basis},
                       {"gram", matrix_json(g.gram)},
                       {"inequality", g.inequality ? nlohmann::json(*g.inequality) : nlohmann::json(nullptr)}});
  }
  return {{"target", polynomial_json(f.target)},
          {"equalities", eqs},
          {"inequalities", ineqs},
          {"certificate", {{"multipliers", mults}, {"squares", squares}}},
          {"tol", f.tol}};
}

inline int cmd_verify_cert(const std::string& path, const CommandOptions& o) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": not valid JSON: " + e.what());
  }
  CertificateFile f = certificate_from_json(j);
  CertificateCheck check = verify_sos_certificate(f.certificate, f.target, f.axioms, f.tol);
  nlohmann::json r = {{"verdict", to_string(check.verdict)},
                      {"max_mismatch", check.max_mismatch},
                      {"min_eigenvalue", finite_or_null(check.min_eigenvalue)},
                      {"detail", check.detail}};
  write_text(o.out, r.dump(2) + "\n");
  return check.accepted() ? kOk : kRejected;
}

}  // namespace sos_sparse::cli
