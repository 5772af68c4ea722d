#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sos_sparse/cli/commands.hpp"

namespace {

using namespace sos_sparse;
using namespace sos_sparse::cli;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::uint32_t> degree;
  std::optional<std::string> format;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "scenario config (JSON)");
  sub->add_option("--seed", f.seed, "run a single seed instead of the config's seed list");
  sub->add_option("--out", f.out, "output path; stdout when omitted (gen: output directory)");
  sub->add_option("--degree", f.degree, "relaxation degree override");
  sub->add_option("--format", f.format, "output format; csv for diagnose, json otherwise")->check(CLI::IsMember({"json", "csv"}));
}

ScenarioConfig resolve(const Flags& f) {
  ScenarioConfig c = f.config.empty() ? ScenarioConfig{} : load_config(f.config);
  if (f.degree) c.degree = *f.degree;
  validate(c);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust sparse mean estimation via sum-of-squares relaxations"};
  app.require_subcommand(1);
  Flags f;
  std::vector<std::string> inputs;
  std::string items_csv;
  bool sq = false;

  auto* gen = app.add_subcommand("gen", "write a dataset CSV and sidecar per seed");
  add_common(gen, f);

  auto* est = app.add_subcommand("estimate", "run the configured estimator");
  add_common(est, f);
  est->add_option("datasets", inputs, "dataset CSV files; generated from the config when omitted");

  auto* diag = app.add_subcommand("diagnose", "measure diagnostics, one CSV row per (seed, item)");
  add_common(diag, f);
  diag->add_option("--items", items_csv, "comma-separated diagnostic items; the config's list when omitted");
  diag->add_option("datasets", inputs, "dataset CSV files; generated from the config when omitted");

  auto* hard = app.add_subcommand("hardness", "build and validate a hard instance");
  add_common(hard, f);
  hard->add_flag("--sq-bounds", sq, "also print the chi-squared distance and SQ bounds");

  auto* sdp = app.add_subcommand("solve-sdp", "solve an SDPA problem and print the blocks");
  add_common(sdp, f);
  sdp->add_option("problem", inputs, "SDPA file")->required()->expected(1);

  auto* cert = app.add_subcommand("verify-cert", "check an SoS certificate file");
  add_common(cert, f);
  cert->add_option("certificate", inputs, "certificate JSON")->required()->expected(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  CommandOptions o{f.seed, f.out, f.format.value_or(diag->parsed() ? "csv" : "json")};
  try {
    if (cert->parsed()) return cmd_verify_cert(inputs.at(0), o);
    ScenarioConfig c = resolve(f);
    if (gen->parsed()) return cmd_gen(c, o);
    if (est->parsed()) return cmd_estimate(c, inputs, o);
    if (diag->parsed()) {
      std::vector<std::string> items;
      std::stringstream ss(items_csv);
      for (std::string it; std::getline(ss, it, ',');) {
        if (!it.empty()) items.push_back(it);
      }
      return cmd_diagnose(c, inputs, items, o);
    }
    if (hard->parsed()) return cmd_hardness(c, sq, o);
    if (sdp->parsed()) return cmd_solve_sdp(c, inputs.at(0), o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kConfig;
}
