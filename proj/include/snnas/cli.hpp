#pragma once

// Command-line front end. Exit codes: 0 success, 1 usage/config/input error,
// 2 no feasible architecture.

#include <array>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "snnas/batch.hpp"
#include "snnas/config.hpp"
#include "snnas/report.hpp"
#include "snnas/search.hpp"

namespace snnas::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInfeasible = 2;

inline CellConfig parse_cell(const std::string& text) {
  std::array<int, kCellEdges> codes{};
  std::stringstream ss(text);
  std::string tok;
  int n = 0;
  while (std::getline(ss, tok, ',')) {
    if (n >= kCellEdges) throw std::invalid_argument("cell needs exactly 6 codes: " + text);
    std::size_t used = 0;
    codes[n++] = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument("bad operation code '" + tok + "'");
  }
  if (n != kCellEdges) throw std::invalid_argument("cell needs exactly 6 codes: " + text);
  return CellConfig::from_codes(codes);
}

struct Args {
  std::string config_path;
  std::string batch_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> bits;
  std::optional<int> workers;
  bool trace = false;
  std::string cell_a;
  std::string cell_b;
  std::optional<double> sparsity;
  std::uint32_t samples = 16;
  std::uint32_t channels = 3;
  std::uint32_t height = 32;
  std::uint32_t width = 32;
};

inline RunConfig resolve_config(const Args& a) {
  if (a.config_path.empty()) throw ConfigError("--config is required");
  RunConfig cfg = load_config(a.config_path);
  if (a.seed) cfg.problem.run_seed = *a.seed;
  if (a.bits) {
    cfg.problem.quant.bit_w = *a.bits;
    try {
      cfg.problem.quant.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("--bits: ") + e.what());
    }
  }
  if (a.workers) cfg.workers = *a.workers;
  if (a.trace) cfg.trace = true;
  if (!a.batch_path.empty()) cfg.batch_path = a.batch_path;
  if (!a.out_path.empty()) cfg.output_path = a.out_path;
  return cfg;
}

inline int cmd_search(const Args& a, std::ostream& err) {
  const RunConfig cfg = resolve_config(a);
  const Batch batch = load_batch(cfg.batch_path);
  try {
    const SearchResult res = hw_aware_search(cfg.problem, batch, {cfg.workers, cfg.trace});
    emit_report(search_report(res, cfg, batch), cfg.output_path);
    return kExitOk;
  } catch (const NoFeasibleArchitecture& e) {
    emit_report(infeasible_report(e, cfg, batch), cfg.output_path);
    err << "error: " << e.what() << "\n";
    return kExitInfeasible;
  }
}

inline int cmd_candidate(const Args& a, bool with_score) {
  const RunConfig cfg = resolve_config(a);
  const CellConfig ca = parse_cell(a.cell_a);
  const CellConfig cb = parse_cell(a.cell_b);
  // The batch fixes the input shape even when sparsity is assumed.
  const Batch batch = load_batch(cfg.batch_path);
  const auto& prob = cfg.problem;
  CandidateEvaluation ev;
  if (!with_score && a.sparsity) {
    if (!(*a.sparsity >= 0.0 && *a.sparsity <= 1.0)) throw std::invalid_argument("--sparsity must be in [0, 1]");
    const NetworkArch arch = build_candidate(ca, cb, prob, batch);
    const std::vector<double> s(arch.layers.size(), *a.sparsity);
    ev.report = evaluate_costs(arch, prob.hw, prob.quant, prob.lif, s);
  } else {
    ev = score_candidate(ca, cb, prob, batch);
  }
  emit_report(candidate_report(with_score ? "score" : "cost", ca, cb, ev, cfg, &batch, with_score), cfg.output_path);
  return kExitOk;
}

inline int cmd_gen_batch(const Args& a) {
  if (a.out_path.empty()) throw ConfigError("gen-batch needs --out");
  const Batch b = gen_synthetic_batch(a.samples, a.channels, a.height, a.width, a.seed.value_or(1));
  save_batch(b, a.out_path);
  return kExitOk;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Training-free, hardware-constrained spiking NAS for RRAM crossbar accelerators", "snnas"};
  app.require_subcommand(1);
  app.fallthrough();

  Args a;
  app.add_option("--config", a.config_path, "Run configuration (JSON)");
  app.add_option("--batch", a.batch_path, "Minibatch file (NNAS format); overrides batch_path");
  app.add_option("--out", a.out_path, "Output path; overrides output_path ('-' for stdout)");
  app.add_option("--seed", a.seed, "Run seed; overrides run_seed");
  app.add_option("--bits", a.bits, "Weight bits; overrides quant.bit_w");
  app.add_option("--workers", a.workers, "Worker threads (0 = auto); overrides workers");
  app.add_flag("--trace", a.trace, "Include the per-candidate trace in the report");

  auto* search = app.add_subcommand("search", "Run the two-phase constrained search");
  auto* score = app.add_subcommand("score", "Score one candidate and report its costs");
  score->add_option("--cell-a", a.cell_a, "Six comma-separated operation codes")->required();
  score->add_option("--cell-b", a.cell_b, "Six comma-separated operation codes")->required();
  auto* cost = app.add_subcommand("cost", "Cost report for one candidate (no fitness)");
  cost->add_option("--cell-a", a.cell_a, "Six comma-separated operation codes")->required();
  cost->add_option("--cell-b", a.cell_b, "Six comma-separated operation codes")->required();
  cost->add_option("--sparsity", a.sparsity, "Assume this input activity rate instead of simulating");
  auto* gen = app.add_subcommand("gen-batch", "Write a deterministic synthetic minibatch");
  gen->add_option("--samples", a.samples, "Samples S (>= 2)")->capture_default_str();
  gen->add_option("--channels", a.channels)->capture_default_str();
  gen->add_option("--height", a.height)->capture_default_str();
  gen->add_option("--width", a.width)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (search->parsed()) return cmd_search(a, err);
    if (score->parsed()) return cmd_candidate(a, true);
    if (cost->parsed()) return cmd_candidate(a, false);
    if (gen->parsed()) return cmd_gen_batch(a);
  } catch (const NoFeasibleArchitecture& e) {
    err << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace snnas::cli
