#pragma once

// JSON reports. Everything under "canonical" is a pure function of the
// config, the batch contents and the seed; "meta" holds the timestamp, paths
// and worker count.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "snnas/batch.hpp"
#include "snnas/config.hpp"
#include "snnas/fitness.hpp"
#include "snnas/imc.hpp"
#include "snnas/search.hpp"

namespace snnas {

inline constexpr int kReportSchemaVersion = 1;

namespace detail {

inline nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

inline nlohmann::json score_json(const FitnessScore& s) { return s.is_finite() ? nlohmann::json(s.value()) : nlohmann::json(nullptr); }

inline std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace detail

inline nlohmann::json cost_report_json(const CostReport& r) {
  using nlohmann::json;
  json layers = json::array();
  for (std::size_t i = 0; i < r.layers.size(); ++i) {
    const auto& c = r.layers[i];
    layers.push_back({{"index", i},
                      {"kind", to_string(c.layer.kind)},
                      {"kernel", c.layer.kernel},
                      {"in_channels", c.layer.in_channels},
                      {"out_channels", c.layer.out_channels},
                      {"in_spatial", c.layer.in_spatial},
                      {"out_spatial", c.layer.out_spatial()},
                      {"stride", c.layer.stride},
                      {"has_lif", c.layer.has_lif},
                      {"params", c.params},
                      {"sparsity", c.sparsity},
                      {"mapping",
                       {{"n_xbars", c.mapping.n_xbars},
                        {"n_pes", c.mapping.n_pes},
                        {"n_tiles", c.mapping.n_tiles},
                        {"row_splits", c.mapping.row_splits},
                        {"col_splits", c.mapping.col_splits},
                        {"cols_per_filter", c.mapping.cols_per_filter}}},
                      {"area_mm2", c.area_mm2},
                      {"cycles", c.cycles},
                      {"latency_ms", c.latency_ms},
                      {"energy_uj",
                       {{"crossbar", c.energy.xbar_uj},
                        {"adc", c.energy.adc_uj},
                        {"buffer", c.energy.buffer_uj},
                        {"noc", c.energy.noc_uj},
                        {"pooling", c.energy.pool_uj},
                        {"total", c.energy.total()}}}});
  }
  return {{"mem_params", r.mem_params},
          {"area_mm2", r.area_mm2},
          {"latency_ms", r.latency_ms},
          {"energy_uj", r.energy_uj},
          {"global_area_mm2", r.global_area_mm2},
          {"total_xbars", r.total_xbars},
          {"total_tiles", r.total_tiles},
          {"layers", layers}};
}

/// budget - cost; "inf" for unbounded budgets.
inline nlohmann::json margins_json(const CostReport& r, const Constraints& c) {
  auto margin = [](double budget, double cost) {
    return std::isinf(budget) ? nlohmann::json("inf") : nlohmann::json(budget - cost);
  };
  return {{"mem_params", margin(c.mem_params_max, static_cast<double>(r.mem_params))},
          {"area_mm2", margin(c.area_mm2_max, r.area_mm2)},
          {"latency_ms", margin(c.latency_ms_max, r.latency_ms)},
          {"energy_uj", margin(c.energy_uj_max, r.energy_uj)}};
}

inline nlohmann::json trace_entry_json(const TraceEntry& e) {
  return {{"phase", e.phase},
          {"index", e.index},
          {"cell_a", e.cell_a.codes()},
          {"cell_b", e.cell_b.codes()},
          {"params", e.params},
          {"area_mm2", detail::num(e.area_mm2)},
          {"latency_ms", detail::num(e.latency_ms)},
          {"energy_uj", detail::num(e.energy_uj)},
          {"feasible", e.feasible},
          {"scored", e.scored},
          {"score", detail::score_json(e.score)},
          {"violated", e.violated}};
}

inline nlohmann::json batch_json(const Batch& b) {
  return {{"samples", b.samples},
          {"channels", b.channels},
          {"height", b.height},
          {"width", b.width},
          {"digest_fnv1a", detail::hex64(batch_digest(b))}};
}

/// beta used for each LIF layer of a costed architecture.
inline nlohmann::json betas_json(const CostReport& r, const FitnessOptions& f, std::size_t samples) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t i = 0; i < r.layers.size(); ++i) {
    const auto& l = r.layers[i].layer;
    if (!l.has_lif) continue;
    const auto n = static_cast<std::size_t>(l.neurons());
    out.push_back({{"layer", i}, {"neurons", n}, {"beta", f.beta.value_or(default_beta(samples, n))}});
  }
  return out;
}

inline nlohmann::json report_envelope(const std::string& command, const RunConfig& cfg, const Batch* batch) {
  nlohmann::json canonical;
  canonical["command"] = command;
  canonical["config"] = config_to_json(cfg, false);
  if (batch) canonical["batch"] = batch_json(*batch);
  return {{"schema_version", kReportSchemaVersion},
          {"canonical", canonical},
          {"meta",
           {{"generated_at", detail::utc_timestamp()},
            {"workers", cfg.workers},
            {"batch_path", cfg.batch_path},
            {"output_path", cfg.output_path}}}};
}

inline nlohmann::json search_report(const SearchResult& res, const RunConfig& cfg, const Batch& batch) {
  auto j = report_envelope("search", cfg, &batch);
  auto& c = j["canonical"];
  c["status"] = "ok";
  c["result"] = {{"cell_a", res.cell_a.codes()},
                 {"cell_b", res.cell_b.codes()},
                 {"score", detail::score_json(res.score)},
                 {"phase0_score", detail::score_json(res.phase0_score)},
                 {"winner_phase", res.winner_phase},
                 {"costs", cost_report_json(res.report)},
                 {"margins", margins_json(res.report, cfg.problem.constraints)},
                 {"lif_spike_rate", res.lif_spike_rate},
                 {"betas", betas_json(res.report, cfg.problem.fitness, batch.samples)},
                 {"counters", {{"evaluated", res.evaluated_count}, {"feasible", res.feasible_count}}}};
  if (cfg.trace) {
    nlohmann::json t = nlohmann::json::array();
    for (const auto& e : res.trace) t.push_back(trace_entry_json(e));
    c["trace"] = std::move(t);
  }
  return j;
}

inline nlohmann::json infeasible_report(const NoFeasibleArchitecture& err, const RunConfig& cfg, const Batch& batch) {
  auto j = report_envelope("search", cfg, &batch);
  auto& c = j["canonical"];
  c["status"] = "infeasible";
  c["error"] = {{"phase", phase_tag(err.phase())}, {"message", err.what()}};
  if (err.closest_infeasible()) c["error"]["closest_infeasible"] = trace_entry_json(*err.closest_infeasible());
  return j;
}

inline nlohmann::json candidate_report(const std::string& command, const CellConfig& a, const CellConfig& b,
                                       const CandidateEvaluation& ev, const RunConfig& cfg, const Batch* batch,
                                       bool with_score) {
  auto j = report_envelope(command, cfg, batch);
  auto& c = j["canonical"];
  c["status"] = "ok";
  c["result"] = {{"cell_a", a.codes()},
                 {"cell_b", b.codes()},
                 {"costs", cost_report_json(ev.report)},
                 {"margins", margins_json(ev.report, cfg.problem.constraints)}};
  if (with_score) {
    c["result"]["score"] = detail::score_json(ev.score);
    c["result"]["lif_spike_rate"] = ev.lif_spike_rate;
    if (batch) c["result"]["betas"] = betas_json(ev.report, cfg.problem.fitness, batch->samples);
  }
  return j;
}

/// Writes the report; an empty path means stdout.
inline void emit_report(const nlohmann::json& report, const std::string& path) {
  const std::string text = report.dump(2) + "\n";
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write report: " + path);
  out << text;
  if (!out) throw std::runtime_error("cannot write report: " + path);
}

}  // namespace snnas
