#pragma once

// Two-phase constrained exhaustive search.
//
// Phase 0 walks all 729 cells as Cell-A with Cell-B = Cell-A, checks only the
// parameter budget, and keeps the strict-max fitness (best starts at -1000).
// Phase 1 freezes that Cell-A, walks all 729 cells as Cell-B, requires all
// four budgets, and continues the same strict-max. Candidates are scored in
// parallel; the reduction runs in enumeration order so ties always keep the
// earlier candidate regardless of the worker count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "snnas/arch.hpp"
#include "snnas/batch.hpp"
#include "snnas/fitness.hpp"
#include "snnas/imc.hpp"
#include "snnas/quant.hpp"
#include "snnas/rng.hpp"
#include "snnas/spike_engine.hpp"

namespace snnas {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

struct Constraints {
  double mem_params_max = kUnbounded;
  double area_mm2_max = kUnbounded;
  double latency_ms_max = kUnbounded;
  double energy_uj_max = kUnbounded;

  // Zero is allowed here (nothing fits); configuration files require > 0.
  void validate() const {
    for (double v : {mem_params_max, area_mm2_max, latency_ms_max, energy_uj_max})
      if (std::isnan(v) || v < 0) throw std::invalid_argument("budgets must be >= 0");
  }

  friend bool operator==(const Constraints&, const Constraints&) = default;
};

/// Everything that determines a candidate's score and costs.
struct SearchProblem {
  Constraints constraints;
  HardwareConfig hw;
  QuantSpec quant;
  LifParams lif;
  FitnessOptions fitness;
  int base_channels = 64;
  int num_classes = 10;
  std::uint64_t run_seed = 1;
};

struct SearchOptions {
  int workers = 0;  // 0: hardware concurrency
  bool trace = false;
};

enum class SearchPhase { Memory = 0, Hardware = 1 };

inline const char* phase_tag(SearchPhase p) { return p == SearchPhase::Memory ? "memory" : "hardware constraints"; }

/// Weight-init seed of a candidate; keyed on the cells so any entry point
/// (search, single-candidate scoring) draws the same weights.
inline std::uint64_t candidate_seed(std::uint64_t run_seed, const CellConfig& a, const CellConfig& b) {
  return hash_combine({run_seed, static_cast<std::uint64_t>(a.index()) * kNumCells + b.index()});
}

struct CandidateEvaluation {
  FitnessScore score;
  CostReport report;
  std::vector<double> lif_spike_rate;  // mean(B_l) per LIF layer
};

inline NetworkArch build_candidate(const CellConfig& a, const CellConfig& b, const SearchProblem& prob,
                                   const Batch& batch) {
  const InputShape shape{static_cast<int>(batch.channels), static_cast<int>(batch.height),
                         static_cast<int>(batch.width)};
  return build_network(a, b, shape, prob.base_channels, prob.num_classes);
}

/// Full single-candidate pipeline: build, quantize, forward, fitness, costs
/// with the sparsity measured in that same forward pass.
inline CandidateEvaluation score_candidate(const CellConfig& a, const CellConfig& b, const SearchProblem& prob,
                                           const Batch& batch) {
  const NetworkArch arch = build_candidate(a, b, prob, batch);
  auto ev = qafe_evaluate(arch, prob.quant, batch, prob.lif, candidate_seed(prob.run_seed, a, b), prob.fitness);
  CandidateEvaluation out;
  out.score = ev.score;
  out.report = evaluate_costs(arch, prob.hw, prob.quant, prob.lif, ev.activity.input_rate);
  for (const auto& la : ev.activity.lif_layers) out.lif_spike_rate.push_back(la.spikes.mean());
  return out;
}

/// One visited candidate. Costs that were never computed are NaN.
struct TraceEntry {
  int phase = 0;
  int index = 0;
  CellConfig cell_a;
  CellConfig cell_b;
  std::int64_t params = 0;
  double area_mm2 = std::numeric_limits<double>::quiet_NaN();
  double latency_ms = std::numeric_limits<double>::quiet_NaN();
  double energy_uj = std::numeric_limits<double>::quiet_NaN();
  bool feasible = false;  // passed this phase's constraint check
  bool scored = false;
  FitnessScore score;
  std::vector<std::string> violated;
};

struct SearchResult {
  CellConfig cell_a;
  CellConfig cell_b;
  FitnessScore score;
  CostReport report;
  std::vector<double> lif_spike_rate;
  int winner_phase = 1;
  FitnessScore phase0_score;
  int evaluated_count = 0;
  int feasible_count = 0;
  std::vector<TraceEntry> trace;
};

class NoFeasibleArchitecture : public std::runtime_error {
 public:
  NoFeasibleArchitecture(SearchPhase phase, std::optional<TraceEntry> closest)
      : std::runtime_error(std::string("no feasible architecture (") + phase_tag(phase) + ")"),
        phase_(phase),
        closest_(std::move(closest)) {}

  SearchPhase phase() const { return phase_; }
  /// The rejected candidate with the smallest worst-case budget overshoot.
  const std::optional<TraceEntry>& closest_infeasible() const { return closest_; }

 private:
  SearchPhase phase_;
  std::optional<TraceEntry> closest_;
};

namespace detail {

struct Outcome {
  TraceEntry entry;
  std::optional<CandidateEvaluation> eval;  // phase 1, when the forward pass ran
};

inline Outcome run_phase0(const CellConfig& a, const SearchProblem& prob, const Batch& batch) {
  Outcome o;
  o.entry.phase = 0;
  o.entry.index = a.index();
  o.entry.cell_a = o.entry.cell_b = a;
  const NetworkArch arch = build_candidate(a, a, prob, batch);
  o.entry.params = param_count(arch);
  if (static_cast<double>(o.entry.params) > prob.constraints.mem_params_max) {
    o.entry.violated.push_back("memory");
    return o;
  }
  o.entry.feasible = true;
  o.entry.scored = true;
  o.entry.score = qafe_score(arch, prob.quant, batch, prob.lif, candidate_seed(prob.run_seed, a, a), prob.fitness);
  return o;
}

inline std::vector<std::string> violations(const Constraints& c, double params, double area, double lat,
                                           double eng) {
  std::vector<std::string> v;
  if (params > c.mem_params_max) v.push_back("memory");
  if (area > c.area_mm2_max) v.push_back("area");
  if (lat > c.latency_ms_max) v.push_back("latency");
  if (eng > c.energy_uj_max) v.push_back("energy");
  return v;
}

inline Outcome run_phase1(const CellConfig& a, const CellConfig& b, const SearchProblem& prob, const Batch& batch) {
  Outcome o;
  o.entry.phase = 1;
  o.entry.index = b.index();
  o.entry.cell_a = a;
  o.entry.cell_b = b;
  const NetworkArch arch = build_candidate(a, b, prob, batch);
  o.entry.params = param_count(arch);
  const MappingPlan plan = map_network(arch, prob.hw, prob.quant);
  o.entry.area_mm2 = area(plan, prob.hw);
  o.entry.latency_ms = latency(plan, arch, prob.hw, prob.lif);
  // Energy grows with sparsity, so the zero-sparsity floor is a valid early reject.
  const std::vector<double> idle(arch.layers.size(), 0.0);
  const double floor_uj = energy(plan, arch, prob.hw, prob.quant, prob.lif, idle);
  o.entry.violated = violations(prob.constraints, static_cast<double>(o.entry.params), o.entry.area_mm2,
                                o.entry.latency_ms, floor_uj);
  if (!o.entry.violated.empty()) {
    o.entry.energy_uj = floor_uj;
    return o;
  }
  auto ev = qafe_evaluate(arch, prob.quant, batch, prob.lif, candidate_seed(prob.run_seed, a, b), prob.fitness);
  CandidateEvaluation ce;
  ce.report = evaluate_costs(arch, prob.hw, prob.quant, prob.lif, ev.activity.input_rate);
  for (const auto& la : ev.activity.lif_layers) ce.lif_spike_rate.push_back(la.spikes.mean());
  o.entry.energy_uj = ce.report.energy_uj;
  if (ce.report.energy_uj > prob.constraints.energy_uj_max) {
    o.entry.violated.push_back("energy");
    o.eval = std::move(ce);
    return o;
  }
  o.entry.feasible = true;
  o.entry.scored = true;
  ce.score = ev.score;
  o.entry.score = ev.score;
  o.eval = std::move(ce);
  return o;
}

template <typename Fn>
void parallel_for(int n, int workers, Fn&& fn) {
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mu);
            if (!error) error = std::current_exception();
            next.store(n);
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

inline double overshoot(const TraceEntry& e, const Constraints& c) {
  auto ratio = [](double cost, double budget) {
    if (std::isnan(cost)) return 0.0;
    if (budget == kUnbounded) return 0.0;
    if (budget <= 0) return cost > 0 ? kUnbounded : 0.0;
    return cost / budget;
  };
  return std::max({ratio(static_cast<double>(e.params), c.mem_params_max), ratio(e.area_mm2, c.area_mm2_max),
                   ratio(e.latency_ms, c.latency_ms_max), ratio(e.energy_uj, c.energy_uj_max)});
}

inline std::optional<TraceEntry> closest_infeasible(const std::vector<Outcome>& outs, const Constraints& c) {
  const TraceEntry* best = nullptr;
  double best_ratio = kUnbounded;
  for (const auto& o : outs) {
    if (o.entry.feasible) continue;
    const double r = overshoot(o.entry, c);
    if (!best || r < best_ratio) {
      best = &o.entry;
      best_ratio = r;
    }
  }
  if (!best) return std::nullopt;
  return *best;
}

}  // namespace detail

inline SearchResult hw_aware_search(const SearchProblem& prob, const Batch& batch, const SearchOptions& opts = {}) {
  prob.constraints.validate();
  prob.quant.validate();
  prob.hw.validate();
  prob.lif.validate();
  if (batch.samples < 2) throw std::invalid_argument("batch needs S >= 2 samples");

  const std::vector<CellConfig> cells = enumerate_cells();
  SearchResult res;

  std::vector<detail::Outcome> phase0(cells.size());
  detail::parallel_for(kNumCells, opts.workers,
                       [&](int i) { phase0[i] = detail::run_phase0(cells[i], prob, batch); });

  FitnessScore best{FitnessScore::kInitialBest};
  std::optional<CellConfig> saved_a;
  for (const auto& o : phase0) {
    ++res.evaluated_count;
    if (!o.entry.feasible) continue;
    ++res.feasible_count;
    if (o.entry.score > best) {
      best = o.entry.score;
      saved_a = o.entry.cell_a;
    }
  }
  if (opts.trace)
    for (const auto& o : phase0) res.trace.push_back(o.entry);
  if (!saved_a) throw NoFeasibleArchitecture(SearchPhase::Memory, detail::closest_infeasible(phase0, prob.constraints));
  res.phase0_score = best;

  const CellConfig cell_a = *saved_a;
  std::vector<detail::Outcome> phase1(cells.size());
  detail::parallel_for(kNumCells, opts.workers,
                       [&](int i) { phase1[i] = detail::run_phase1(cell_a, cells[i], prob, batch); });

  const detail::Outcome* saved = nullptr;         // a phase-1 candidate beat the running best
  const detail::Outcome* incumbent = nullptr;     // (A, A) re-evaluated and fully feasible
  const detail::Outcome* best_feasible = nullptr; // fallback when the incumbent fails phase 1
  FitnessScore fallback_best{FitnessScore::kInitialBest};
  for (const auto& o : phase1) {
    ++res.evaluated_count;
    if (!o.entry.feasible) continue;
    ++res.feasible_count;
    if (o.entry.cell_b == cell_a) incumbent = &o;
    if (o.entry.score > best) {
      best = o.entry.score;
      saved = &o;
    }
    if (o.entry.score > fallback_best) {
      fallback_best = o.entry.score;
      best_feasible = &o;
    }
  }
  if (opts.trace)
    for (const auto& o : phase1) res.trace.push_back(o.entry);

  const detail::Outcome* winner = saved ? saved : (incumbent ? incumbent : best_feasible);
  if (!winner) throw NoFeasibleArchitecture(SearchPhase::Hardware, detail::closest_infeasible(phase1, prob.constraints));

  res.cell_a = cell_a;
  res.cell_b = winner->entry.cell_b;
  res.score = winner->entry.score;
  res.report = winner->eval->report;
  res.lif_spike_rate = winner->eval->lif_spike_rate;
  res.winner_phase = (!saved && winner == incumbent) ? 0 : 1;
  return res;
}

}  // namespace snnas
