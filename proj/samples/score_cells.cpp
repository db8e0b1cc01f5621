// Scores a few hand-picked cell pairs on a synthetic batch and prints their
// fitness and hardware costs.

#include <cstdio>

#include "snnas/snnas.hpp"

int main() {
  using namespace snnas;

  const Batch batch = gen_synthetic_batch(8, 3, 16, 16, 7);
  SearchProblem prob;
  prob.base_channels = 16;
  prob.quant.bit_w = 8;
  prob.quant.bit_d = 1;

  const CellConfig cells[] = {
      CellConfig::from_codes({0, 0, 0, 0, 0, 0}),
      CellConfig::from_codes({1, 0, 0, 1, 0, 1}),
      CellConfig::from_codes({1, 2, 0, 1, 2, 1}),
      CellConfig::from_codes({1, 1, 1, 1, 1, 1}),
  };

  std::printf("%-13s %-13s %10s %9s %9s %9s %9s\n", "cell_a", "cell_b", "score", "params", "mm2", "ms", "uJ");
  for (const auto& a : cells) {
    const auto ev = score_candidate(a, a, prob, batch);
    const auto& r = ev.report;
    std::printf("%-13s %-13s %10.4f %9lld %9.2f %9.4f %9.3f\n", a.str().c_str(), a.str().c_str(),
                ev.score.value(), static_cast<long long>(r.mem_params), r.area_mm2, r.latency_ms, r.energy_uj);
  }
  return 0;
}
