// Acceptance driver: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "snnas/cli.hpp"
#include "snnas/snnas.hpp"

using namespace snnas;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
  std::printf("%s  criterion %d: %s  (%s)\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

SearchProblem tiny_problem(std::uint64_t seed) {
  SearchProblem p;
  p.base_channels = 4;
  p.lif.timesteps = 2;
  p.lif.v_threshold = 0.5;
  p.run_seed = seed;
  return p;
}

const Batch& tiny_batch() {
  static const Batch b = gen_synthetic_batch(4, 3, 8, 8, 3);
  return b;
}

struct CostRanges {
  double mem_lo = 1e300, mem_hi = 0, area_lo = 1e300, area_hi = 0, lat_lo = 1e300, lat_hi = 0, eng_lo = 1e300,
         eng_hi = 0;
};

// Phase-1 cost spread of the tiny problem, used to draw budgets that bite.
CostRanges tiny_ranges() {
  const auto free_run = hw_aware_search(tiny_problem(1), tiny_batch(), {0, true});
  CostRanges r;
  for (const auto& e : free_run.trace) {
    r.mem_lo = std::min(r.mem_lo, double(e.params));
    r.mem_hi = std::max(r.mem_hi, double(e.params));
    if (e.phase != 1) continue;
    r.area_lo = std::min(r.area_lo, e.area_mm2);
    r.area_hi = std::max(r.area_hi, e.area_mm2);
    r.lat_lo = std::min(r.lat_lo, e.latency_ms);
    r.lat_hi = std::max(r.lat_hi, e.latency_ms);
    r.eng_lo = std::min(r.eng_lo, e.energy_uj);
    r.eng_hi = std::max(r.eng_hi, e.energy_uj);
  }
  return r;
}

// A budget vector: each component unbounded, below the observed minimum, or inside the range.
Constraints random_budgets(const CostRanges& r, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto pick = [&](double lo, double hi) {
    const double x = u(gen);
    if (x < 0.25) return kUnbounded;
    if (x < 0.32) return lo * 0.9;
    return lo + (hi - lo) * 1.1 * u(gen);
  };
  return {pick(r.mem_lo, r.mem_hi), pick(r.area_lo, r.area_hi), pick(r.lat_lo, r.lat_hi), pick(r.eng_lo, r.eng_hi)};
}

std::string budget_str(double v) { return std::isinf(v) ? "\"inf\"" : fmt("%.17g", v); }

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "snnas");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

fs::path work_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "snnas_acceptance";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// Writes the tiny problem as a config file pointing at the tiny batch.
fs::path write_tiny_config(const std::string& name, const Constraints& c, std::uint64_t seed) {
  RunConfig cfg;
  cfg.problem = tiny_problem(seed);
  cfg.problem.constraints = c;
  cfg.batch_path = (work_dir() / "tiny.bin").string();
  cfg.output_path = (work_dir() / (name + ".report.json")).string();
  if (!fs::exists(cfg.batch_path)) save_batch(tiny_batch(), cfg.batch_path);
  const auto path = work_dir() / (name + ".json");
  std::ofstream(path) << config_to_json(cfg).dump(2);
  return path;
}

// ---------------------------------------------------------------------------

SearchResult criterion1() {
  SearchProblem p;
  p.base_channels = 16;
  p.lif.timesteps = 4;
  const Batch batch = gen_synthetic_batch(16, 3, 32, 32, 1);
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = hw_aware_search(p, batch);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(1, res.evaluated_count == 1458 && secs < 600.0, "search-space cardinality and runtime",
         fmt("evaluated=%g, wall=%.1fs, limit 600s", res.evaluated_count, secs));
  return res;
}

void criterion2() {
  const auto ranges = tiny_ranges();
  std::mt19937_64 gen(20240601);
  int agree = 0, total = 0, successes = 0;
  for (int i = 0; i < 24; ++i) {
    auto p = tiny_problem(1000 + i);
    p.constraints = random_budgets(ranges, gen);
    const auto ref = oracle::reference_search(p, tiny_batch());
    bool same = false;
    try {
      const auto res = hw_aware_search(p, tiny_batch(), {0, false});
      same = ref.ok && res.cell_a == ref.cell_a && res.cell_b == ref.cell_b && res.score.value() == ref.score &&
             res.evaluated_count == ref.evaluated && res.feasible_count == ref.feasible;
      successes += same;
    } catch (const NoFeasibleArchitecture& e) {
      same = !ref.ok && e.phase() == ref.failed_phase;
    }
    agree += same;
    ++total;
  }
  report(2, agree == total && successes >= 10, "parallel search equals sequential reference",
         fmt("%g/%g budget vectors agree, %g feasible", agree, total, successes));
}

void criterion3() {
  const auto ranges = tiny_ranges();
  std::mt19937_64 gen(777);
  int ok_runs = 0, sound = 0, failures = 0, tagged = 0, total = 0;
  for (int i = 0; i < 110; ++i) {
    const Constraints c = random_budgets(ranges, gen);
    const std::uint64_t seed = 5000 + i;
    const auto cfg = write_tiny_config("fuzz", c, seed);
    const int code = run_cli({"--config", cfg.string(), "search"});
    const auto rep = read_json(work_dir() / "fuzz.report.json")["canonical"];
    ++total;
    if (code == cli::kExitOk) {
      ++ok_runs;
      const auto& costs = rep["result"]["costs"];
      sound += costs["mem_params"].get<double>() <= c.mem_params_max && costs["area_mm2"].get<double>() <= c.area_mm2_max &&
               costs["latency_ms"].get<double>() <= c.latency_ms_max &&
               costs["energy_uj"].get<double>() <= c.energy_uj_max;
    } else if (code == cli::kExitInfeasible) {
      ++failures;
      auto p = tiny_problem(seed);
      p.constraints = c;
      const auto ref = oracle::reference_search(p, tiny_batch());
      tagged += !ref.ok && rep["error"]["phase"] == phase_tag(ref.failed_phase);
    }
  }
  report(3, sound == ok_runs && tagged == failures && ok_runs + failures == total && ok_runs > 0 && failures > 0,
         "constraint soundness fuzz via CLI",
         fmt("%g runs ok and within budget, ", sound) + fmt("%g exit-2 with correct phase tag, ", tagged) +
             fmt("%g vectors", total));
}

void criterion4() {
  int checked = 0, mismatches = 0;
  for (int p : {1, 3})
    for (int d : {10, 64, 128, 256})
      for (int f : {10, 64, 128, 256})
        for (int x : {32, 64, 128})
          for (int bw : {1, 4, 8, 16})
            for (int bd : {1, 2, 4, 8}) {
              LayerSpec l;
              l.kind = LayerKind::Conv;
              l.kernel = p;
              l.pad = p / 2;
              l.stride = 1;
              l.in_channels = d;
              l.out_channels = f;
              l.in_spatial = 8;
              HardwareConfig hw;
              hw.xbar_size = x;
              const auto m = map_layer(l, hw, adjustment_factor(bw, bd));
              const auto o = oracle::place(p, d, f, x, bw, bd, hw.xbars_per_pe, hw.pes_per_tile);
              ++checked;
              mismatches += m.n_xbars != o.n_xbars || m.n_pes != o.n_pes || m.n_tiles != o.n_tiles;
            }
  LayerSpec anchor;
  anchor.kind = LayerKind::Conv;
  anchor.kernel = 3;
  anchor.pad = 1;
  anchor.in_channels = 64;
  anchor.out_channels = 64;
  anchor.in_spatial = 8;
  const auto a = map_layer(anchor, HardwareConfig{}, adjustment_factor(8, 8));
  report(4, mismatches == 0 && a.n_xbars == 9, "crossbar mapping equals brute-force placement",
         fmt("%g grid points, %g mismatches, ", checked, mismatches) + fmt("3x3 anchor -> %g crossbars", a.n_xbars));
}

void criterion5() {
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<int> dim(2, 12), bits(0, 1);
  int sym_ok = 0;
  for (int t = 0; t < 1000; ++t) {
    BitMatrix b(dim(gen), 1 + dim(gen) * 7);
    for (std::size_t i = 0; i < b.rows(); ++i)
      for (std::size_t j = 0; j < b.cols(); ++j) b.set(i, j, bits(gen));
    const auto hm = hamming_matrix(b, 0.25 + 0.5 * (t % 4));
    bool ok = hm.m == hm.m.transpose();
    for (Eigen::Index i = 0; i < hm.m.rows(); ++i) ok = ok && hm.m(i, i) == double(b.cols());
    sym_ok += ok;
  }

  int det_checked = 0;
  double worst = 0;
  for (int s = 2; s <= 6; ++s)
    for (int t = 0; t < 50; ++t) {
      std::vector<HammingMatrix> mats;
      for (int l = 0; l < 3; ++l) {
        BitMatrix b(s, 20 + 13 * l);
        for (std::size_t i = 0; i < b.rows(); ++i)
          for (std::size_t j = 0; j < b.cols(); ++j) b.set(i, j, bits(gen));
        mats.push_back(hamming_matrix(b, default_beta(s, b.cols())));
      }
      Eigen::MatrixXd k = Eigen::MatrixXd::Zero(s, s);
      for (const auto& m : mats) k += m.m;
      std::vector<std::vector<double>> dense(s, std::vector<double>(s));
      for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j) dense[i][j] = k(i, j);
      const double det = std::abs(oracle::cofactor_det(dense));
      if (det < 1e-6) continue;
      const auto score = fitness_score(mats);
      const double want = std::log(det);
      worst = std::max(worst, std::abs(score.value() - want) / std::max(1.0, std::abs(want)));
      ++det_checked;
    }

  const auto net = build_network(CellConfig::from_codes({1, 1, 1, 1, 1, 1}), CellConfig::from_codes({1, 0, 1, 0, 1, 0}),
                                 {3, 16, 16}, 8, 10);
  Batch same = gen_synthetic_batch(8, 3, 16, 16, 9);
  for (std::size_t s = 1; s < same.samples; ++s)
    std::copy(same.sample(0), same.sample(0) + same.sample_size(), same.data.begin() + s * same.sample_size());
  LifParams lif;
  lif.v_threshold = 0.3;
  const bool sentinel = qafe_score(net, QuantSpec{}, same, lif, 1).is_sentinel();
  report(5, sym_ok == 1000 && worst <= 1e-9 && det_checked > 200 && sentinel, "fitness correctness",
         fmt("%g/1000 symmetric, ", sym_ok) + fmt("%g log-dets, worst rel err %.2e, ", det_checked, worst) +
             (sentinel ? "identical batch -> sentinel" : "identical batch NOT sentinel"));
}

void criterion6() {
  std::mt19937_64 gen(6);
  int widths_ok = 0;
  double worst_ratio = 0;
  for (int b : {4, 6, 8, 10, 12, 14, 16, 32}) {
    QuantSpec s;
    s.bit_w = b;
    std::uniform_real_distribution<double> d(grid_min(s), grid_max(s));
    std::vector<double> w(100000);
    for (auto& x : w) x = d(gen);
    const auto q = quantize(w, s);
    const double bound = std::ldexp(1.0, -s.frac_bits() - 1);
    bool ok = quantize(q, s) == q;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double e = std::abs(w[i] - q[i]);
      worst_ratio = std::max(worst_ratio, e / bound);
      ok = ok && e <= bound;
    }
    widths_ok += ok;
  }
  int adj_ok = 0, adj_total = 0;
  for (int bw = 1; bw <= 32; ++bw)
    for (int bd = 1; bd <= 32; ++bd) {
      ++adj_total;
      adj_ok += adjustment_factor(bw, bd) == static_cast<int>(std::ceil(double(bw) / bd));
    }
  report(6, widths_ok == 8 && adj_ok == adj_total, "quantization idempotence, error bound, adjustment factor",
         fmt("%g/8 widths ok, worst |w-Q(w)|/bound = %.4f, ", widths_ok, worst_ratio) +
             fmt("adjustment %g/%g", adj_ok, adj_total));
}

void criterion7() {
  const HardwareConfig hw;
  const QuantSpec q;
  const auto net = build_network(CellConfig::from_codes({1, 2, 1, 0, 1, 1}), CellConfig::from_codes({2, 1, 1, 1, 0, 1}),
                                 {3, 32, 32}, 16, 10);
  const auto plan = map_network(net, hw, q);
  bool lat_linear = true;
  LifParams base;
  base.timesteps = 1;
  const double t1 = latency(plan, net, hw, base);
  for (int t = 2; t <= 16; ++t) {
    LifParams l;
    l.timesteps = t;
    lat_linear = lat_linear && std::abs(latency(plan, net, hw, l) - t * t1) <= 1e-12 * t * t1;
  }

  bool eng_linear = true;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (net.layers[i].kind == LayerKind::AvgPool) continue;
    const double e1 = layer_energy(net.layers[i], plan.layers[i], hw, q, 4, 0.1).xbar_uj;
    for (double s : {0.0, 0.05, 0.3, 0.7, 1.0}) {
      const double e = layer_energy(net.layers[i], plan.layers[i], hw, q, 4, s).xbar_uj;
      eng_linear = eng_linear && std::abs(e - e1 * s / 0.1) <= 1e-12 * std::max(e, 1e-30) + 1e-300;
    }
  }

  // Growing layers: costs must not decrease as crossbar counts grow.
  bool monotone = true;
  struct Point {
    std::int64_t xbars;
    double area, lat, eng;
  };
  std::vector<Point> pts;
  for (int d : {8, 16, 32, 64, 96, 128, 192, 256})
    for (int f : {8, 16, 32, 64, 96, 128, 192, 256}) {
      LayerSpec l;
      l.kind = LayerKind::Conv;
      l.kernel = 3;
      l.pad = 1;
      l.in_channels = d;
      l.out_channels = f;
      l.in_spatial = 16;
      l.has_lif = true;
      MappingPlan p1;
      p1.layers = {map_layer(l, hw, q)};
      NetworkArch a;
      a.layers = {l};
      const std::vector<double> s{0.2};
      pts.push_back({p1.total_xbars(), area(p1, hw), latency(p1, a, hw, LifParams{}),
                     energy(p1, a, hw, q, LifParams{}, s)});
    }
  // Compare pairs that differ only by growing D or F (same spatial size): more crossbars never cost less.
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const bool grows = (i / 8 <= j / 8) && (i % 8 <= j % 8);
      if (!grows) continue;
      monotone = monotone && pts[j].xbars >= pts[i].xbars && pts[j].area >= pts[i].area &&
                 pts[j].lat >= pts[i].lat && pts[j].eng >= pts[i].eng;
    }

  bool tiles_double = true;
  for (const auto& l : net.layers) {
    if (l.kind == LayerKind::AvgPool) continue;
    MappingPlan one, two;
    one.layers = {map_layer(l, hw, q)};
    two.layers = {one.layers[0], one.layers[0]};
    tiles_double = tiles_double && two.total_tiles() == 2 * one.total_tiles() &&
                   std::abs((area(two, hw) - global_area_mm2(hw)) - 2 * (area(one, hw) - global_area_mm2(hw))) < 1e-9;
  }
  report(7, lat_linear && eng_linear && monotone && tiles_double, "cost-model properties",
         std::string("latency~T ") + (lat_linear ? "ok" : "BAD") + ", crossbar energy~s " + (eng_linear ? "ok" : "BAD") +
             ", monotone in crossbars " + (monotone ? "ok" : "BAD") + ", tiles x2 " + (tiles_double ? "ok" : "BAD"));
}

void criterion8(const SearchResult& winner) {
  SearchProblem p;
  p.base_channels = 16;
  p.lif.timesteps = 4;
  const Batch batch = gen_synthetic_batch(16, 3, 32, 32, 1);
  struct Row {
    int bits;
    CostReport r;
  };
  std::vector<Row> rows;
  for (int b : {4, 6, 8, 10, 12, 14, 16}) {
    p.quant.bit_w = b;
    p.quant.bit_d = 1;
    rows.push_back({b, score_candidate(winner.cell_a, winner.cell_b, p, batch).report});
  }
  bool mono = true;
  std::string detail;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0) {
      const auto& lo = rows[i - 1].r;  // fewer bits
      const auto& hi = rows[i].r;
      mono = mono && lo.total_xbars <= hi.total_xbars && lo.area_mm2 <= hi.area_mm2 && lo.energy_uj <= hi.energy_uj;
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "%sFxP%d:%lldx/%.3gmm2/%.3guJ", i ? " " : "", rows[i].bits,
                  static_cast<long long>(rows[i].r.total_xbars), rows[i].r.area_mm2, rows[i].r.energy_uj);
    detail += buf;
  }
  report(8, mono, "precision sweep monotone (crossbars, area, energy)", detail);
}

void criterion9() {
  const Constraints c{kUnbounded, kUnbounded, kUnbounded, kUnbounded};
  const auto cfg = write_tiny_config("det", c, 42);
  std::vector<std::string> canon;
  std::string detail;
  for (int w : {1, 2, 4}) {
    const auto out = work_dir() / ("det_w" + std::to_string(w) + ".json");
    const int code = run_cli({"--config", cfg.string(), "--workers", std::to_string(w), "--trace", "--out",
                              out.string(), "search"});
    canon.push_back(code == 0 ? read_json(out)["canonical"].dump() : "exit " + std::to_string(code));
    detail += (detail.empty() ? "" : ", ") + std::string("workers=") + std::to_string(w);
  }
  // A second invocation at the same parallelism.
  const auto again = work_dir() / "det_again.json";
  run_cli({"--config", cfg.string(), "--workers", "1", "--trace", "--out", again.string(), "search"});
  canon.push_back(read_json(again)["canonical"].dump());
  const bool same = std::all_of(canon.begin(), canon.end(), [&](const std::string& s) { return s == canon[0]; });
  report(9, same && canon[0].rfind("exit", 0) != 0, "byte-identical canonical report sections",
         detail + ", repeat run; " + fmt("%g bytes", double(canon[0].size())));
}

}  // namespace

int main() {
  try {
    const SearchResult winner = criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8(winner);
    criterion9();
  } catch (const std::exception& e) {
    std::printf("FAIL  aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%s: %d failing criteria\n", g_failures ? "FAILED" : "ALL PASSED", g_failures);
  return g_failures ? 1 : 0;
}
