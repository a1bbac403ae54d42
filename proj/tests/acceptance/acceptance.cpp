// End-to-end acceptance suite. Each check prints one PASS/FAIL line with the
// measured values; the process exits nonzero if any check fails.
//
// Slowdowns are deterministic (fixed seeds), so thresholds compare exact
// reproducible numbers. Where a check asserts equality of two slowdowns that
// are physically decoupled, a 0.5% relative slack absorbs lap-boundary
// quantization; all other thresholds are strict.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "memlab/cachesim.hpp"
#include "memlab/config.hpp"
#include "memlab/csv.hpp"
#include "memlab/engine.hpp"
#include "memlab/presets.hpp"

using namespace memlab;
using engine::SimConfig;
using workload::WorkloadKind;
using workload::WorkloadSpec;

namespace {

constexpr double kMonoSlack = 0.995;  // equality slack for monotone checks

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%2d] %-28s %s  %s\n", id, name.c_str(), pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::uint64_t llc_bytes(const SimConfig& sim) {
  return static_cast<std::uint64_t>(sim.llc.sets) * sim.llc.ways *
         sim.llc.line_size;
}

WorkloadSpec llc_victim(const SimConfig& sim) {
  return {WorkloadKind::SeqRead, llc_bytes(sim) / 4, 64, 1, std::nullopt, 1, 1};
}

WorkloadSpec dram_victim(const SimConfig& sim) {
  return {WorkloadKind::SeqRead, llc_bytes(sim) * 2, 64, 1, std::nullopt, 1, 1};
}

WorkloadSpec attacker(const SimConfig& sim, WorkloadKind kind) {
  WorkloadSpec spec{kind, llc_bytes(sim) * 2, 64, 6, std::nullopt, 2, 1};
  if (workload::is_bank_aware(kind)) spec.target_bank = 0;
  return spec;
}

// slowdown[kind][n] for n = 0..3 against a shared solo baseline.
struct Grid {
  double solo = 0.0;
  std::map<WorkloadKind, std::array<double, 4>> slowdown;
};

Grid run_grid(const SimConfig& sim, const WorkloadSpec& victim,
              std::uint64_t laps, std::uint64_t warmup) {
  Grid grid;
  std::vector<std::optional<workload::AccessProgram>> programs(sim.cores.size());
  programs[0] = engine::build_for_core(victim, sim, 0);
  grid.solo = engine::run(sim, programs, laps, warmup).victim_cycles_per_iter;

  for (WorkloadKind kind : workload::all_kinds()) {
    WorkloadSpec att = attacker(sim, kind);
    auto& row = grid.slowdown[kind];
    for (std::uint32_t n = 0; n <= 3; ++n) {
      for (std::uint32_t c = 1; c < sim.cores.size(); ++c)
        programs[c] = c <= n ? std::optional<workload::AccessProgram>(
                                   engine::build_for_core(att, sim, c))
                             : std::nullopt;
      double cpl = engine::run(sim, programs, laps, warmup).victim_cycles_per_iter;
      row[n] = cpl / grid.solo;
    }
  }
  return grid;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

// --- checks -----------------------------------------------------------------

void attack_ordering(const Grid& xu4) {
  const double bkw = xu4.slowdown.at(WorkloadKind::BkPllWrite)[3];
  const double bkr = xu4.slowdown.at(WorkloadKind::BkPllRead)[3];
  const double bww = xu4.slowdown.at(WorkloadKind::SeqWrite)[3];
  double other = 0;
  for (WorkloadKind k : {WorkloadKind::SeqRead, WorkloadKind::SeqWrite,
                         WorkloadKind::PllRead, WorkloadKind::PllWrite})
    other = std::max(other, xu4.slowdown.at(k)[3]);
  const bool pass = bkw > bkr && bkr > other && bkw >= 2.0 * bww;
  report(1, "attack-ordering-xu4", pass,
         "bkpllwrite=" + fmt(bkw) + " > bkpllread=" + fmt(bkr) +
             " > others<=" + fmt(other) + ", vs 2x bwwrite=" + fmt(2 * bww));
}

void mshr_headroom(const Grid& xu4, const Grid& pi4) {
  const double bound = 0.3 * xu4.slowdown.at(WorkloadKind::BkPllWrite)[3];
  double worst = 0;
  WorkloadKind worst_kind = WorkloadKind::SeqRead;
  for (auto& [kind, row] : pi4.slowdown)
    if (row[3] > worst) {
      worst = row[3];
      worst_kind = kind;
    }
  report(2, "mshr-headroom-pi4", worst <= bound,
         std::string("pi4 worst ") + workload::kind_name(worst_kind) + "=" +
             fmt(worst) + " <= 0.3 * xu4 bkpllwrite = " + fmt(bound));
}

void dram_victim_ordering(int id, const char* preset) {
  SimConfig sim = presets::make_preset(preset);
  WorkloadSpec victim = dram_victim(sim);
  double bk_min = 1e18, other_max = 0;
  std::string detail;
  for (WorkloadKind kind : workload::all_kinds()) {
    auto r = engine::solo_vs_corun(sim, victim, attacker(sim, kind), 3, 3, 1);
    if (workload::is_bank_aware(kind))
      bk_min = std::min(bk_min, r.slowdown);
    else
      other_max = std::max(other_max, r.slowdown);
    detail += std::string(workload::kind_name(kind)) + "=" + fmt(r.slowdown) + " ";
  }
  report(id, std::string("dram-victim-") + preset, bk_min > other_max, detail);
}

void memfreq_trend() {
  SimConfig pi3 = presets::make_preset("pi3-lpddr2");
  WorkloadSpec victim = llc_victim(pi3);
  WorkloadSpec att = attacker(pi3, WorkloadKind::BkPllWrite);
  std::vector<std::uint32_t> rates;
  for (std::uint32_t r = 1000; r >= 100; r -= 100) rates.push_back(r);
  auto sweep = engine::sweep_memfreq(pi3, victim, att, 3, 6, rates, 3);
  bool mono = true;
  for (size_t i = 1; i < sweep.size(); ++i)
    if (sweep[i].second < sweep[i - 1].second * kMonoSlack) mono = false;
  const double ratio = sweep.back().second / sweep.front().second;
  report(4, "memfreq-trend-pi3", mono && ratio >= 5.0,
         "sd(1000)=" + fmt(sweep.front().second) + " sd(100)=" +
             fmt(sweep.back().second) + " ratio=" + fmt(ratio) +
             (mono ? " monotone" : " NON-MONOTONE"));
}

void attacker_count_monotone(const Grid& xu4, const Grid& pi4) {
  bool pass = true;
  std::string detail;
  for (auto grid : {&xu4, &pi4}) {
    for (auto& [kind, row] : grid->slowdown) {
      if (row[0] != 1.0) {
        pass = false;
        detail += std::string(workload::kind_name(kind)) + " n0=" + fmt(row[0]) + " ";
      }
      for (int n = 1; n <= 3; ++n)
        if (row[n] < row[n - 1] * kMonoSlack) {
          pass = false;
          detail += std::string(workload::kind_name(kind)) + " n" +
                    std::to_string(n) + "=" + fmt(row[n]) + "<" +
                    fmt(row[n - 1]) + " ";
        }
    }
  }
  if (detail.empty()) detail = "48 slowdowns non-decreasing, n=0 exactly 1.0";
  report(5, "attacker-count-monotone", pass, detail);
}

void partition_ineffective() {
  SimConfig xu4 = presets::make_preset("xu4-a15");
  WorkloadSpec victim = llc_victim(xu4);
  WorkloadSpec att = attacker(xu4, WorkloadKind::BkPllWrite);

  auto unpart = engine::solo_vs_corun(xu4, victim, att, 3, 6, 3);

  SimConfig part = xu4;
  part.llc_partition = {0x000f, 0x00f0, 0x0f00, 0xf000};
  auto parted = engine::solo_vs_corun(part, victim, att, 3, 6, 3);

  const bool still_slow = parted.slowdown >= 0.7 * unpart.slowdown;
  const bool miss_equal =
      parted.solo.core[0].llc_misses == parted.corun.core[0].llc_misses;
  report(6, "partition-ineffective-xu4", still_slow && miss_equal,
         "partitioned=" + fmt(parted.slowdown) + " vs unpartitioned=" +
             fmt(unpart.slowdown) + ", victim misses " +
             std::to_string(parted.solo.core[0].llc_misses) + "/" +
             std::to_string(parted.corun.core[0].llc_misses) +
             (miss_equal ? " equal" : " UNEQUAL"));
}

void in_order_collapse(const Grid& xu4) {
  SimConfig sim = presets::make_preset("xu4-a15");
  for (std::uint32_t c = 1; c < 4; ++c) sim.cores[c].in_order = true;
  auto io = engine::solo_vs_corun(sim, llc_victim(sim),
                                  attacker(sim, WorkloadKind::BkPllWrite), 3, 8, 3);
  const double ooo = xu4.slowdown.at(WorkloadKind::BkPllWrite)[3];
  report(7, "in-order-collapse-xu4", io.slowdown * 3.0 <= ooo,
         "out-of-order=" + fmt(ooo) + " in-order=" + fmt(io.slowdown) +
             " reduction=" + fmt(ooo / io.slowdown) + "x");
}

void throttling_defense(const Grid& xu4) {
  SimConfig sim = presets::make_preset("xu4-a15");
  for (std::uint32_t c = 1; c < 4; ++c) sim.cores[c].throttle = 1;
  auto throttled = engine::solo_vs_corun(
      sim, llc_victim(sim), attacker(sim, WorkloadKind::BkPllWrite), 3, 8, 3);
  const double baseline = xu4.slowdown.at(WorkloadKind::SeqWrite)[3];
  report(8, "throttling-defense-xu4", throttled.slowdown < baseline,
         "throttled bkpllwrite=" + fmt(throttled.slowdown) +
             " < bwwrite baseline=" + fmt(baseline));
}

void boom_saturation() {
  SimConfig boom = presets::make_preset("boom-medium");
  WorkloadSpec victim = llc_victim(boom);
  bool pass = true;
  std::string detail;
  for (WorkloadKind kind : {WorkloadKind::BkPllRead, WorkloadKind::BkPllWrite}) {
    auto two = engine::solo_vs_corun(boom, victim, attacker(boom, kind), 2, 8, 3);
    auto three = engine::solo_vs_corun(boom, victim, attacker(boom, kind), 3, 8, 3);
    if (two.slowdown < 0.8 * three.slowdown) pass = false;
    detail += std::string(workload::kind_name(kind)) + " n2=" + fmt(two.slowdown) +
              " n3=" + fmt(three.slowdown) + " ";
  }
  report(9, "boom-saturation", pass, detail);
}

void bank_purity() {
  struct Platform {
    const char* preset;
    std::uint32_t banks;
  };
  bool pass = true;
  std::uint64_t checked = 0;
  for (const Platform& p : {Platform{"xu4-a15", 32}, Platform{"pi4-a72", 16}}) {
    SimConfig sim = presets::make_preset(p.preset);
    for (std::uint64_t seed = 0; seed < 64 && pass; ++seed) {
      WorkloadKind kind = seed % 2 ? WorkloadKind::BkPllWrite
                                   : WorkloadKind::BkPllRead;
      WorkloadSpec spec{kind, 256 * 1024, 64, 4,
                        static_cast<std::uint32_t>(seed % p.banks), seed, 1};
      auto prog =
          engine::build_for_core(spec, sim, static_cast<std::uint32_t>(1 + seed % 3));
      for (const auto& node : prog.nodes) {
        if (sim.dram.mapping.bank_of(node.addr) != *spec.target_bank) {
          pass = false;
          break;
        }
        ++checked;
      }
    }
  }
  bool error_fired = false;
  try {
    addrmap::same_bank_lines(
        {0, 2 << 20},
        addrmap::AddressMapping::from_mask(addrmap::BankMask{{22}}),
        {2, 2048, 64}, 0);
  } catch (const addrmap::BankBitsNotControllable&) {
    error_fired = true;
  }
  report(10, "bank-purity", pass && error_fired,
         std::to_string(checked) + " node addresses on target across 64 seeds"
                                   " x 2 masks; uncontrollable bit rejected: " +
             (error_fired ? "yes" : "NO"));
}

// check 11: reference oracles against independent rule restatements

std::uint32_t naive_mask_bank(std::uint64_t mask_word, std::uint64_t addr) {
  std::uint32_t bank = 0;
  int idx = 0;
  for (int bit = 0; bit < 64; ++bit) {
    if (!(mask_word >> bit & 1)) continue;
    if (addr >> bit & 1) bank |= 1u << idx;
    ++idx;
  }
  return bank;
}

bool check_bank_oracle() {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100000; ++trial) {
    const int nbits = 1 + static_cast<int>(rng() % 8);
    std::set<int> positions;
    while (static_cast<int>(positions.size()) < nbits)
      positions.insert(static_cast<int>(rng() % addrmap::kPhysAddrBits));
    addrmap::BankMask mask{{positions.begin(), positions.end()}};
    std::uint64_t word = 0;
    for (int b : mask.bits) word |= 1ull << b;
    const std::uint64_t addr = rng() & ((1ull << addrmap::kPhysAddrBits) - 1);
    if (addrmap::bank_of_mask(mask, addr) != naive_mask_bank(word, addr))
      return false;
  }
  return true;
}

bool check_frfcfs_oracle() {
  // all traces of <= 6 requests over 2 banks x 2 rows, one arrival per cycle
  dramsim::DramConfig cfg;
  cfg.geometry = {2, 2048, 64};
  cfg.mapping = addrmap::AddressMapping::from_mask(addrmap::BankMask{{11}});
  cfg.transfer_rate = 1000;
  cfg.cpu_freq = 500;
  for (std::size_t len = 1; len <= 6; ++len) {
    std::size_t combos = 1;
    for (std::size_t i = 0; i < len; ++i) combos *= 4;
    for (std::size_t pick = 0; pick < combos; ++pick) {
      dramsim::DramSim dram(cfg);
      struct Bank {
        bool has_row = false, busy = false;
        std::uint64_t row = 0, busy_until = 0, finish_row = 0;
      };
      std::vector<Bank> banks(2);
      std::vector<dramsim::MemRequest> queue;
      std::uint64_t bus_free = 0;
      std::vector<std::uint64_t> ref_order, impl_order;

      std::size_t p = pick;
      for (std::size_t i = 0; i < len; ++i, p /= 4) {
        dramsim::MemRequest req{i + 1, dramsim::ReqKind::ReadFill,
                                {static_cast<std::uint32_t>(p % 2), (p / 2) % 2, 0},
                                i};
        dram.enqueue(req);
        queue.push_back(req);
      }
      std::size_t done = 0;
      for (std::uint64_t cycle = 0; done < len; ++cycle) {
        if (cycle > 100000) return false;
        done += dram.complete(cycle).size();
        if (auto id = dram.schedule(cycle)) impl_order.push_back(*id);
        // literal restatement of the rule
        for (auto& b : banks)
          if (b.busy && b.busy_until <= cycle) {
            b.busy = false;
            b.has_row = true;
            b.row = b.finish_row;
          }
        if (cycle < bus_free) continue;
        const dramsim::MemRequest* best = nullptr;
        bool best_hit = false;
        std::uint32_t seen = 0;
        for (const auto& req : queue) {
          if (req.arrival >= cycle) break;
          if (seen++ == cfg.scheduler_window) break;
          Bank& b = banks[req.coord.bank];
          if (b.busy || b.busy_until > cycle) continue;
          const bool hit = b.has_row && b.row == req.coord.row;
          if (!best || (hit && !best_hit)) {
            best = &req;
            best_hit = hit;
          }
        }
        if (!best) continue;
        Bank& b = banks[best->coord.bank];
        const auto& t = cfg.timings;
        std::uint64_t d = b.has_row
                              ? (b.row == best->coord.row
                                     ? t.tCL + t.tBURST
                                     : t.tRP + t.tRCD + t.tCL + t.tBURST)
                              : t.tRCD + t.tCL + t.tBURST;
        b.busy = true;
        b.busy_until =
            cycle + dramsim::to_cpu_cycles(d, cfg.cpu_freq, cfg.transfer_rate);
        b.finish_row = best->coord.row;
        bus_free = cycle + dramsim::to_cpu_cycles(t.tBURST, cfg.cpu_freq,
                                                  cfg.transfer_rate);
        ref_order.push_back(best->id);
        queue.erase(std::find_if(queue.begin(), queue.end(),
                                 [&](const dramsim::MemRequest& r) {
                                   return r.id == best->id;
                                 }));
      }
      if (impl_order != ref_order) return false;
    }
  }
  return true;
}

bool check_sattolo() {
  std::mt19937_64 seeds(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::uint32_t lines = 2 + static_cast<std::uint32_t>(seeds() % 120);
    WorkloadSpec spec{WorkloadKind::PllRead, lines * 64ull, 64, 1, std::nullopt,
                      seeds(), 1};
    std::vector<addrmap::PhysAddr> cand;
    for (std::uint32_t i = 0; i < lines; ++i) cand.push_back(i * 64ull);
    auto prog = workload::build_parallel_lists(spec, cand);
    std::map<std::uint64_t, std::uint64_t> next;
    for (std::uint32_t k = 0; k < lines; ++k)
      next[prog.node(0, k).addr] = prog.node(0, (k + 1) % lines).addr;
    std::set<std::uint64_t> seen;
    std::uint64_t at = prog.node(0, 0).addr;
    for (std::uint32_t step = 0; step < lines; ++step) {
      if (!seen.insert(at).second) return false;
      at = next.at(at);
    }
    if (at != prog.node(0, 0).addr || seen.size() != lines) return false;
  }
  return true;
}

std::string run_config_csv(const std::string& path) {
  config::RunConfig cfg = config::load_run_config(path);
  SimConfig sim = config::experiment_sim(cfg, cfg.n_attackers);
  auto result = engine::solo_vs_corun(sim, cfg.victim, cfg.attacker,
                                      cfg.n_attackers, cfg.laps);
  csv::Row row;
  row.preset = cfg.preset;
  row.victim = workload::kind_name(cfg.victim.kind);
  row.attacker = workload::kind_name(cfg.attacker.kind);
  row.n_attackers = cfg.n_attackers;
  row.mem_mts = sim.dram.transfer_rate;
  row.partitioned = cfg.partition;
  row.throttle = cfg.throttle;
  row.solo_cycles_per_iter = result.solo_cycles_per_iter;
  row.corun_cycles_per_iter = result.corun_cycles_per_iter;
  row.slowdown = result.slowdown;
  row.victim_blocked_cycles = result.corun.core[0].blocked_cycles;
  row.dram_row_hits = result.corun.dram_row_hits;
  row.dram_row_conflicts = result.corun.dram_row_conflicts;
  row.seed = cfg.victim.seed;
  return std::string(csv::header()) + "\n" + csv::to_line(row) + "\n";
}

void oracle_suites() {
  const bool bank = check_bank_oracle();
  const bool frfcfs = check_frfcfs_oracle();
  const bool sattolo = check_sattolo();
  const std::string cfg_path =
      std::string(MEMLAB_SOURCE_DIR) + "/configs/xu4-bkpllwrite.cfg";
  const bool deterministic = run_config_csv(cfg_path) == run_config_csv(cfg_path);
  report(11, "oracle-suites", bank && frfcfs && sattolo && deterministic,
         std::string("bank-of 1e5: ") + (bank ? "ok" : "FAIL") +
             ", fr-fcfs enumeration: " + (frfcfs ? "ok" : "FAIL") +
             ", sattolo 1e3: " + (sattolo ? "ok" : "FAIL") +
             ", byte-identical csv: " + (deterministic ? "ok" : "FAIL"));
}

void blocking_semantics() {
  bool pass = true;
  // k+1-th distinct-line miss returns Blocked, for several k
  for (std::uint32_t k : {1u, 2u, 6u, 11u, 19u}) {
    cachesim::Cache cache({256, 16, 64, k, 8, 2}, 2);
    for (std::uint32_t i = 0; i < k; ++i)
      if (cache.access(0, 0x100000ull * i, false, i, {0, 0, 0, 0}).outcome !=
          cachesim::AccessOutcome::MissAllocated)
        pass = false;
    if (cache.access(0, 0x100000ull * k, false, k, {0, 0, 0, 0}).outcome !=
        cachesim::AccessOutcome::Blocked)
      pass = false;
  }

  // a hit-only second core is rejected while blocked, untouched otherwise
  cachesim::Cache cache({4, 2, 64, 2, 4, 2}, 2);
  auto warm = cache.access(1, 0x40, false, 0, {1, 0, 0, 0});
  cache.fill(warm.mshr, 0);
  cache.access(0, 0x10000, false, 1, {0, 0, 0, 0});
  if (cache.access(1, 0x40, false, 2, {1, 0, 0, 0}).outcome !=
      cachesim::AccessOutcome::Hit)
    pass = false;  // one live MSHR: still open for hits
  if (cache.counters(1).blocked_rejections != 0) pass = false;
  cache.access(0, 0x20000, false, 3, {0, 0, 0, 0});  // fills the file
  if (cache.access(1, 0x40, false, 4, {1, 0, 0, 0}).outcome !=
      cachesim::AccessOutcome::Blocked)
    pass = false;
  if (cache.counters(1).blocked_rejections == 0) pass = false;
  report(12, "blocking-semantics", pass,
         "k+1-th miss blocks at k in {1,2,6,11,19}; hit-only core rejected "
         "only while blocked");
}

}  // namespace

int main() {
  std::printf("memlab acceptance suite\n");

  SimConfig xu4 = presets::make_preset("xu4-a15");
  SimConfig pi4 = presets::make_preset("pi4-a72");
  Grid xu4_grid = run_grid(xu4, llc_victim(xu4), 8, 3);
  Grid pi4_grid = run_grid(pi4, llc_victim(pi4), 8, 3);

  attack_ordering(xu4_grid);
  mshr_headroom(xu4_grid, pi4_grid);
  dram_victim_ordering(3, "xu4-a15");
  dram_victim_ordering(3, "pi4-a72");
  memfreq_trend();
  attacker_count_monotone(xu4_grid, pi4_grid);
  partition_ineffective();
  in_order_collapse(xu4_grid);
  throttling_defense(xu4_grid);
  boom_saturation();
  bank_purity();
  oracle_suites();
  blocking_semantics();

  if (g_failures == 0) {
    std::printf("all acceptance checks passed\n");
    return 0;
  }
  std::printf("%d acceptance check(s) failed\n", g_failures);
  return 1;
}
