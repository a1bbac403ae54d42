#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "memlab/cachesim.hpp"
#include "memlab/dramsim.hpp"
#include "memlab/workload.hpp"

// Cycle-driven multicore model: each core issues accesses from its program
// into a private L1D, misses forward to a shared non-blocking LLC, LLC misses
// go to DRAM. Solo/co-run experiments report the victim's cycles per program
// lap and the derived slowdown.

namespace memlab::engine {

struct CoreConfig {
  std::uint32_t window = 8;  // max in-flight memory accesses
  bool in_order = false;     // forces window = 1
  std::optional<std::uint32_t> throttle;  // max LLC-bound accesses per 1000 cycles
};

struct SimConfig {
  std::vector<CoreConfig> cores;
  cachesim::CacheConfig l1;
  cachesim::CacheConfig llc;
  dramsim::DramConfig dram;
  // Per-core LLC way masks; fills by core c may only victimize ways in
  // llc_partition[c]. Empty = unpartitioned.
  std::vector<std::uint64_t> llc_partition;
  std::uint64_t seed = 0;
  // Step one cycle at a time instead of jumping over provably idle spans.
  // Results are identical either way; kept as a testing aid.
  bool disable_idle_skip = false;
};

void validate_sim_config(const SimConfig& sim);

struct CoreMetrics {
  std::uint64_t issued = 0;
  std::uint64_t completed = 0;
  std::uint64_t llc_hits = 0;
  std::uint64_t llc_misses = 0;
  std::uint64_t blocked_cycles = 0;  // cycles with a request rejected by a blocked LLC
  std::uint64_t stall_cycles = 0;    // cycles with work pending but nothing issued
};

struct Metrics {
  std::uint64_t total_cycles = 0;
  std::uint64_t victim_iterations = 0;  // measured laps (warmup excluded)
  std::uint64_t warmup_laps = 0;
  double victim_cycles_per_iter = 0.0;
  std::vector<CoreMetrics> core;
  std::vector<std::uint64_t> bank_reads;
  std::vector<std::uint64_t> bank_writes;
  std::uint64_t dram_row_hits = 0;
  std::uint64_t dram_row_conflicts = 0;
  std::uint64_t llc_fill_requests = 0;
};

struct ExperimentResult {
  double solo_cycles_per_iter = 0.0;
  double corun_cycles_per_iter = 0.0;
  double slowdown = 1.0;
  Metrics solo;
  Metrics corun;
};

// Core 0 hosts the victim; entries may be empty for idle cores. Runs until
// the victim completes `stop_laps` laps, then drains in-flight work. The
// first `warmup_laps` are treated as cache warmup and excluded from
// cycles-per-lap; the default excludes the first lap.
Metrics run(const SimConfig& sim,
            const std::vector<std::optional<workload::AccessProgram>>& programs,
            std::uint64_t stop_laps, std::uint64_t warmup_laps = 1);

// Builds the program for a workload placed on a given core. Each core owns a
// 1 GiB-aligned region; bank-aware kinds draw their lines from a hugepage
// region sized so that one bank supplies exactly the working set.
workload::AccessProgram build_for_core(const workload::WorkloadSpec& spec,
                                       const SimConfig& sim,
                                       std::uint32_t core);

ExperimentResult solo_vs_corun(const SimConfig& sim,
                               const workload::WorkloadSpec& victim,
                               const workload::WorkloadSpec& attacker,
                               std::uint32_t n_attackers, std::uint64_t laps,
                               std::uint64_t warmup_laps = 1);

std::vector<std::pair<std::uint32_t, double>> sweep_memfreq(
    const SimConfig& sim, const workload::WorkloadSpec& victim,
    const workload::WorkloadSpec& attacker, std::uint32_t n_attackers,
    std::uint64_t laps, const std::vector<std::uint32_t>& rates,
    std::uint64_t warmup_laps = 1);

}  // namespace memlab::engine
