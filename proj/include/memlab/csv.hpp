#pragma once

#include <cstdint>
#include <string>

namespace memlab::csv {

struct Row {
  std::string preset;
  std::string victim;
  std::string attacker;
  std::uint32_t n_attackers = 0;
  std::uint32_t mem_mts = 0;
  bool partitioned = false;
  std::uint32_t throttle = 0;
  double solo_cycles_per_iter = 0.0;
  double corun_cycles_per_iter = 0.0;
  double slowdown = 1.0;
  std::uint64_t victim_blocked_cycles = 0;
  std::uint64_t dram_row_hits = 0;
  std::uint64_t dram_row_conflicts = 0;
  std::uint64_t seed = 0;
};

// Frozen schema; golden-file tests compare full byte streams.
const char* header();
std::string to_line(const Row& row);

}  // namespace memlab::csv
