#include "memlab/csv.hpp"

#include <cstdio>

namespace memlab::csv {

const char* header() {
  return "preset,victim,attacker,n_attackers,mem_mts,partitioned,throttle,"
         "solo_cycles_per_iter,corun_cycles_per_iter,slowdown,"
         "victim_blocked_cycles,dram_row_hits,dram_row_conflicts,seed";
}

std::string to_line(const Row& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%s,%s,%s,%u,%u,%d,%u,%.2f,%.2f,%.4f,%llu,%llu,%llu,%llu",
                r.preset.c_str(), r.victim.c_str(), r.attacker.c_str(),
                r.n_attackers, r.mem_mts, r.partitioned ? 1 : 0, r.throttle,
                r.solo_cycles_per_iter, r.corun_cycles_per_iter, r.slowdown,
                static_cast<unsigned long long>(r.victim_blocked_cycles),
                static_cast<unsigned long long>(r.dram_row_hits),
                static_cast<unsigned long long>(r.dram_row_conflicts),
                static_cast<unsigned long long>(r.seed));
  return buf;
}

}  // namespace memlab::csv
