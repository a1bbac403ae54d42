#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "memlab/engine.hpp"
#include "memlab/workload.hpp"

// Run configuration files and the plain-text mapping / timing formats.
//
// Run config (INI-style, '#' comments, unknown keys rejected):
//
//   [sim]
//   preset = xu4-a15          # or build the machine from mapping/timing files
//   mem_mts = 1866            # optional overrides
//   llc_mshrs = 11
//   l1_mshrs = 6
//   window = 8
//   mapping = configs/xu4.map
//   timing = configs/lpddr3.timing
//
//   [victim]
//   kind = seqread
//   working_set = 1 MiB       # defaults to a quarter of the LLC
//   seed = 1
//
//   [attacker]
//   kind = bkpllwrite
//   working_set = 4 MiB       # defaults to twice the LLC
//   mlp = 6
//   target_bank = 0
//
//   [experiment]
//   n_attackers = 3
//   laps = 4
//   partition = off           # on = one equal LLC way slice per core
//   throttle = 0              # attacker budget per 1000 cycles, 0 = none
//   in_order = off            # attacker cores issue one access at a time
//
// Mapping file: `banks N`, `row_size BYTES`, `line_size BYTES`, then one
// `bit N` or `xor N1 N2 ...` line per bank bit.
//
// Timing file: `KEY = INTEGER` for tRCD tRP tCL tBURST transfer_rate
// cpu_freq scheduler_window.

namespace memlab::config {

struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

struct MappingFile {
  addrmap::AddressMapping mapping =
      addrmap::AddressMapping::from_mask(addrmap::BankMask{{13, 14, 15}});
  addrmap::DramGeometry geometry;
};

MappingFile load_mapping_file(const std::string& path);

// Inverse of load_mapping_file: emits geometry headers plus one bit/xor
// line per bank bit.
std::string mapping_to_text(const MappingFile& mf);

void apply_timing_file(const std::string& path, dramsim::DramConfig& dram);

struct RunConfig {
  std::string preset = "xu4-a15";
  engine::SimConfig sim;
  workload::WorkloadSpec victim;
  workload::WorkloadSpec attacker;
  std::uint32_t n_attackers = 3;
  std::uint64_t laps = 4;
  bool partition = false;
  std::uint32_t throttle = 0;  // 0 = unthrottled
  bool attackers_in_order = false;
};

// Parses and resolves defaults (victim working set = llc/4, attacker = 2*llc,
// attacker mlp = local MLP). `preset_override` replaces any [sim] preset.
RunConfig load_run_config(const std::string& path,
                          const std::string& preset_override = "");

// SimConfig with the experiment's partition masks, attacker throttle and
// in-order settings applied for `n_attackers` attackers.
engine::SimConfig experiment_sim(const RunConfig& cfg, std::uint32_t n_attackers);

std::uint64_t parse_size(const std::string& text);  // 64, 4 KiB, 2 MiB, 1 GiB

}  // namespace memlab::config
