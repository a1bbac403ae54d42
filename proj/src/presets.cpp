#include "memlab/presets.hpp"

#include <stdexcept>

namespace memlab::presets {

namespace {

using addrmap::AddressMapping;
using addrmap::BankMask;

engine::SimConfig base_quad(std::uint32_t window) {
  engine::SimConfig sim;
  sim.cores.assign(4, engine::CoreConfig{window, false, std::nullopt});
  sim.l1 = {256, 2, 64, 6, 4, 4};  // 32 KiB, 2-way, local MLP 6
  return sim;
}

// Odroid XU4, Cortex-A15 cluster: 2 MiB 16-way LLC with 11 outstanding
// misses; LPDDR3-1866; bank bits 8,13,14,15,16.
engine::SimConfig xu4_a15() {
  engine::SimConfig sim = base_quad(8);
  sim.llc = {2048, 16, 64, 11, 8, 20};
  sim.dram.geometry = {32, 2048, 64};
  sim.dram.mapping = AddressMapping::from_mask(BankMask{{8, 13, 14, 15, 16}});
  sim.dram.transfer_rate = 1866;
  sim.dram.cpu_freq = 2000;
  return sim;
}

// Raspberry Pi 4, Cortex-A72: 1 MiB 16-way LLC, up to 19 outstanding reads;
// LPDDR4-3200; bank bits 11,12,13,14.
engine::SimConfig pi4_a72() {
  engine::SimConfig sim = base_quad(8);
  sim.llc = {1024, 16, 64, 19, 8, 20};
  sim.dram.geometry = {16, 2048, 64};
  sim.dram.mapping = AddressMapping::from_mask(BankMask{{11, 12, 13, 14}});
  sim.dram.transfer_rate = 3200;
  sim.dram.cpu_freq = 1500;
  return sim;
}

// Quad medium BOOM: 512 KiB 16-way LLC with 11 MSHRs, DDR3-2133 with
// 8 banks and 32 KiB row buffers, FR-FCFS window 8.
engine::SimConfig boom_medium() {
  engine::SimConfig sim = base_quad(16);
  sim.l1.hit_latency = 2;
  sim.llc = {512, 16, 64, 11, 8, 20};
  sim.dram.geometry = {8, 32768, 64};
  sim.dram.mapping = AddressMapping::from_mask(BankMask{{13, 14, 15}});
  sim.dram.transfer_rate = 2133;
  sim.dram.cpu_freq = 2133;
  return sim;
}

// Raspberry Pi 3 class: 512 KiB LLC, LPDDR2 at 900 MT/s by default. The
// memory clock is the interesting knob here; cores are modeled like the
// other quad presets.
engine::SimConfig pi3_lpddr2() {
  engine::SimConfig sim = base_quad(8);
  sim.llc = {512, 16, 64, 8, 8, 20};
  sim.dram.geometry = {8, 2048, 64};
  sim.dram.mapping = AddressMapping::from_mask(BankMask{{13, 14, 15}});
  sim.dram.timings.tBURST = 8;  // narrow LPDDR2 bus: a line takes two bursts
  sim.dram.transfer_rate = 900;
  sim.dram.cpu_freq = 1200;
  return sim;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"xu4-a15", "pi4-a72", "boom-medium", "pi3-lpddr2"};
}

engine::SimConfig make_preset(const std::string& name) {
  if (name == "xu4-a15") return xu4_a15();
  if (name == "pi4-a72") return pi4_a72();
  if (name == "boom-medium") return boom_medium();
  if (name == "pi3-lpddr2") return pi3_lpddr2();
  throw std::invalid_argument("unknown preset: " + name);
}

}  // namespace memlab::presets
