// memlab: memory-hierarchy contention experiments from the command line.
//
//   memlab run -c experiment.cfg
//   memlab sweep -c experiment.cfg --axis attackers|memfreq|attacker-kind
//   memlab mapinspect -m board.map --addr 0x2000
//   memlab mapinspect -m board.map -c experiment.cfg
//
// CSV goes to standard output; redirect to keep it.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "memlab/config.hpp"
#include "memlab/csv.hpp"
#include "memlab/engine.hpp"
#include "memlab/presets.hpp"

namespace {

using namespace memlab;

csv::Row run_one(const config::RunConfig& cfg, std::uint32_t n_attackers,
                 const workload::WorkloadSpec& attacker) {
  engine::SimConfig sim = config::experiment_sim(cfg, n_attackers);
  auto result = engine::solo_vs_corun(sim, cfg.victim, attacker, n_attackers,
                                      cfg.laps);
  csv::Row row;
  row.preset = cfg.preset;
  row.victim = workload::kind_name(cfg.victim.kind);
  row.attacker = workload::kind_name(attacker.kind);
  row.n_attackers = n_attackers;
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
  return row;
}

workload::WorkloadSpec attacker_with_kind(const config::RunConfig& cfg,
                                          workload::WorkloadKind kind) {
  workload::WorkloadSpec spec = cfg.attacker;
  spec.kind = kind;
  if (workload::is_bank_aware(kind) && !spec.target_bank) spec.target_bank = 0;
  if (workload::is_list_kind(kind) && spec.mlp == 1)
    spec.mlp = cfg.sim.l1.num_mshrs;
  return spec;
}

int cmd_run(const std::string& path, const std::string& preset) {
  config::RunConfig cfg = config::load_run_config(path, preset);
  std::cout << csv::header() << "\n";
  std::cout << csv::to_line(run_one(cfg, cfg.n_attackers, cfg.attacker)) << "\n";
  return 0;
}

int cmd_sweep(const std::string& path, const std::string& preset,
              const std::string& axis) {
  config::RunConfig cfg = config::load_run_config(path, preset);
  std::cout << csv::header() << "\n";
  if (axis == "attackers") {
    const auto max_n = static_cast<std::uint32_t>(cfg.sim.cores.size() - 1);
    for (std::uint32_t n = 0; n <= max_n; ++n)
      std::cout << csv::to_line(run_one(cfg, n, cfg.attacker)) << "\n";
  } else if (axis == "memfreq") {
    for (std::uint32_t rate = 1000; rate >= 100; rate -= 100) {
      config::RunConfig scaled = cfg;
      scaled.sim.dram.transfer_rate = rate;
      std::cout << csv::to_line(
                       run_one(scaled, scaled.n_attackers, scaled.attacker))
                << "\n";
    }
  } else if (axis == "attacker-kind") {
    for (workload::WorkloadKind kind : workload::all_kinds())
      std::cout << csv::to_line(
                       run_one(cfg, cfg.n_attackers, attacker_with_kind(cfg, kind)))
                << "\n";
  } else {
    std::cerr << "unknown sweep axis: " << axis << "\n";
    return 2;
  }
  return 0;
}

int cmd_mapinspect(const std::string& map_path,
                   const std::vector<std::string>& addrs,
                   const std::string& cfg_path, const std::string& preset) {
  config::MappingFile mf = config::load_mapping_file(map_path);

  for (const std::string& text : addrs) {
    addrmap::PhysAddr addr = std::stoull(text, nullptr, 0);
    auto coord = addrmap::coord_of(mf.geometry, mf.mapping, addr);
    std::printf("addr=0x%llx bank=%u row=%llu col=%llu\n",
                static_cast<unsigned long long>(addr), coord.bank,
                static_cast<unsigned long long>(coord.row),
                static_cast<unsigned long long>(coord.col));
  }
  if (cfg_path.empty()) return 0;

  config::RunConfig cfg = config::load_run_config(cfg_path, preset);
  cfg.sim.dram.mapping = mf.mapping;
  cfg.sim.dram.geometry = mf.geometry;
  workload::AccessProgram prog;
  try {
    prog = engine::build_for_core(cfg.attacker, cfg.sim, 1);
  } catch (const addrmap::BankBitsNotControllable& e) {
    std::printf("error: BankBitsNotControllable: %s\n", e.what());
    return 1;
  }
  auto hist = workload::bank_histogram(prog, mf.mapping, mf.geometry);
  const std::uint64_t llc_bytes = static_cast<std::uint64_t>(cfg.sim.llc.sets) *
                                  cfg.sim.llc.ways * cfg.sim.llc.line_size;
  std::printf("workload %s(%s) nodes=%zu\n",
              workload::kind_name(cfg.attacker.kind),
              workload::working_set_class(cfg.attacker.working_set, llc_bytes),
              prog.nodes.size());
  for (std::uint32_t b = 0; b < hist.size(); ++b)
    std::printf("bank %u: %llu\n", b, static_cast<unsigned long long>(hist[b]));
  if (workload::is_bank_aware(cfg.attacker.kind)) {
    const std::uint64_t on_target = hist[*cfg.attacker.target_bank];
    const bool pure = on_target == prog.nodes.size();
    std::printf("purity: %s %.0f%%\n", pure ? "PASS" : "FAIL",
                100.0 * static_cast<double>(on_target) /
                    static_cast<double>(prog.nodes.size()));
    return pure ? 0 : 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"memory-hierarchy contention laboratory"};
  app.require_subcommand(1);

  std::string cfg_path, preset, axis, map_path;
  std::vector<std::string> addrs;

  CLI::App* run = app.add_subcommand("run", "run one experiment, emit CSV");
  run->add_option("-c,--config", cfg_path, "run config file")->required();
  run->add_option("--preset", preset, "override the [sim] preset");

  CLI::App* sweep = app.add_subcommand("sweep", "sweep one axis, emit CSV");
  sweep->add_option("-c,--config", cfg_path, "run config file")->required();
  sweep->add_option("--axis", axis, "attackers | memfreq | attacker-kind")
      ->required();
  sweep->add_option("--preset", preset, "override the [sim] preset");

  CLI::App* inspect =
      app.add_subcommand("mapinspect", "decode addresses / audit a workload");
  inspect->add_option("-m,--mapping", map_path, "mapping file")->required();
  inspect->add_option("--addr", addrs, "addresses to decode");
  inspect->add_option("-c,--config", cfg_path, "workload config to audit");
  inspect->add_option("--preset", preset, "override the [sim] preset");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(cfg_path, preset);
    if (sweep->parsed()) return cmd_sweep(cfg_path, preset, axis);
    if (inspect->parsed())
      return cmd_mapinspect(map_path, addrs, cfg_path, preset);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
