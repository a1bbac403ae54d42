#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "memlab/config.hpp"
#include "memlab/engine.hpp"
#include "memlab/presets.hpp"

namespace py = pybind11;
using namespace memlab;

namespace {

engine::SimConfig preset_or_throw(const std::string& name) {
  return presets::make_preset(name);
}

}  // namespace

PYBIND11_MODULE(_memlab, m) {
  m.doc() = "memory-hierarchy contention laboratory";

  // --- address mapping ------------------------------------------------------
  py::class_<addrmap::AddressMapping>(m, "AddressMapping")
      .def_static("from_mask",
                  [](const std::vector<int>& bits) {
                    return addrmap::AddressMapping::from_mask({bits});
                  },
                  py::arg("bits"))
      .def_static("from_xor",
                  [](const std::vector<std::vector<int>>& fns) {
                    return addrmap::AddressMapping::from_xor({fns});
                  },
                  py::arg("functions"))
      .def("bank_of", &addrmap::AddressMapping::bank_of, py::arg("addr"))
      .def_property_readonly("bank_bits", &addrmap::AddressMapping::bank_bits)
      .def_property_readonly("num_banks", &addrmap::AddressMapping::num_banks);

  py::class_<addrmap::DramGeometry>(m, "DramGeometry")
      .def(py::init([](std::uint32_t banks, std::uint64_t row_size,
                       std::uint64_t line_size) {
             addrmap::DramGeometry g{banks, row_size, line_size};
             addrmap::validate_geometry(g);
             return g;
           }),
           py::arg("num_banks"), py::arg("row_size") = 2048,
           py::arg("line_size") = 64)
      .def_readonly("num_banks", &addrmap::DramGeometry::num_banks)
      .def_readonly("row_size", &addrmap::DramGeometry::row_size)
      .def_readonly("line_size", &addrmap::DramGeometry::line_size);

  m.def("coord_of",
        [](const addrmap::DramGeometry& geom,
           const addrmap::AddressMapping& mapping, std::uint64_t addr) {
          auto c = addrmap::coord_of(geom, mapping, addr);
          return py::make_tuple(c.bank, c.row, c.col);
        },
        py::arg("geometry"), py::arg("mapping"), py::arg("addr"),
        "decode a physical address to (bank, row, col)");

  m.def("same_bank_lines",
        [](std::uint64_t base, std::uint64_t size,
           const addrmap::AddressMapping& mapping,
           const addrmap::DramGeometry& geom, std::uint32_t target) {
          return addrmap::same_bank_lines({base, size}, mapping, geom, target);
        },
        py::arg("base"), py::arg("size"), py::arg("mapping"),
        py::arg("geometry"), py::arg("target_bank"),
        "line addresses inside a hugepage region that land on one bank");

  m.def("controllable_bits", [](std::uint64_t page) {
    auto r = addrmap::controllable_bits(page);
    return py::make_tuple(r.lo, r.hi);
  });

  py::register_exception<addrmap::BankBitsNotControllable>(
      m, "BankBitsNotControllable");

  // --- workloads ------------------------------------------------------------
  py::enum_<workload::WorkloadKind>(m, "WorkloadKind")
      .value("SeqRead", workload::WorkloadKind::SeqRead)
      .value("SeqWrite", workload::WorkloadKind::SeqWrite)
      .value("PllRead", workload::WorkloadKind::PllRead)
      .value("PllWrite", workload::WorkloadKind::PllWrite)
      .value("BkPllRead", workload::WorkloadKind::BkPllRead)
      .value("BkPllWrite", workload::WorkloadKind::BkPllWrite);

  py::class_<workload::WorkloadSpec>(m, "WorkloadSpec")
      .def(py::init([](workload::WorkloadKind kind, std::uint64_t working_set,
                       std::uint32_t mlp, std::optional<std::uint32_t> target_bank,
                       std::uint64_t seed, std::uint64_t line_size) {
             workload::WorkloadSpec spec{kind, working_set, line_size,
                                         mlp,  target_bank, seed,  1};
             return spec;
           }),
           py::arg("kind"), py::arg("working_set"), py::arg("mlp") = 1,
           py::arg("target_bank") = std::nullopt, py::arg("seed") = 0,
           py::arg("line_size") = 64)
      .def_readwrite("kind", &workload::WorkloadSpec::kind)
      .def_readwrite("working_set", &workload::WorkloadSpec::working_set)
      .def_readwrite("mlp", &workload::WorkloadSpec::mlp)
      .def_readwrite("target_bank", &workload::WorkloadSpec::target_bank)
      .def_readwrite("seed", &workload::WorkloadSpec::seed);

  py::class_<workload::AccessProgram>(m, "AccessProgram")
      .def_property_readonly(
          "addresses",
          [](const workload::AccessProgram& p) {
            std::vector<std::uint64_t> out;
            out.reserve(p.nodes.size());
            for (const auto& n : p.nodes) out.push_back(n.addr);
            return out;
          })
      .def_property_readonly("chain_count",
                             [](const workload::AccessProgram& p) {
                               return p.chain_count;
                             })
      .def("dump", [](const workload::AccessProgram& p) {
        std::ostringstream os;
        workload::dump_program(p, os);
        return os.str();
      });

  m.def("bank_histogram",
        [](const workload::AccessProgram& prog,
           const addrmap::AddressMapping& mapping,
           const addrmap::DramGeometry& geom) {
          return workload::bank_histogram(prog, mapping, geom);
        });

  // --- machine models and experiments ---------------------------------------
  py::class_<engine::SimConfig>(m, "SimConfig")
      .def_property_readonly(
          "num_cores",
          [](const engine::SimConfig& sim) { return sim.cores.size(); })
      .def_property_readonly("llc_mshrs",
                             [](const engine::SimConfig& sim) {
                               return sim.llc.num_mshrs;
                             })
      .def_property_readonly("transfer_rate",
                             [](const engine::SimConfig& sim) {
                               return sim.dram.transfer_rate;
                             })
      .def("set_transfer_rate",
           [](engine::SimConfig& sim, std::uint32_t rate) {
             sim.dram.transfer_rate = rate;
             dramsim::validate_dram_config(sim.dram);
           })
      .def("set_llc_mshrs",
           [](engine::SimConfig& sim, std::uint32_t n) {
             sim.llc.num_mshrs = n;
           })
      .def("set_in_order",
           [](engine::SimConfig& sim, std::uint32_t core, bool flag) {
             sim.cores.at(core).in_order = flag;
           })
      .def("set_throttle",
           [](engine::SimConfig& sim, std::uint32_t core, std::uint32_t budget) {
             sim.cores.at(core).throttle = budget;
           })
      .def("partition_evenly", [](engine::SimConfig& sim) {
        const auto n = static_cast<std::uint32_t>(sim.cores.size());
        const std::uint32_t per = sim.llc.ways / n;
        if (per == 0) throw std::invalid_argument("fewer ways than cores");
        sim.llc_partition.assign(n, 0);
        for (std::uint32_t c = 0; c < n; ++c)
          sim.llc_partition[c] = ((1ull << per) - 1) << (c * per);
      });

  m.def("preset_names", &presets::preset_names);
  m.def("make_preset", &preset_or_throw, py::arg("name"));

  m.def("build_for_core", &engine::build_for_core, py::arg("spec"),
        py::arg("sim"), py::arg("core"),
        "program for a workload placed on a core, bank-aware kinds included");

  py::class_<engine::ExperimentResult>(m, "ExperimentResult")
      .def_readonly("solo_cycles_per_iter",
                    &engine::ExperimentResult::solo_cycles_per_iter)
      .def_readonly("corun_cycles_per_iter",
                    &engine::ExperimentResult::corun_cycles_per_iter)
      .def_readonly("slowdown", &engine::ExperimentResult::slowdown)
      .def_property_readonly("victim_blocked_cycles",
                             [](const engine::ExperimentResult& r) {
                               return r.corun.core[0].blocked_cycles;
                             })
      .def_property_readonly("victim_llc_misses",
                             [](const engine::ExperimentResult& r) {
                               return r.corun.core[0].llc_misses;
                             });

  m.def("solo_vs_corun", &engine::solo_vs_corun, py::arg("sim"),
        py::arg("victim"), py::arg("attacker"), py::arg("n_attackers"),
        py::arg("laps") = 4, py::arg("warmup_laps") = 1,
        "run the victim alone and alongside attackers; slowdown is the "
        "co-run to solo cycles-per-lap ratio");

  m.def("sweep_memfreq", &engine::sweep_memfreq, py::arg("sim"),
        py::arg("victim"), py::arg("attacker"), py::arg("n_attackers"),
        py::arg("laps"), py::arg("rates"), py::arg("warmup_laps") = 1);
}
