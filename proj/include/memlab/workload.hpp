#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memlab/addrmap.hpp"

// Generators for the six attacker programs and the synthetic victims, as
// dependency-annotated memory access streams.
//
//   SeqRead/SeqWrite    stream over a contiguous buffer, no dependencies
//   PllRead/PllWrite    mlp pointer chains shuffled over the working set
//   BkPllRead/BkPllWrite  pointer chains whose nodes all sit on one DRAM bank
//
// Write-kind list programs store to the visited line and then perform the
// dependent pointer load from the same line.

namespace memlab::workload {

enum class WorkloadKind {
  SeqRead,
  SeqWrite,
  PllRead,
  PllWrite,
  BkPllRead,
  BkPllWrite,
};

bool is_write_kind(WorkloadKind k);
bool is_list_kind(WorkloadKind k);   // Pll* or BkPll*
bool is_bank_aware(WorkloadKind k);  // BkPll*

const char* kind_name(WorkloadKind k);
std::optional<WorkloadKind> kind_from_name(const std::string& name);
std::vector<WorkloadKind> all_kinds();

// Working-set class relative to a machine: "LLC" when the set fits in the
// shared cache, "DRAM" when it does not.
const char* working_set_class(std::uint64_t working_set, std::uint64_t llc_bytes);

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::SeqRead;
  std::uint64_t working_set = 1 << 20;  // bytes touched, multiple of line_size
  std::uint64_t line_size = 64;
  std::uint32_t mlp = 1;  // chain count; ignored for Seq* kinds
  std::optional<std::uint32_t> target_bank;
  std::uint64_t seed = 0;
  std::uint64_t iterations = 1;  // default lap count when run standalone
};

struct AccessNode {
  addrmap::PhysAddr addr = 0;  // line aligned
  std::uint32_t chain = 0;
  std::uint32_t ordinal = 0;  // visit order within the chain
  bool is_write = false;      // visit includes a store
};

struct AccessProgram {
  std::vector<AccessNode> nodes;  // sorted by (chain, ordinal)
  std::vector<std::uint32_t> chain_offsets;  // chain c = [offsets[c], offsets[c+1])
  std::uint32_t chain_count = 0;
  std::uint64_t line_size = 64;
  std::uint64_t laps = 1;
  bool dependent_chains = false;  // node k+1 issues only after node k completes
  bool write_visits = false;      // store + dependent load per visit

  std::uint32_t chain_size(std::uint32_t chain) const {
    return chain_offsets[chain + 1] - chain_offsets[chain];
  }
  const AccessNode& node(std::uint32_t chain, std::uint32_t ordinal) const {
    return nodes[chain_offsets[chain] + ordinal];
  }
};

AccessProgram build_sequential(const WorkloadSpec& spec);

// candidates: line addresses the chains may occupy. Unconstrained kinds pass
// the full line enumeration of their region; bank-aware kinds pass
// same_bank_lines() output. Needs at least working_set / line_size entries.
AccessProgram build_parallel_lists(const WorkloadSpec& spec,
                                   std::span<const addrmap::PhysAddr> candidates);

// Shifts every node address by a 2 MiB-aligned offset. Bank bits below the
// hugepage offset width are unaffected.
AccessProgram rebased(const AccessProgram& program, std::uint64_t offset);

struct ProgressState {
  struct Chain {
    std::uint32_t next = 0;     // ordinal of the next unissued node
    bool in_flight = false;     // an access of this chain is outstanding
  };
  std::vector<Chain> chains;
};

struct NodeRef {
  std::uint32_t chain = 0;
  std::uint32_t ordinal = 0;
};

// Next issuable node per chain under the program's dependency rule. For
// dependent chains at most one node per chain, only once the predecessor
// completed; sequential programs always expose the next ordinal.
std::vector<NodeRef> ready_set(const AccessProgram& program,
                               const ProgressState& state);

std::vector<std::uint64_t> bank_histogram(const AccessProgram& program,
                                          const addrmap::AddressMapping& mapping,
                                          const addrmap::DramGeometry& geom);

// One line per node: "chain=<c> ord=<k> addr=0x<hex> w=<0|1>".
void dump_program(const AccessProgram& program, std::ostream& os);

}  // namespace memlab::workload
