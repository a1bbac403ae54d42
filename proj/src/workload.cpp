#include "memlab/workload.hpp"

#include <algorithm>
#include <ostream>
#include <random>

namespace memlab::workload {

bool is_write_kind(WorkloadKind k) {
  return k == WorkloadKind::SeqWrite || k == WorkloadKind::PllWrite ||
         k == WorkloadKind::BkPllWrite;
}

bool is_list_kind(WorkloadKind k) {
  return k != WorkloadKind::SeqRead && k != WorkloadKind::SeqWrite;
}

bool is_bank_aware(WorkloadKind k) {
  return k == WorkloadKind::BkPllRead || k == WorkloadKind::BkPllWrite;
}

const char* kind_name(WorkloadKind k) {
  switch (k) {
    case WorkloadKind::SeqRead: return "seqread";
    case WorkloadKind::SeqWrite: return "seqwrite";
    case WorkloadKind::PllRead: return "pllread";
    case WorkloadKind::PllWrite: return "pllwrite";
    case WorkloadKind::BkPllRead: return "bkpllread";
    case WorkloadKind::BkPllWrite: return "bkpllwrite";
  }
  return "?";
}

std::optional<WorkloadKind> kind_from_name(const std::string& name) {
  for (WorkloadKind k : all_kinds())
    if (name == kind_name(k)) return k;
  return std::nullopt;
}

std::vector<WorkloadKind> all_kinds() {
  return {WorkloadKind::SeqRead,   WorkloadKind::SeqWrite,
          WorkloadKind::PllRead,   WorkloadKind::PllWrite,
          WorkloadKind::BkPllRead, WorkloadKind::BkPllWrite};
}

const char* working_set_class(std::uint64_t working_set,
                              std::uint64_t llc_bytes) {
  return working_set <= llc_bytes ? "LLC" : "DRAM";
}

namespace {

void validate_spec(const WorkloadSpec& spec) {
  if (spec.line_size == 0 || spec.working_set < spec.line_size)
    throw std::invalid_argument("working_set smaller than line_size");
  if (spec.working_set % spec.line_size != 0)
    throw std::invalid_argument("working_set must be a multiple of line_size");
  if (spec.mlp < 1) throw std::invalid_argument("mlp must be >= 1");
  if (is_bank_aware(spec.kind) && !spec.target_bank)
    throw std::invalid_argument("bank-aware workload needs a target bank");
}

// Sattolo's algorithm: a uniformly random cyclic permutation. Walking the
// cycle visits every element exactly once before returning to the start.
std::vector<std::uint32_t> sattolo_cycle(std::uint32_t n, std::mt19937_64& rng) {
  std::vector<std::uint32_t> next(n);
  for (std::uint32_t i = 0; i < n; ++i) next[i] = i;
  for (std::uint32_t i = n - 1; i >= 1; --i) {
    std::uint32_t j = static_cast<std::uint32_t>(rng() % i);  // j < i
    std::swap(next[i], next[j]);
  }
  return next;
}

}  // namespace

AccessProgram build_sequential(const WorkloadSpec& spec) {
  validate_spec(spec);
  if (is_list_kind(spec.kind))
    throw std::invalid_argument("build_sequential: not a sequential kind");

  const std::uint32_t n =
      static_cast<std::uint32_t>(spec.working_set / spec.line_size);
  const bool write = is_write_kind(spec.kind);

  AccessProgram prog;
  prog.nodes.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i)
    prog.nodes.push_back({i * spec.line_size, 0, i, write});
  prog.chain_offsets = {0, n};
  prog.chain_count = 1;
  prog.line_size = spec.line_size;
  prog.laps = spec.iterations;
  prog.dependent_chains = false;
  prog.write_visits = false;  // sequential writes are plain stores
  return prog;
}

AccessProgram build_parallel_lists(const WorkloadSpec& spec,
                                   std::span<const addrmap::PhysAddr> candidates) {
  validate_spec(spec);
  if (!is_list_kind(spec.kind))
    throw std::invalid_argument("build_parallel_lists: not a list kind");

  const std::uint32_t n =
      static_cast<std::uint32_t>(spec.working_set / spec.line_size);
  if (candidates.size() < n)
    throw std::invalid_argument("placer supplied " +
                                std::to_string(candidates.size()) +
                                " candidate lines, need " + std::to_string(n));
  if (spec.mlp > n)
    throw std::invalid_argument("mlp exceeds line count");

  std::mt19937_64 rng(spec.seed);

  // Random draw of n lines, then a random partition into mlp chains.
  std::vector<addrmap::PhysAddr> pool(candidates.begin(), candidates.end());
  for (std::uint32_t i = 0; i < n; ++i) {
    std::uint64_t j = i + rng() % (pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(n);

  const bool write = is_write_kind(spec.kind);
  AccessProgram prog;
  prog.nodes.reserve(n);
  prog.chain_offsets.assign(1, 0);
  prog.chain_count = spec.mlp;
  prog.line_size = spec.line_size;
  prog.laps = spec.iterations;
  prog.dependent_chains = true;
  prog.write_visits = write;

  std::uint32_t taken = 0;
  for (std::uint32_t c = 0; c < spec.mlp; ++c) {
    std::uint32_t size = n / spec.mlp + (c < n % spec.mlp ? 1 : 0);
    std::span<const addrmap::PhysAddr> lines(pool.data() + taken, size);
    if (size == 1) {
      prog.nodes.push_back({lines[0], c, 0, write});
    } else {
      auto next = sattolo_cycle(size, rng);
      std::uint32_t at = 0;
      for (std::uint32_t k = 0; k < size; ++k) {
        prog.nodes.push_back({lines[at], c, k, write});
        at = next[at];
      }
    }
    taken += size;
    prog.chain_offsets.push_back(taken);
  }
  return prog;
}

AccessProgram rebased(const AccessProgram& program, std::uint64_t offset) {
  if (offset % (1ull << addrmap::kHugePageBits) != 0)
    throw std::invalid_argument("rebase offset must be 2 MiB aligned");
  AccessProgram out = program;
  for (auto& node : out.nodes) node.addr += offset;
  return out;
}

std::vector<NodeRef> ready_set(const AccessProgram& program,
                               const ProgressState& state) {
  if (state.chains.size() != program.chain_count)
    throw std::invalid_argument("progress state chain count mismatch");
  std::vector<NodeRef> ready;
  for (std::uint32_t c = 0; c < program.chain_count; ++c) {
    const auto& ch = state.chains[c];
    if (ch.next >= program.chain_size(c)) continue;
    if (program.dependent_chains && ch.in_flight) continue;
    ready.push_back({c, ch.next});
  }
  return ready;
}

std::vector<std::uint64_t> bank_histogram(const AccessProgram& program,
                                          const addrmap::AddressMapping& mapping,
                                          const addrmap::DramGeometry& geom) {
  if (mapping.num_banks() != geom.num_banks)
    throw std::invalid_argument("mapping bank-bit count disagrees with geometry");
  std::vector<std::uint64_t> hist(geom.num_banks, 0);
  for (const auto& node : program.nodes) ++hist[mapping.bank_of(node.addr)];
  return hist;
}

void dump_program(const AccessProgram& program, std::ostream& os) {
  char buf[96];
  for (const auto& node : program.nodes) {
    std::snprintf(buf, sizeof buf, "chain=%u ord=%u addr=0x%llx w=%d\n",
                  node.chain, node.ordinal,
                  static_cast<unsigned long long>(node.addr),
                  node.is_write ? 1 : 0);
    os << buf;
  }
}

}  // namespace memlab::workload
