#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "memlab/addrmap.hpp"

// Open-page DRAM with one rank: per-bank row-buffer state, an FR-FCFS
// scheduler that prioritizes row hits within a fixed reorder window, and a
// transfer-rate parameter that scales service times into CPU cycles.

namespace memlab::dramsim {

struct DramTimings {
  std::uint32_t tRCD = 14;
  std::uint32_t tRP = 14;
  std::uint32_t tCL = 14;
  std::uint32_t tBURST = 4;
};

struct DramConfig {
  addrmap::DramGeometry geometry;
  addrmap::AddressMapping mapping = addrmap::AddressMapping::from_mask(
      addrmap::BankMask{{13, 14, 15}});
  DramTimings timings;
  std::uint32_t transfer_rate = 2133;  // MT/s
  std::uint32_t cpu_freq = 2000;       // MHz
  std::uint32_t scheduler_window = 8;
};

void validate_dram_config(const DramConfig& config);

enum class ReqKind { ReadFill, Writeback };

struct MemRequest {
  std::uint64_t id = 0;
  ReqKind kind = ReqKind::ReadFill;
  addrmap::DramCoord coord;
  std::uint64_t arrival = 0;  // visible to the scheduler from arrival+1
};

struct BankState {
  std::optional<std::uint64_t> open_row;
  std::uint64_t busy_until = 0;  // CPU cycle the bank frees
};

struct DramStats {
  std::uint64_t row_hits = 0;
  std::uint64_t row_conflicts = 0;
  std::uint64_t row_closed = 0;
  std::vector<std::uint64_t> bank_reads;
  std::vector<std::uint64_t> bank_writes;
};

// DRAM-cycle to CPU-cycle conversion: the DRAM clock runs at transfer_rate/2
// (double data rate), so one DRAM cycle spans cpu_freq / (transfer_rate / 2)
// CPU cycles, rounded up after multiplying.
std::uint64_t to_cpu_cycles(std::uint64_t dram_cycles, std::uint32_t cpu_freq,
                            std::uint32_t transfer_rate);

class DramSim {
 public:
  explicit DramSim(const DramConfig& config);

  // ids must be fresh; monotonically increasing ids are enforced.
  void enqueue(const MemRequest& req);
  void enqueue(std::uint64_t id, ReqKind kind, addrmap::PhysAddr addr,
               std::uint64_t cycle);

  // Starts at most one request, and no sooner than tBURST after the previous
  // start (shared data bus). Considers the scheduler_window oldest visible
  // requests; among those whose bank is idle picks the oldest row hit, else
  // the oldest.
  std::optional<std::uint64_t> schedule(std::uint64_t cycle);

  // Requests whose service completed by `cycle`; the serviced row stays open.
  std::vector<std::pair<std::uint64_t, ReqKind>> complete(std::uint64_t cycle);

  // CPU-cycle cost of servicing coord given the bank's current row state.
  std::uint64_t service_time(const BankState& bank,
                             const addrmap::DramCoord& coord) const;

  bool busy() const { return !pending_.empty() || in_service_ > 0; }
  std::size_t pending() const { return pending_.size(); }

  // Earliest future cycle at which the DRAM state can change on its own
  // (a bank freeing or a queued request becoming visible).
  std::uint64_t next_event() const;

  const DramStats& stats() const { return stats_; }
  const DramConfig& config() const { return config_; }
  const BankState& bank(std::uint32_t b) const { return banks_[b]; }

 private:
  struct Active {
    std::uint64_t id = 0;
    ReqKind kind = ReqKind::ReadFill;
    std::uint64_t row = 0;
    std::uint64_t finish = 0;
    bool live = false;
  };

  DramConfig config_;
  std::deque<MemRequest> pending_;  // arrival order
  std::vector<BankState> banks_;
  std::vector<Active> active_;  // per bank
  DramStats stats_;
  std::uint64_t last_id_ = 0;
  std::uint64_t next_start_ok_ = 0;  // data-bus free again at this cycle
  bool any_id_ = false;
  std::uint32_t in_service_ = 0;
};

}  // namespace memlab::dramsim
