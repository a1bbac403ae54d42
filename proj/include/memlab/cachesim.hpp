#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

// Set-associative non-blocking cache with a finite MSHR file and writeback
// buffer. When either structure is full the whole cache is blocked and
// rejects every request from every core until an entry frees. Used for both
// the per-core private L1D and the shared LLC.
//
// The cache is a passive state machine: the owner routes fill requests to the
// next level and calls fill() when data returns, and drains the writeback
// buffer via wb_eligible()/wb_pop() when the next level accepts the write.

namespace memlab::cachesim {

struct CacheConfig {
  std::uint32_t sets = 64;
  std::uint32_t ways = 4;
  std::uint64_t line_size = 64;
  std::uint32_t num_mshrs = 4;   // concurrent outstanding misses (MLP)
  std::uint32_t wb_entries = 4;  // evicted dirty lines awaiting writeback
  std::uint32_t hit_latency = 2;
};

enum class AccessOutcome { Hit, MissAllocated, MergedIntoMshr, Blocked };

struct Requester {
  std::uint32_t core = 0;
  std::uint32_t chain = 0;
  std::uint32_t ordinal = 0;
  std::uint64_t tag = 0;  // owner-defined completion token
};

struct AccessResult {
  AccessOutcome outcome = AccessOutcome::Hit;
  std::uint32_t latency = 0;  // valid for Hit
  int mshr = -1;              // valid for MissAllocated / MergedIntoMshr
};

struct FillOutcome {
  bool deferred = false;  // writeback buffer full; MSHR stays live, retry
  std::optional<std::uint64_t> writeback_line;  // dirty line evicted to the buffer
  std::vector<Requester> completed;
  std::uint32_t install_way = 0;
};

struct Mshr {
  bool live = false;
  std::uint64_t line = 0;
  bool write_fill = false;  // allocated by a store miss
  bool make_dirty = false;  // some requester stores to the line
  std::uint64_t alloc_cycle = 0;
  std::vector<Requester> requesters;
};

struct WbEntry {
  std::uint64_t line = 0;
  std::uint64_t enqueue_cycle = 0;
};

struct CacheCounters {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;  // allocations + merges
  std::uint64_t blocked_rejections = 0;
};

class Cache {
 public:
  Cache(const CacheConfig& config, std::uint32_t num_cores);

  AccessResult access(std::uint32_t core, std::uint64_t addr, bool is_write,
                      std::uint64_t cycle, const Requester& requester);

  // Incoming writeback from the level above: marks a resident line dirty
  // without promoting it (eviction traffic is not a reuse signal). Returns
  // false when the line is not resident.
  bool absorb_writeback(std::uint64_t addr);

  FillOutcome fill(int mshr_id, std::uint64_t cycle);

  // Oldest writeback when the drain policy allows an emission this cycle:
  // no fill in flight, or the buffer is full. At most one per cycle.
  std::optional<std::uint64_t> wb_eligible() const;
  void wb_pop();

  // Fills triggered by this core's misses may only victimize ways in mask.
  void set_partition(std::uint32_t core, std::uint64_t way_mask);
  void clear_partitions();

  bool blocked() const { return blocked_; }
  std::uint32_t live_mshrs() const { return live_mshrs_; }
  std::uint32_t wb_count() const { return static_cast<std::uint32_t>(wb_.size()); }
  const CacheConfig& config() const { return config_; }
  const Mshr& mshr(int id) const { return mshrs_[id]; }

  bool line_present(std::uint64_t addr) const;
  std::uint64_t line_of(std::uint64_t addr) const {
    return addr & ~(config_.line_size - 1);
  }

  const CacheCounters& counters(std::uint32_t core) const {
    return counters_[core];
  }
  std::uint64_t total_allocations() const { return allocations_; }
  std::uint64_t wb_stalls() const { return wb_stalls_; }

 private:
  struct Way {
    std::uint64_t tag = 0;
    std::uint64_t stamp = 0;
    bool valid = false;
    bool dirty = false;
  };

  std::uint32_t set_of(std::uint64_t line) const;
  std::uint64_t tag_of(std::uint64_t line) const;
  void refresh_blocked();

  CacheConfig config_;
  std::vector<Way> ways_;  // sets * ways, row-major by set
  std::vector<Mshr> mshrs_;
  std::deque<WbEntry> wb_;
  std::vector<std::optional<std::uint64_t>> partition_;  // per core
  std::vector<CacheCounters> counters_;
  std::uint64_t stamp_ = 0;
  std::uint64_t allocations_ = 0;
  std::uint64_t wb_stalls_ = 0;
  std::uint32_t live_mshrs_ = 0;
  bool blocked_ = false;
};

}  // namespace memlab::cachesim
