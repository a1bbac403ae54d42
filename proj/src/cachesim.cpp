#include "memlab/cachesim.hpp"

#include <bit>
#include <stdexcept>
#include <string>

namespace memlab::cachesim {

Cache::Cache(const CacheConfig& config, std::uint32_t num_cores)
    : config_(config) {
  if (config.sets < 1 || config.ways < 1)
    throw std::invalid_argument("cache needs at least one set and way");
  if (config.num_mshrs < 1)
    throw std::invalid_argument("cache needs at least one MSHR");
  if (config.wb_entries < 1)
    throw std::invalid_argument("cache needs at least one writeback entry");
  if (!std::has_single_bit(config.line_size))
    throw std::invalid_argument("line_size must be a power of two");
  if (config.ways > 64)
    throw std::invalid_argument("way count above partition mask width");
  ways_.resize(static_cast<size_t>(config.sets) * config.ways);
  mshrs_.resize(config.num_mshrs);
  partition_.resize(num_cores);
  counters_.resize(num_cores);
}

std::uint32_t Cache::set_of(std::uint64_t line) const {
  return static_cast<std::uint32_t>((line / config_.line_size) % config_.sets);
}

std::uint64_t Cache::tag_of(std::uint64_t line) const {
  return line / config_.line_size / config_.sets;
}

void Cache::refresh_blocked() {
  blocked_ = live_mshrs_ == config_.num_mshrs || wb_.size() == config_.wb_entries;
}

AccessResult Cache::access(std::uint32_t core, std::uint64_t addr,
                           bool is_write, std::uint64_t cycle,
                           const Requester& requester) {
  if (blocked_) {
    ++counters_[core].blocked_rejections;
    return {AccessOutcome::Blocked, 0, -1};
  }

  const std::uint64_t line = line_of(addr);
  const std::uint32_t set = set_of(line);
  const std::uint64_t tag = tag_of(line);

  Way* base = &ways_[static_cast<size_t>(set) * config_.ways];
  for (std::uint32_t w = 0; w < config_.ways; ++w) {
    Way& way = base[w];
    if (way.valid && way.tag == tag) {
      way.stamp = ++stamp_;
      way.dirty = way.dirty || is_write;
      ++counters_[core].hits;
      return {AccessOutcome::Hit, config_.hit_latency, -1};
    }
  }

  ++counters_[core].misses;

  for (std::uint32_t m = 0; m < config_.num_mshrs; ++m) {
    Mshr& e = mshrs_[m];
    if (e.live && e.line == line) {
      e.requesters.push_back(requester);
      e.make_dirty = e.make_dirty || is_write;
      return {AccessOutcome::MergedIntoMshr, 0, static_cast<int>(m)};
    }
  }

  for (std::uint32_t m = 0; m < config_.num_mshrs; ++m) {
    Mshr& e = mshrs_[m];
    if (e.live) continue;
    e.live = true;
    e.line = line;
    e.write_fill = is_write;
    e.make_dirty = is_write;
    e.alloc_cycle = cycle;
    e.requesters.assign(1, requester);
    ++live_mshrs_;
    ++allocations_;
    refresh_blocked();  // the allocation that fills the file blocks the cache
    return {AccessOutcome::MissAllocated, 0, static_cast<int>(m)};
  }

  throw std::logic_error("unblocked cache with no free MSHR");
}

bool Cache::absorb_writeback(std::uint64_t addr) {
  const std::uint64_t line = line_of(addr);
  const std::uint32_t set = set_of(line);
  const std::uint64_t tag = tag_of(line);
  Way* base = &ways_[static_cast<size_t>(set) * config_.ways];
  for (std::uint32_t w = 0; w < config_.ways; ++w) {
    if (base[w].valid && base[w].tag == tag) {
      base[w].dirty = true;
      return true;
    }
  }
  return false;
}

FillOutcome Cache::fill(int mshr_id, std::uint64_t cycle) {
  if (mshr_id < 0 || mshr_id >= static_cast<int>(mshrs_.size()) ||
      !mshrs_[mshr_id].live)
    throw std::invalid_argument("fill of unknown MSHR " + std::to_string(mshr_id));
  Mshr& e = mshrs_[mshr_id];

  const std::uint32_t set = set_of(e.line);
  Way* base = &ways_[static_cast<size_t>(set) * config_.ways];

  std::uint64_t allowed = ~0ull;
  const std::uint32_t owner = e.requesters.front().core;
  if (owner < partition_.size() && partition_[owner]) allowed = *partition_[owner];

  int victim = -1;
  for (std::uint32_t w = 0; w < config_.ways; ++w) {
    if (!(allowed >> w & 1)) continue;
    if (!base[w].valid) {
      victim = static_cast<int>(w);
      break;
    }
  }
  if (victim < 0) {
    std::uint64_t oldest = ~0ull;
    for (std::uint32_t w = 0; w < config_.ways; ++w) {
      if (!(allowed >> w & 1)) continue;
      if (base[w].stamp < oldest) {
        oldest = base[w].stamp;
        victim = static_cast<int>(w);
      }
    }
  }
  if (victim < 0) throw std::logic_error("partition mask selects no way");

  Way& way = base[victim];
  if (way.valid && way.dirty) {
    if (wb_.size() == config_.wb_entries) {
      ++wb_stalls_;
      return {true, std::nullopt, {}, 0};  // retry after a drain
    }
    wb_.push_back({way.tag * config_.sets * config_.line_size +
                       static_cast<std::uint64_t>(set) * config_.line_size,
                   cycle});
  }

  FillOutcome out;
  out.writeback_line = (way.valid && way.dirty)
                           ? std::optional<std::uint64_t>(wb_.back().line)
                           : std::nullopt;
  way.tag = tag_of(e.line);
  way.valid = true;
  way.dirty = e.make_dirty;
  way.stamp = ++stamp_;
  out.install_way = static_cast<std::uint32_t>(victim);
  out.completed = std::move(e.requesters);

  e.live = false;
  e.requesters = {};
  --live_mshrs_;
  refresh_blocked();
  return out;
}

std::optional<std::uint64_t> Cache::wb_eligible() const {
  if (wb_.empty()) return std::nullopt;
  if (live_mshrs_ == 0 || wb_.size() == config_.wb_entries)
    return wb_.front().line;
  return std::nullopt;
}

void Cache::wb_pop() {
  if (wb_.empty()) throw std::logic_error("wb_pop on empty buffer");
  wb_.pop_front();
  refresh_blocked();
}

void Cache::set_partition(std::uint32_t core, std::uint64_t way_mask) {
  if (core >= partition_.size())
    throw std::invalid_argument("partition core out of range");
  const std::uint64_t valid_ways =
      config_.ways == 64 ? ~0ull : (1ull << config_.ways) - 1;
  way_mask &= valid_ways;
  if (way_mask == 0) throw std::invalid_argument("empty partition mask");
  for (std::uint32_t c = 0; c < partition_.size(); ++c) {
    if (c != core && partition_[c] && (*partition_[c] & way_mask))
      throw std::invalid_argument("overlapping partition masks");
  }
  partition_[core] = way_mask;
}

void Cache::clear_partitions() {
  for (auto& p : partition_) p.reset();
}

bool Cache::line_present(std::uint64_t addr) const {
  const std::uint64_t line = line_of(addr);
  const std::uint32_t set = set_of(line);
  const std::uint64_t tag = tag_of(line);
  const Way* base = &ways_[static_cast<size_t>(set) * config_.ways];
  for (std::uint32_t w = 0; w < config_.ways; ++w)
    if (base[w].valid && base[w].tag == tag) return true;
  return false;
}

}  // namespace memlab::cachesim
