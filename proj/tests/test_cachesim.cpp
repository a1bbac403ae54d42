#include <random>
#include <stdexcept>

#include "doctest.h"
#include "memlab/cachesim.hpp"

using namespace memlab::cachesim;

namespace {

Requester req(std::uint32_t core) { return {core, 0, 0, 0}; }

CacheConfig small_config(std::uint32_t mshrs, std::uint32_t wb = 4) {
  return {4, 2, 64, mshrs, wb, 2};
}

}  // namespace

TEST_CASE("cold miss allocates one MSHR") {
  Cache cache(small_config(4), 1);
  auto r = cache.access(0, 0x1000, false, 0, req(0));
  CHECK(r.outcome == AccessOutcome::MissAllocated);
  CHECK(cache.live_mshrs() == 1);
  CHECK_FALSE(cache.blocked());
}

TEST_CASE("MSHR exhaustion blocks the whole cache") {
  Cache cache(small_config(2), 2);
  CHECK(cache.access(0, 0x0000, false, 0, req(0)).outcome ==
        AccessOutcome::MissAllocated);
  CHECK(cache.access(0, 0x4000, false, 0, req(0)).outcome ==
        AccessOutcome::MissAllocated);
  CHECK(cache.blocked());  // second allocation filled the file

  auto third = cache.access(0, 0x8000, false, 1, req(0));
  CHECK(third.outcome == AccessOutcome::Blocked);
  CHECK(cache.live_mshrs() == 2);

  // while blocked, even a would-hit access from another core is rejected
  auto hit_try = cache.access(1, 0x0000, false, 1, req(1));
  CHECK(hit_try.outcome == AccessOutcome::Blocked);
  CHECK(cache.counters(1).blocked_rejections == 1);
}

TEST_CASE("k+1-th distinct miss blocks at exactly k MSHRs") {
  for (std::uint32_t k : {1u, 2u, 5u, 11u}) {
    Cache cache({64, 8, 64, k, 8, 2}, 1);
    for (std::uint32_t i = 0; i < k; ++i)
      CHECK(cache.access(0, 0x10000ull * i, false, i, req(0)).outcome ==
            AccessOutcome::MissAllocated);
    CHECK(cache.blocked());
    CHECK(cache.access(0, 0x10000ull * k, false, k, req(0)).outcome ==
          AccessOutcome::Blocked);
  }
}

TEST_CASE("second miss to a pending line merges") {
  Cache cache(small_config(2), 2);
  auto first = cache.access(0, 0x2000, false, 0, req(0));
  REQUIRE(first.outcome == AccessOutcome::MissAllocated);
  auto second = cache.access(1, 0x2010, false, 0, req(1));  // same line
  CHECK(second.outcome == AccessOutcome::MergedIntoMshr);
  CHECK(second.mshr == first.mshr);
  CHECK(cache.live_mshrs() == 1);

  auto out = cache.fill(first.mshr, 5);
  CHECK_FALSE(out.deferred);
  REQUIRE(out.completed.size() == 2);  // both requesters complete together
  CHECK(out.completed[0].core == 0);
  CHECK(out.completed[1].core == 1);
  CHECK(cache.live_mshrs() == 0);
}

TEST_CASE("hit updates LRU and write sets dirty") {
  Cache cache(small_config(4), 1);
  auto miss = cache.access(0, 0x0, true, 0, req(0));
  cache.fill(miss.mshr, 1);
  auto hit = cache.access(0, 0x0, false, 2, req(0));
  CHECK(hit.outcome == AccessOutcome::Hit);
  CHECK(hit.latency == 2);
  CHECK(cache.counters(0).hits == 1);
}

TEST_CASE("fill into an invalid way evicts nothing") {
  Cache cache(small_config(4), 1);
  auto miss = cache.access(0, 0x0, false, 0, req(0));
  auto out = cache.fill(miss.mshr, 1);
  CHECK_FALSE(out.deferred);
  CHECK_FALSE(out.writeback_line.has_value());
  CHECK(cache.line_present(0x0));
}

TEST_CASE("dirty eviction enqueues a writeback") {
  // 4 sets, 2 ways: lines 0x000 and 0x200 and 0x400 share set 0
  Cache cache(small_config(4, 2), 1);
  auto a = cache.access(0, 0x000, true, 0, req(0));
  cache.fill(a.mshr, 0);
  auto b = cache.access(0, 0x200, true, 1, req(0));
  cache.fill(b.mshr, 1);
  auto c = cache.access(0, 0x400, false, 2, req(0));
  auto out = cache.fill(c.mshr, 2);
  CHECK_FALSE(out.deferred);
  REQUIRE(out.writeback_line.has_value());
  CHECK(*out.writeback_line == 0x000);  // LRU of the two dirty lines
  CHECK(cache.wb_count() == 1);
}

TEST_CASE("fill defers while the writeback buffer is full") {
  Cache cache({1, 1, 64, 4, 1, 2}, 1);  // direct-mapped, single wb entry
  auto a = cache.access(0, 0x000, true, 0, req(0));
  cache.fill(a.mshr, 0);

  // queue two more misses while the cache is still open
  auto b = cache.access(0, 0x040, true, 1, req(0));
  REQUIRE(b.outcome == AccessOutcome::MissAllocated);
  auto c = cache.access(0, 0x080, false, 1, req(0));
  REQUIRE(c.outcome == AccessOutcome::MissAllocated);

  auto out1 = cache.fill(b.mshr, 2);  // evicts dirty 0x000, buffer now full
  CHECK_FALSE(out1.deferred);
  CHECK(cache.wb_count() == 1);
  CHECK(cache.blocked());
  CHECK(cache.access(0, 0x0c0, false, 2, req(0)).outcome ==
        AccessOutcome::Blocked);

  auto deferred = cache.fill(c.mshr, 3);  // dirty victim, buffer full
  CHECK(deferred.deferred);
  CHECK(cache.live_mshrs() == 1);
  CHECK(cache.wb_stalls() == 1);

  REQUIRE(cache.wb_eligible().has_value());  // full buffer is always drainable
  cache.wb_pop();
  auto retry = cache.fill(c.mshr, 4);  // completes the cycle after a drain
  CHECK_FALSE(retry.deferred);
  CHECK(cache.live_mshrs() == 0);
}

TEST_CASE("writeback drain policy") {
  Cache cache({1, 2, 64, 2, 2, 2}, 1);

  // dirty a line and evict it to get one wb entry
  auto a = cache.access(0, 0x000, true, 0, req(0));
  cache.fill(a.mshr, 0);
  auto b = cache.access(0, 0x040, true, 1, req(0));
  cache.fill(b.mshr, 1);
  auto c = cache.access(0, 0x080, false, 2, req(0));
  auto out = cache.fill(c.mshr, 2);
  REQUIRE(out.writeback_line.has_value());
  REQUIRE(cache.wb_count() == 1);

  // no fill in flight: eligible
  CHECK(cache.wb_eligible().has_value());

  // one live fill holds the writeback back
  auto d = cache.access(0, 0x0c0, false, 3, req(0));
  auto f = cache.access(0, 0x100, false, 3, req(0));
  REQUIRE(f.outcome == AccessOutcome::MissAllocated);
  CHECK_FALSE(cache.wb_eligible().has_value());

  // full buffer emits even with a read pending
  auto e = cache.fill(d.mshr, 4);  // evicts dirty 0x040 -> buffer full
  REQUIRE(e.writeback_line.has_value());
  REQUIRE(cache.wb_count() == 2);
  CHECK(cache.live_mshrs() == 1);  // f still outstanding
  CHECK(cache.wb_eligible().has_value());
}

TEST_CASE("partition masks restrict victim selection") {
  CacheConfig cfg{1, 4, 64, 4, 4, 2};
  Cache cache(cfg, 2);
  cache.set_partition(0, 0x3);  // ways 0-1
  cache.set_partition(1, 0xc);  // ways 2-3

  // core 0 fills two lines, core 1 fills four; core 1 must never evict core 0
  std::vector<std::uint64_t> core0 = {0x000, 0x040};
  for (auto addr : core0) {
    auto r = cache.access(0, addr, false, 0, req(0));
    cache.fill(r.mshr, 0);
  }
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    std::uint64_t addr = 0x1000 + 64ull * (rng() % 64);
    auto r = cache.access(1, addr, false, i, req(1));
    if (r.outcome == AccessOutcome::MissAllocated) cache.fill(r.mshr, i);
    for (auto keep : core0) REQUIRE(cache.line_present(keep));
  }
}

TEST_CASE("partition validation") {
  Cache cache({1, 4, 64, 2, 2, 2}, 2);
  CHECK_THROWS_AS(cache.set_partition(0, 0), std::invalid_argument);
  cache.set_partition(0, 0x3);
  CHECK_THROWS_AS(cache.set_partition(1, 0x2), std::invalid_argument);
  CHECK_NOTHROW(cache.set_partition(1, 0xc));
}

TEST_CASE("a full-ownership partition behaves like no partition") {
  CacheConfig cfg{2, 2, 64, 2, 2, 2};
  Cache plain(cfg, 1);
  Cache owned(cfg, 1);
  owned.set_partition(0, 0x3);

  std::mt19937_64 rng(9);
  for (int i = 0; i < 500; ++i) {
    std::uint64_t addr = 64ull * (rng() % 16);
    bool write = rng() % 2;
    auto a = plain.access(0, addr, write, i, req(0));
    auto b = owned.access(0, addr, write, i, req(0));
    REQUIRE(a.outcome == b.outcome);
    if (a.outcome == AccessOutcome::MissAllocated) {
      auto fa = plain.fill(a.mshr, i);
      auto fb = owned.fill(b.mshr, i);
      REQUIRE(fa.writeback_line == fb.writeback_line);
      if (plain.wb_count() > 0) {
        plain.wb_pop();
        owned.wb_pop();
      }
    }
  }
  CHECK(plain.counters(0).hits == owned.counters(0).hits);
  CHECK(plain.counters(0).misses == owned.counters(0).misses);
}

TEST_CASE("blocked flag always mirrors structure occupancy") {
  Cache cache(small_config(2, 2), 1);
  std::mt19937_64 rng(4);
  std::vector<int> live;
  for (int step = 0; step < 2000; ++step) {
    CHECK(cache.blocked() == (cache.live_mshrs() == 2 || cache.wb_count() == 2));
    switch (rng() % 3) {
      case 0: {
        auto r = cache.access(0, 64ull * (rng() % 32), rng() % 2, step, req(0));
        if (r.outcome == AccessOutcome::MissAllocated) live.push_back(r.mshr);
        break;
      }
      case 1:
        if (!live.empty()) {
          int id = live.back();
          if (!cache.fill(id, step).deferred) live.pop_back();
        }
        break;
      default:
        if (cache.wb_eligible()) cache.wb_pop();
    }
  }
}
