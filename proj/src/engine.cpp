#include "memlab/engine.hpp"

#include <algorithm>
#include <deque>
#include <memory>
#include <queue>
#include <stdexcept>
#include <unordered_map>

namespace memlab::engine {

namespace {

constexpr std::uint64_t kThrottleEpoch = 1000;
constexpr std::uint64_t kCoreRegionStride = 1ull << 30;
constexpr std::uint64_t kCycleLimit = 1ull << 40;
constexpr std::uint64_t kWbTag = ~0ull;
constexpr std::uint64_t kNoEvent = ~0ull;

// What a completing access means for the chain cursor.
enum UopKind : std::uint32_t {
  kSingle = 0,  // whole visit (reads, sequential writes)
  kStore = 1,   // store half of a write visit
  kLoad = 2,    // dependent load half of a write visit
};

struct RetireEvent {
  std::uint64_t due = 0;
  std::uint64_t seq = 0;
  std::uint32_t core = 0;
  std::uint32_t chain = 0;
  std::uint32_t kind = kSingle;
};

struct ResponseEvent {
  std::uint64_t due = 0;
  std::uint64_t seq = 0;
  std::uint32_t core = 0;
  std::uint32_t l1_mshr = 0;
};

template <typename T>
struct DueOrder {
  bool operator()(const T& a, const T& b) const {
    return a.due != b.due ? a.due > b.due : a.seq > b.seq;
  }
};

struct ChainRun {
  std::uint32_t next_ord = 0;
  std::uint64_t laps = 0;
  bool outstanding = false;
  bool load_phase = false;  // store retired, dependent load not yet issued
};

struct CoreState {
  const workload::AccessProgram* prog = nullptr;
  CoreConfig cfg;
  std::unique_ptr<cachesim::Cache> l1;
  std::vector<ChainRun> chains;
  std::uint64_t seq_issued = 0;
  std::uint64_t seq_completed = 0;
  std::uint64_t laps = 0;
  std::uint64_t lap_limit = ~0ull;  // victim stops issuing past this
  std::uint32_t inflight = 0;
  std::uint64_t epoch = ~0ull;
  std::uint32_t epoch_llc_bound = 0;
  bool throttled_now = false;
  bool blocked_now = false;
  bool issued_now = false;
  std::deque<std::uint32_t> l1_fills;     // L1 MSHRs with data waiting to install
  std::deque<std::uint32_t> llc_retries;  // forwards rejected by a blocked LLC
  // engine-side counters
  std::uint64_t issued = 0;
  std::uint64_t completed = 0;
  std::uint64_t blocked_cycles = 0;
  std::uint64_t stall_cycles = 0;
};

class Simulation {
 public:
  Simulation(const SimConfig& sim,
             const std::vector<std::optional<workload::AccessProgram>>& programs,
             std::uint64_t stop_laps, std::uint64_t warmup_laps)
      : sim_(sim), llc_(sim.llc, static_cast<std::uint32_t>(sim.cores.size())),
        dram_(sim.dram), stop_laps_(stop_laps), warmup_(warmup_laps) {
    validate_sim_config(sim);
    if (stop_laps < 1) throw std::invalid_argument("stop_laps must be >= 1");
    if (warmup_laps >= stop_laps && stop_laps > 1)
      throw std::invalid_argument("warmup_laps must leave laps to measure");
    if (stop_laps == 1) warmup_ = 0;
    if (programs.size() > sim.cores.size())
      throw std::invalid_argument("more programs than cores");
    if (programs.empty() || !programs[0])
      throw std::invalid_argument("core 0 must host the victim program");

    const std::uint32_t n = static_cast<std::uint32_t>(sim.cores.size());
    for (std::uint32_t c = 0; c < sim.llc_partition.size(); ++c)
      llc_.set_partition(c, sim.llc_partition[c]);

    cores_.resize(n);
    for (std::uint32_t c = 0; c < n; ++c) {
      CoreState& cs = cores_[c];
      cs.cfg = sim.cores[c];
      if (cs.cfg.in_order) cs.cfg.window = 1;
      cs.l1 = std::make_unique<cachesim::Cache>(sim.l1, n);
      if (c < programs.size() && programs[c]) {
        cs.prog = &*programs[c];
        if (cs.prog->line_size != sim.llc.line_size ||
            sim.l1.line_size != sim.llc.line_size)
          throw std::invalid_argument("program/cache line size mismatch");
        cs.chains.resize(cs.prog->chain_count);
      }
    }
    cores_[0].lap_limit = stop_laps;
  }

  Metrics run() {
    for (cycle_ = 0; cycle_ < kCycleLimit; advance()) {
      activity_ = false;
      for (CoreState& cs : cores_) {
        cs.blocked_now = false;
        cs.issued_now = false;
        cs.throttled_now = false;
      }

      dram_phase();
      llc_fill_phase();
      llc_wb_phase();
      l1_response_phase();
      retire_phase();
      llc_retry_phase();
      l1_wb_phase();
      issue_phase();
      if (dram_.schedule(cycle_)) activity_ = true;

      end_of_cycle_accounting();
      if (drain_ && quiet()) break;
    }
    if (cycle_ >= kCycleLimit)
      throw std::runtime_error("simulation exceeded cycle limit");
    return collect();
  }

 private:
  void advance() {
    if (activity_) {
      ++cycle_;
      return;
    }
    std::uint64_t next = kNoEvent;
    if (!retires_.empty()) next = std::min(next, retires_.top().due);
    if (!responses_.empty()) next = std::min(next, responses_.top().due);
    next = std::min(next, dram_.next_event());
    for (const CoreState& cs : cores_)
      if (cs.throttled_now)
        next = std::min(next, (cycle_ / kThrottleEpoch + 1) * kThrottleEpoch);
    if (next == kNoEvent)
      throw std::runtime_error("simulation deadlocked at cycle " +
                               std::to_string(cycle_));
    const std::uint64_t target =
        sim_.disable_idle_skip ? cycle_ + 1 : std::max(cycle_ + 1, next);
    // Skipped cycles repeat this one exactly; credit their per-cycle counters.
    const std::uint64_t skipped = target - cycle_ - 1;
    if (skipped > 0) {
      for (CoreState& cs : cores_) {
        if (cs.blocked_now) cs.blocked_cycles += skipped;
        if (cs.prog && !drain_ && !cs.issued_now && cs.laps < cs.lap_limit)
          cs.stall_cycles += skipped;
      }
    }
    cycle_ = target;
  }

  bool quiet() const {
    if (dram_.busy() || !ready_llc_fills_.empty() || !retires_.empty() ||
        !responses_.empty() || llc_.wb_count() > 0)
      return false;
    for (const CoreState& cs : cores_) {
      if (cs.inflight > 0 || !cs.l1_fills.empty() || !cs.llc_retries.empty())
        return false;
      if (cs.l1 && cs.l1->wb_count() > 0) return false;
    }
    return true;
  }

  // ---- per-cycle phases -------------------------------------------------

  void dram_phase() {
    for (auto [id, kind] : dram_.complete(cycle_)) {
      activity_ = true;
      if (kind == dramsim::ReqKind::ReadFill) {
        auto it = dram_to_llc_mshr_.find(id);
        if (it == dram_to_llc_mshr_.end())
          throw std::logic_error("DRAM completion without an LLC MSHR");
        ready_llc_fills_.push_back(it->second);
        dram_to_llc_mshr_.erase(it);
      }
    }
  }

  void llc_fill_phase() {
    std::deque<int> deferred;
    while (!ready_llc_fills_.empty()) {
      int mshr = ready_llc_fills_.front();
      ready_llc_fills_.pop_front();
      auto out = llc_.fill(mshr, cycle_);
      if (out.deferred) {
        deferred.push_back(mshr);
        continue;
      }
      activity_ = true;
      for (const auto& req : out.completed) {
        if (req.tag == kWbTag) continue;
        cores_[req.core].l1_fills.push_back(static_cast<std::uint32_t>(req.tag));
      }
    }
    ready_llc_fills_ = std::move(deferred);
  }

  void llc_wb_phase() {
    if (auto line = llc_.wb_eligible()) {
      dram_.enqueue(next_dram_id_++, dramsim::ReqKind::Writeback, *line, cycle_);
      llc_.wb_pop();
      activity_ = true;
    }
  }

  void l1_response_phase() {
    while (!responses_.empty() && responses_.top().due <= cycle_) {
      const ResponseEvent ev = responses_.top();
      responses_.pop();
      cores_[ev.core].l1_fills.push_back(ev.l1_mshr);
      activity_ = true;
    }
    for (std::uint32_t c = 0; c < cores_.size(); ++c) {
      CoreState& cs = cores_[c];
      while (!cs.l1_fills.empty()) {
        const std::uint32_t mshr = cs.l1_fills.front();
        auto out = cs.l1->fill(static_cast<int>(mshr), cycle_);
        if (out.deferred) break;  // L1 writeback buffer full; retry next cycle
        cs.l1_fills.pop_front();
        activity_ = true;
        for (const auto& req : out.completed) retire(c, req.chain, req.tag);
      }
    }
  }

  void retire_phase() {
    while (!retires_.empty() && retires_.top().due <= cycle_) {
      const RetireEvent ev = retires_.top();
      retires_.pop();
      activity_ = true;
      retire(ev.core, ev.chain, ev.kind);
    }
  }

  void llc_retry_phase() {
    if (llc_.blocked()) {
      for (CoreState& cs : cores_)
        if (!cs.llc_retries.empty()) cs.blocked_now = true;
      return;
    }

    // Retried lookups that find their line resident or already pending
    // complete without taking a structure entry; tag lookups are free.
    for (std::uint32_t c = 0; c < cores_.size(); ++c) {
      CoreState& cs = cores_[c];
      for (auto it = cs.llc_retries.begin(); it != cs.llc_retries.end();) {
        const std::uint64_t line = cs.l1->mshr(static_cast<int>(*it)).line;
        if (!llc_.line_present(line) && !llc_mshr_for_line(line)) {
          ++it;
          continue;
        }
        forward_to_llc(c, *it, /*from_retry=*/false);  // hit or merge
        it = cs.llc_retries.erase(it);
        activity_ = true;
      }
    }

    // Misses contend for freed MSHRs through a rotating-priority arbiter:
    // the pointer advances past each winner, so every waiting core is
    // granted within one full rotation.
    const std::uint32_t n = static_cast<std::uint32_t>(cores_.size());
    bool progress = true;
    while (progress && !llc_.blocked()) {
      progress = false;
      for (std::uint32_t k = 0; k < n && !llc_.blocked(); ++k) {
        const std::uint32_t c = (retry_rr_ + k) % n;
        CoreState& cs = cores_[c];
        if (cs.llc_retries.empty()) continue;
        const std::uint32_t mshr = cs.llc_retries.front();
        cs.llc_retries.pop_front();
        forward_to_llc(c, mshr, /*from_retry=*/true);
        retry_rr_ = (c + 1) % n;
        activity_ = true;
        progress = true;
      }
    }
    for (CoreState& cs : cores_)
      if (!cs.llc_retries.empty()) cs.blocked_now = true;
  }

  void l1_wb_phase() {
    for (std::uint32_t c = 0; c < cores_.size(); ++c) {
      CoreState& cs = cores_[c];
      if (!cs.l1) continue;
      auto line = cs.l1->wb_eligible();
      if (!line) continue;
      if (llc_.blocked()) {
        cs.blocked_now = true;
        continue;
      }
      // Eviction traffic never allocates and never promotes: dirty the line
      // if resident, merge into a pending fill, else write through to memory.
      if (!llc_.absorb_writeback(*line)) {
        if (llc_mshr_for_line(*line))
          llc_.access(c, *line, /*is_write=*/true, cycle_, {c, 0, 0, kWbTag});
        else
          dram_.enqueue(next_dram_id_++, dramsim::ReqKind::Writeback, *line,
                        cycle_);
      }
      cs.l1->wb_pop();
      activity_ = true;
    }
  }

  // An in-flight fill for the line absorbs the writeback (merge keeps the
  // install dirty).
  std::optional<int> llc_mshr_for_line(std::uint64_t line) const {
    for (std::uint32_t m = 0; m < llc_.config().num_mshrs; ++m)
      if (llc_.mshr(static_cast<int>(m)).live &&
          llc_.mshr(static_cast<int>(m)).line == line)
        return static_cast<int>(m);
    return std::nullopt;
  }

  void issue_phase() {
    const std::uint32_t n = static_cast<std::uint32_t>(cores_.size());
    const std::uint32_t start = static_cast<std::uint32_t>(cycle_ % n);
    for (std::uint32_t k = 0; k < n; ++k) try_issue((start + k) % n);
  }

  void try_issue(std::uint32_t c) {
    CoreState& cs = cores_[c];
    if (!cs.prog || drain_) return;
    if (cs.inflight >= cs.cfg.window) return;
    if (cs.l1->blocked()) return;

    const std::uint64_t epoch = cycle_ / kThrottleEpoch;
    if (epoch != cs.epoch) {
      cs.epoch = epoch;
      cs.epoch_llc_bound = 0;
    }
    if (cs.cfg.throttle && cs.epoch_llc_bound >= *cs.cfg.throttle) {
      cs.throttled_now = true;
      return;
    }

    const workload::AccessProgram& prog = *cs.prog;
    if (!prog.dependent_chains) {
      const std::uint64_t size = prog.chain_size(0);
      if (cs.lap_limit != ~0ull && cs.seq_issued >= cs.lap_limit * size)
        return;
      const auto& node =
          prog.node(0, static_cast<std::uint32_t>(cs.seq_issued % size));
      if (issue_access(c, node.addr, node.is_write, 0, kSingle))
        ++cs.seq_issued;
      return;
    }

    for (std::uint32_t ch = 0; ch < prog.chain_count; ++ch) {
      ChainRun& run = cs.chains[ch];
      if (run.outstanding || run.laps >= cs.lap_limit) continue;
      const auto& node = prog.node(ch, run.next_ord);
      bool ok;
      if (prog.write_visits && !run.load_phase)
        ok = issue_access(c, node.addr, /*is_write=*/true, ch, kStore);
      else if (prog.write_visits)
        ok = issue_access(c, node.addr, /*is_write=*/false, ch, kLoad);
      else
        ok = issue_access(c, node.addr, node.is_write, ch, kSingle);
      if (ok) run.outstanding = true;
      return;  // one fresh access per core per cycle
    }
  }

  bool issue_access(std::uint32_t c, std::uint64_t addr, bool is_write,
                    std::uint32_t chain, std::uint32_t kind) {
    CoreState& cs = cores_[c];
    auto res = cs.l1->access(c, addr, is_write, cycle_, {c, chain, 0, kind});
    if (res.outcome == cachesim::AccessOutcome::Blocked) return false;

    activity_ = true;
    cs.issued_now = true;
    ++cs.inflight;
    ++cs.issued;
    switch (res.outcome) {
      case cachesim::AccessOutcome::Hit:
        retires_.push({cycle_ + res.latency, next_seq_++, c, chain, kind});
        break;
      case cachesim::AccessOutcome::MissAllocated:
        ++cs.epoch_llc_bound;
        forward_to_llc(c, static_cast<std::uint32_t>(res.mshr),
                       /*from_retry=*/false);
        break;
      case cachesim::AccessOutcome::MergedIntoMshr:
        break;  // completes with the pending fill
      default:
        break;
    }
    return true;
  }

  // Sends an L1 miss on toward the LLC. Returns false if the LLC is blocked,
  // in which case the forward waits on the core's retry queue.
  bool forward_to_llc(std::uint32_t c, std::uint32_t l1_mshr, bool from_retry) {
    CoreState& cs = cores_[c];
    const std::uint64_t line = cs.l1->mshr(static_cast<int>(l1_mshr)).line;
    auto res = llc_.access(c, line, /*is_write=*/false, cycle_,
                           {c, 0, 0, l1_mshr});
    switch (res.outcome) {
      case cachesim::AccessOutcome::Blocked:
        if (from_retry)
          cs.llc_retries.push_front(l1_mshr);
        else
          cs.llc_retries.push_back(l1_mshr);
        cs.blocked_now = true;
        return false;
      case cachesim::AccessOutcome::Hit:
        responses_.push({cycle_ + res.latency, next_seq_++, c, l1_mshr});
        return true;
      case cachesim::AccessOutcome::MissAllocated:
        dram_.enqueue(next_dram_id_++, dramsim::ReqKind::ReadFill, line, cycle_);
        dram_to_llc_mshr_.emplace(next_dram_id_ - 1, res.mshr);
        return true;
      case cachesim::AccessOutcome::MergedIntoMshr:
        return true;
    }
    return true;
  }

  void retire(std::uint32_t c, std::uint32_t chain, std::uint32_t kind) {
    CoreState& cs = cores_[c];
    --cs.inflight;
    ++cs.completed;
    const workload::AccessProgram& prog = *cs.prog;

    if (!prog.dependent_chains) {
      ++cs.seq_completed;
      if (cs.seq_completed % prog.chain_size(0) == 0) lap_done(c);
      return;
    }

    ChainRun& run = cs.chains[chain];
    run.outstanding = false;
    if (kind == kStore) {
      run.load_phase = true;
      return;
    }
    run.load_phase = false;
    if (++run.next_ord == prog.chain_size(chain)) {
      run.next_ord = 0;
      ++run.laps;
      std::uint64_t lap = ~0ull;
      for (const ChainRun& r : cs.chains) lap = std::min(lap, r.laps);
      if (lap > cs.laps) {
        cs.laps = lap;
        lap_done(c);
      }
    }
  }

  void lap_done(std::uint32_t c) {
    CoreState& cs = cores_[c];
    if (cs.prog && !cs.prog->dependent_chains)
      cs.laps = cs.seq_completed / cs.prog->chain_size(0);
    if (c != 0) return;
    if (cs.laps == warmup_) warmup_cycle_ = cycle_;
    if (cs.laps >= stop_laps_) {
      end_cycle_ = cycle_;
      drain_ = true;
    }
  }

  void end_of_cycle_accounting() {
    for (CoreState& cs : cores_) {
      if (cs.blocked_now) ++cs.blocked_cycles;
      if (cs.prog && !drain_ && !cs.issued_now && cs.laps < cs.lap_limit)
        ++cs.stall_cycles;
    }
  }

  Metrics collect() const {
    Metrics m;
    m.total_cycles = cycle_;
    m.warmup_laps = warmup_;
    m.victim_iterations = stop_laps_ - warmup_;
    m.victim_cycles_per_iter =
        static_cast<double>(end_cycle_ - warmup_cycle_) /
        static_cast<double>(stop_laps_ - warmup_);
    m.core.resize(cores_.size());
    for (std::uint32_t c = 0; c < cores_.size(); ++c) {
      const CoreState& cs = cores_[c];
      m.core[c].issued = cs.issued;
      m.core[c].completed = cs.completed;
      m.core[c].llc_hits = llc_.counters(c).hits;
      m.core[c].llc_misses = llc_.counters(c).misses;
      m.core[c].blocked_cycles = cs.blocked_cycles;
      m.core[c].stall_cycles = cs.stall_cycles;
    }
    m.bank_reads = dram_.stats().bank_reads;
    m.bank_writes = dram_.stats().bank_writes;
    m.dram_row_hits = dram_.stats().row_hits;
    m.dram_row_conflicts = dram_.stats().row_conflicts;
    m.llc_fill_requests = llc_.total_allocations();
    return m;
  }

  SimConfig sim_;
  std::vector<CoreState> cores_;
  cachesim::Cache llc_;
  dramsim::DramSim dram_;
  std::uint64_t stop_laps_ = 1;
  std::uint64_t warmup_ = 0;
  std::uint64_t cycle_ = 0;
  std::uint64_t warmup_cycle_ = 0;
  std::uint64_t end_cycle_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t next_dram_id_ = 1;
  std::uint32_t retry_rr_ = 0;
  bool drain_ = false;
  bool activity_ = false;

  std::deque<int> ready_llc_fills_;
  std::unordered_map<std::uint64_t, int> dram_to_llc_mshr_;
  std::priority_queue<RetireEvent, std::vector<RetireEvent>, DueOrder<RetireEvent>>
      retires_;
  std::priority_queue<ResponseEvent, std::vector<ResponseEvent>,
                      DueOrder<ResponseEvent>>
      responses_;
};

}  // namespace

void validate_sim_config(const SimConfig& sim) {
  if (sim.cores.empty()) throw std::invalid_argument("need at least one core");
  if (sim.l1.line_size != sim.llc.line_size)
    throw std::invalid_argument("L1 and LLC line sizes differ");
  if (sim.dram.geometry.line_size != sim.llc.line_size)
    throw std::invalid_argument("DRAM and LLC line sizes differ");
  for (const CoreConfig& c : sim.cores) {
    if (c.window < 1) throw std::invalid_argument("core window must be >= 1");
    if (c.throttle && *c.throttle < 1)
      throw std::invalid_argument("throttle budget must be >= 1");
  }
  if (!sim.llc_partition.empty() && sim.llc_partition.size() != sim.cores.size())
    throw std::invalid_argument("partition must cover every core");
  validate_dram_config(sim.dram);
}

Metrics run(const SimConfig& sim,
            const std::vector<std::optional<workload::AccessProgram>>& programs,
            std::uint64_t stop_laps, std::uint64_t warmup_laps) {
  Simulation s(sim, programs, stop_laps, warmup_laps);
  return s.run();
}

workload::AccessProgram build_for_core(const workload::WorkloadSpec& spec,
                                       const SimConfig& sim,
                                       std::uint32_t core) {
  const std::uint64_t base = kCoreRegionStride * core;
  workload::WorkloadSpec placed = spec;
  placed.seed = spec.seed ^ (0x9E3779B97F4A7C15ull * (core + 1));

  if (!workload::is_list_kind(spec.kind))
    return workload::rebased(workload::build_sequential(placed), base);

  const auto& geom = sim.dram.geometry;
  if (workload::is_bank_aware(spec.kind)) {
    std::uint64_t size = spec.working_set * geom.num_banks;
    const std::uint64_t huge = 1ull << addrmap::kHugePageBits;
    size = (size + huge - 1) / huge * huge;
    auto lines = addrmap::same_bank_lines({base, size}, sim.dram.mapping, geom,
                                          *spec.target_bank);
    return workload::build_parallel_lists(placed, lines);
  }

  std::vector<addrmap::PhysAddr> lines;
  lines.reserve(spec.working_set / spec.line_size);
  for (std::uint64_t a = 0; a < spec.working_set; a += spec.line_size)
    lines.push_back(base + a);
  return workload::build_parallel_lists(placed, lines);
}

ExperimentResult solo_vs_corun(const SimConfig& sim,
                               const workload::WorkloadSpec& victim,
                               const workload::WorkloadSpec& attacker,
                               std::uint32_t n_attackers, std::uint64_t laps,
                               std::uint64_t warmup_laps) {
  if (n_attackers + 1 > sim.cores.size())
    throw std::invalid_argument("attackers exceed available cores");

  std::vector<std::optional<workload::AccessProgram>> programs(sim.cores.size());
  programs[0] = build_for_core(victim, sim, 0);

  ExperimentResult result;
  result.solo = run(sim, programs, laps, warmup_laps);
  result.solo_cycles_per_iter = result.solo.victim_cycles_per_iter;

  for (std::uint32_t a = 1; a <= n_attackers; ++a)
    programs[a] = build_for_core(attacker, sim, a);
  result.corun = run(sim, programs, laps, warmup_laps);
  result.corun_cycles_per_iter = result.corun.victim_cycles_per_iter;

  result.slowdown = result.corun_cycles_per_iter / result.solo_cycles_per_iter;
  return result;
}

std::vector<std::pair<std::uint32_t, double>> sweep_memfreq(
    const SimConfig& sim, const workload::WorkloadSpec& victim,
    const workload::WorkloadSpec& attacker, std::uint32_t n_attackers,
    std::uint64_t laps, const std::vector<std::uint32_t>& rates,
    std::uint64_t warmup_laps) {
  if (rates.empty()) throw std::invalid_argument("empty rate list");
  std::vector<std::pair<std::uint32_t, double>> out;
  out.reserve(rates.size());
  for (std::uint32_t rate : rates) {
    SimConfig scaled = sim;
    scaled.dram.transfer_rate = rate;
    validate_dram_config(scaled.dram);  // rejects rates outside [100, 3200]
    auto r = solo_vs_corun(scaled, victim, attacker, n_attackers, laps,
                           warmup_laps);
    out.emplace_back(rate, r.slowdown);
  }
  return out;
}

}  // namespace memlab::engine
