#include "memlab/dramsim.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace memlab::dramsim {

void validate_dram_config(const DramConfig& config) {
  addrmap::validate_geometry(config.geometry);
  if (config.mapping.num_banks() != config.geometry.num_banks)
    throw std::invalid_argument("mapping bank-bit count disagrees with geometry");
  if (config.timings.tRCD < 1 || config.timings.tRP < 1 ||
      config.timings.tCL < 1 || config.timings.tBURST < 1)
    throw std::invalid_argument("DRAM timings must be >= 1");
  if (config.transfer_rate < 100 || config.transfer_rate > 3200)
    throw std::invalid_argument("transfer_rate outside [100, 3200] MT/s");
  if (config.cpu_freq < 1) throw std::invalid_argument("cpu_freq must be >= 1");
  if (config.scheduler_window < 1)
    throw std::invalid_argument("scheduler_window must be >= 1");
}

std::uint64_t to_cpu_cycles(std::uint64_t dram_cycles, std::uint32_t cpu_freq,
                            std::uint32_t transfer_rate) {
  const std::uint64_t num = dram_cycles * 2ull * cpu_freq;
  return (num + transfer_rate - 1) / transfer_rate;
}

DramSim::DramSim(const DramConfig& config) : config_(config) {
  validate_dram_config(config_);
  banks_.resize(config_.geometry.num_banks);
  active_.resize(config_.geometry.num_banks);
  stats_.bank_reads.assign(config_.geometry.num_banks, 0);
  stats_.bank_writes.assign(config_.geometry.num_banks, 0);
}

void DramSim::enqueue(const MemRequest& req) {
  if (any_id_ && req.id <= last_id_)
    throw std::invalid_argument("request id " + std::to_string(req.id) +
                                " not fresh");
  if (req.coord.bank >= config_.geometry.num_banks)
    throw std::invalid_argument("request bank out of range");
  last_id_ = req.id;
  any_id_ = true;
  pending_.push_back(req);
  auto& count = req.kind == ReqKind::ReadFill ? stats_.bank_reads
                                              : stats_.bank_writes;
  ++count[req.coord.bank];
}

void DramSim::enqueue(std::uint64_t id, ReqKind kind, addrmap::PhysAddr addr,
                      std::uint64_t cycle) {
  enqueue({id, kind, addrmap::coord_of(config_.geometry, config_.mapping, addr),
           cycle});
}

std::uint64_t DramSim::service_time(const BankState& bank,
                                    const addrmap::DramCoord& coord) const {
  const DramTimings& t = config_.timings;
  std::uint64_t dram_cycles;
  if (bank.open_row && *bank.open_row == coord.row)
    dram_cycles = t.tCL + t.tBURST;  // row hit
  else if (bank.open_row)
    dram_cycles = t.tRP + t.tRCD + t.tCL + t.tBURST;  // conflict: precharge+activate
  else
    dram_cycles = t.tRCD + t.tCL + t.tBURST;  // closed bank: activate
  return to_cpu_cycles(dram_cycles, config_.cpu_freq, config_.transfer_rate);
}

std::optional<std::uint64_t> DramSim::schedule(std::uint64_t cycle) {
  if (pending_.empty()) return std::nullopt;
  // Data-bus occupancy: consecutive bursts are at least tBURST apart.
  if (cycle < next_start_ok_) return std::nullopt;

  const MemRequest* pick = nullptr;
  std::size_t pick_index = 0;
  std::uint32_t seen = 0;
  bool pick_is_hit = false;
  for (std::size_t i = 0;
       i < pending_.size() && seen < config_.scheduler_window; ++i) {
    const MemRequest& req = pending_[i];
    if (req.arrival >= cycle) break;  // later arrivals are younger still
    ++seen;
    const BankState& bank = banks_[req.coord.bank];
    if (active_[req.coord.bank].live || bank.busy_until > cycle) continue;
    const bool hit = bank.open_row && *bank.open_row == req.coord.row;
    if (!pick) {
      pick = &req;
      pick_index = i;
      pick_is_hit = hit;
    }
    if (hit && !pick_is_hit) {  // oldest row hit beats the oldest miss
      pick = &req;
      pick_index = i;
      pick_is_hit = true;
    }
  }
  if (!pick) return std::nullopt;

  const std::uint32_t b = pick->coord.bank;
  BankState& bank = banks_[b];
  if (bank.open_row && *bank.open_row == pick->coord.row)
    ++stats_.row_hits;
  else if (bank.open_row)
    ++stats_.row_conflicts;
  else
    ++stats_.row_closed;

  const std::uint64_t finish = cycle + service_time(bank, pick->coord);
  bank.busy_until = finish;
  active_[b] = {pick->id, pick->kind, pick->coord.row, finish, true};
  ++in_service_;
  next_start_ok_ =
      cycle + to_cpu_cycles(config_.timings.tBURST, config_.cpu_freq,
                            config_.transfer_rate);
  const std::uint64_t id = pick->id;
  pending_.erase(pending_.begin() + static_cast<std::ptrdiff_t>(pick_index));
  return id;
}

std::vector<std::pair<std::uint64_t, ReqKind>> DramSim::complete(
    std::uint64_t cycle) {
  std::vector<std::pair<std::uint64_t, ReqKind>> done;
  for (std::uint32_t b = 0; b < active_.size(); ++b) {
    Active& a = active_[b];
    if (!a.live || a.finish > cycle) continue;
    banks_[b].open_row = a.row;  // open-page policy
    done.emplace_back(a.id, a.kind);
    a.live = false;
    --in_service_;
  }
  return done;
}

std::uint64_t DramSim::next_event() const {
  std::uint64_t next = ~0ull;
  for (const auto& a : active_)
    if (a.live) next = std::min(next, a.finish);
  // Earliest cycle any window candidate could start. Arrivals are monotone,
  // so the first scheduler_window pending entries cover every possible
  // window member.
  std::uint32_t seen = 0;
  for (const auto& req : pending_) {
    if (seen++ == config_.scheduler_window) break;
    std::uint64_t t = std::max(req.arrival + 1, next_start_ok_);
    t = std::max(t, banks_[req.coord.bank].busy_until);
    next = std::min(next, t);
  }
  return next;
}

}  // namespace memlab::dramsim
