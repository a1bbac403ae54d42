#include "memlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "memlab/presets.hpp"

namespace memlab::config {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& path, int line, const std::string& msg) {
  throw ParseError(path + ":" + std::to_string(line) + ": " + msg);
}

std::uint64_t parse_u64(const std::string& path, int line, const std::string& v) {
  try {
    size_t pos = 0;
    std::uint64_t value = std::stoull(v, &pos, 0);
    if (pos != v.size()) throw std::invalid_argument(v);
    return value;
  } catch (const std::exception&) {
    fail(path, line, "expected an integer, got '" + v + "'");
  }
}

bool parse_on_off(const std::string& path, int line, const std::string& v) {
  if (v == "on" || v == "1" || v == "true") return true;
  if (v == "off" || v == "0" || v == "false") return false;
  fail(path, line, "expected on/off, got '" + v + "'");
}

// Line-based "key value..." or "key = value" reader.
struct Reader {
  std::string path;
  std::ifstream in;
  int line_no = 0;

  explicit Reader(const std::string& p) : path(p), in(p) {
    if (!in) throw ParseError(path + ": cannot open");
  }

  bool next(std::string& out) {
    std::string raw;
    while (std::getline(in, raw)) {
      ++line_no;
      size_t hash = raw.find('#');
      if (hash != std::string::npos) raw.erase(hash);
      raw = trim(raw);
      if (raw.empty()) continue;
      out = raw;
      return true;
    }
    return false;
  }
};

}  // namespace

std::uint64_t parse_size(const std::string& text) {
  std::string t = trim(text);
  std::uint64_t mult = 1;
  auto ends_with = [&](const char* suffix) {
    size_t n = std::string(suffix).size();
    return t.size() > n && t.compare(t.size() - n, n, suffix) == 0;
  };
  if (ends_with("KiB")) {
    mult = 1024;
    t = trim(t.substr(0, t.size() - 3));
  } else if (ends_with("MiB")) {
    mult = 1024ull * 1024;
    t = trim(t.substr(0, t.size() - 3));
  } else if (ends_with("GiB")) {
    mult = 1024ull * 1024 * 1024;
    t = trim(t.substr(0, t.size() - 3));
  }
  size_t pos = 0;
  std::uint64_t value = std::stoull(t, &pos, 0);
  if (pos != t.size()) throw std::invalid_argument("bad size: " + text);
  return value * mult;
}

MappingFile load_mapping_file(const std::string& path) {
  Reader r(path);
  MappingFile out;
  addrmap::XorMapping xm;
  std::string line;
  bool have_banks = false;
  while (r.next(line)) {
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "banks") {
      std::uint64_t v;
      if (!(ss >> v)) fail(path, r.line_no, "banks needs a count");
      out.geometry.num_banks = static_cast<std::uint32_t>(v);
      have_banks = true;
    } else if (key == "row_size") {
      std::string rest;
      std::getline(ss, rest);
      out.geometry.row_size = parse_size(rest);
    } else if (key == "line_size") {
      std::string rest;
      std::getline(ss, rest);
      out.geometry.line_size = parse_size(rest);
    } else if (key == "bit") {
      int b;
      if (!(ss >> b)) fail(path, r.line_no, "bit needs a position");
      xm.functions.push_back({b});
    } else if (key == "xor") {
      std::vector<int> fn;
      int b;
      while (ss >> b) fn.push_back(b);
      if (fn.empty()) fail(path, r.line_no, "xor needs at least one bit");
      xm.functions.push_back(fn);
    } else {
      fail(path, r.line_no, "unknown directive '" + key + "'");
    }
  }
  if (xm.functions.empty()) throw ParseError(path + ": no bank bits defined");
  try {
    out.mapping = addrmap::AddressMapping::from_xor(xm);
    if (!have_banks) out.geometry.num_banks = out.mapping.num_banks();
    addrmap::validate_geometry(out.geometry);
    if (out.mapping.num_banks() != out.geometry.num_banks)
      throw std::invalid_argument("bank bits do not match banks value");
  } catch (const std::invalid_argument& e) {
    throw ParseError(path + ": " + e.what());
  }
  return out;
}

std::string mapping_to_text(const MappingFile& mf) {
  std::ostringstream os;
  os << "banks " << mf.geometry.num_banks << "\n";
  os << "row_size " << mf.geometry.row_size << "\n";
  os << "line_size " << mf.geometry.line_size << "\n";
  for (const auto& fn : mf.mapping.functions()) {
    if (fn.size() == 1) {
      os << "bit " << fn.front() << "\n";
    } else {
      os << "xor";
      for (int b : fn) os << " " << b;
      os << "\n";
    }
  }
  return os.str();
}

void apply_timing_file(const std::string& path, dramsim::DramConfig& dram) {
  Reader r(path);
  std::string line;
  while (r.next(line)) {
    size_t eq = line.find('=');
    if (eq == std::string::npos) fail(path, r.line_no, "expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::uint64_t value = parse_u64(path, r.line_no, trim(line.substr(eq + 1)));
    if (key == "tRCD") dram.timings.tRCD = static_cast<std::uint32_t>(value);
    else if (key == "tRP") dram.timings.tRP = static_cast<std::uint32_t>(value);
    else if (key == "tCL") dram.timings.tCL = static_cast<std::uint32_t>(value);
    else if (key == "tBURST") dram.timings.tBURST = static_cast<std::uint32_t>(value);
    else if (key == "transfer_rate") dram.transfer_rate = static_cast<std::uint32_t>(value);
    else if (key == "cpu_freq") dram.cpu_freq = static_cast<std::uint32_t>(value);
    else if (key == "scheduler_window") dram.scheduler_window = static_cast<std::uint32_t>(value);
    else fail(path, r.line_no, "unknown timing key '" + key + "'");
  }
}

RunConfig load_run_config(const std::string& path,
                          const std::string& preset_override) {
  Reader r(path);
  RunConfig cfg;
  bool preset_named = false;
  std::string mapping_file, timing_file;
  std::optional<std::uint64_t> mem_mts, llc_mshrs, l1_mshrs, window;
  std::optional<std::uint64_t> victim_ws, attacker_ws;

  std::string section;
  std::string line;
  while (r.next(line)) {
    if (line.front() == '[') {
      if (line.back() != ']') fail(path, r.line_no, "malformed section header");
      section = line.substr(1, line.size() - 2);
      if (section != "sim" && section != "victim" && section != "attacker" &&
          section != "experiment")
        fail(path, r.line_no, "unknown section [" + section + "]");
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos) fail(path, r.line_no, "expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (section.empty()) fail(path, r.line_no, "key outside any section");

    if (section == "sim") {
      if (key == "preset") {
        cfg.preset = value;
        preset_named = true;
      } else if (key == "mem_mts") mem_mts = parse_u64(path, r.line_no, value);
      else if (key == "llc_mshrs") llc_mshrs = parse_u64(path, r.line_no, value);
      else if (key == "l1_mshrs") l1_mshrs = parse_u64(path, r.line_no, value);
      else if (key == "window") window = parse_u64(path, r.line_no, value);
      else if (key == "mapping") mapping_file = value;
      else if (key == "timing") timing_file = value;
      else fail(path, r.line_no, "unknown [sim] key '" + key + "'");
    } else if (section == "victim" || section == "attacker") {
      workload::WorkloadSpec& spec =
          section == "victim" ? cfg.victim : cfg.attacker;
      if (key == "kind") {
        auto k = workload::kind_from_name(value);
        if (!k) fail(path, r.line_no, "unknown workload kind '" + value + "'");
        spec.kind = *k;
      } else if (key == "working_set") {
        try {
          (section == "victim" ? victim_ws : attacker_ws) = parse_size(value);
        } catch (const std::exception&) {
          fail(path, r.line_no, "bad size '" + value + "'");
        }
      } else if (key == "mlp") spec.mlp = static_cast<std::uint32_t>(parse_u64(path, r.line_no, value));
      else if (key == "target_bank") spec.target_bank = static_cast<std::uint32_t>(parse_u64(path, r.line_no, value));
      else if (key == "seed") spec.seed = parse_u64(path, r.line_no, value);
      else if (key == "line_size") spec.line_size = parse_u64(path, r.line_no, value);
      else fail(path, r.line_no, "unknown [" + section + "] key '" + key + "'");
    } else {  // experiment
      if (key == "n_attackers") cfg.n_attackers = static_cast<std::uint32_t>(parse_u64(path, r.line_no, value));
      else if (key == "laps") cfg.laps = parse_u64(path, r.line_no, value);
      else if (key == "partition") cfg.partition = parse_on_off(path, r.line_no, value);
      else if (key == "throttle") cfg.throttle = static_cast<std::uint32_t>(parse_u64(path, r.line_no, value));
      else if (key == "in_order") cfg.attackers_in_order = parse_on_off(path, r.line_no, value);
      else fail(path, r.line_no, "unknown [experiment] key '" + key + "'");
    }
  }

  if (!preset_override.empty()) cfg.preset = preset_override;
  else if (!preset_named && cfg.preset.empty())
    throw ParseError(path + ": [sim] needs a preset");

  try {
    cfg.sim = presets::make_preset(cfg.preset);
  } catch (const std::invalid_argument& e) {
    throw ParseError(path + ": " + e.what());
  }

  if (!mapping_file.empty()) {
    MappingFile mf = load_mapping_file(mapping_file);
    cfg.sim.dram.mapping = mf.mapping;
    cfg.sim.dram.geometry = mf.geometry;
  }
  if (!timing_file.empty()) apply_timing_file(timing_file, cfg.sim.dram);
  if (mem_mts) cfg.sim.dram.transfer_rate = static_cast<std::uint32_t>(*mem_mts);
  if (llc_mshrs) cfg.sim.llc.num_mshrs = static_cast<std::uint32_t>(*llc_mshrs);
  if (l1_mshrs) cfg.sim.l1.num_mshrs = static_cast<std::uint32_t>(*l1_mshrs);
  if (window)
    for (auto& core : cfg.sim.cores)
      core.window = static_cast<std::uint32_t>(*window);

  const std::uint64_t llc_bytes = static_cast<std::uint64_t>(cfg.sim.llc.sets) *
                                  cfg.sim.llc.ways * cfg.sim.llc.line_size;
  cfg.victim.working_set = victim_ws.value_or(llc_bytes / 4);
  cfg.attacker.working_set = attacker_ws.value_or(llc_bytes * 2);
  if (workload::is_list_kind(cfg.attacker.kind) && cfg.attacker.mlp == 1)
    cfg.attacker.mlp = cfg.sim.l1.num_mshrs;
  if (workload::is_bank_aware(cfg.attacker.kind) && !cfg.attacker.target_bank)
    cfg.attacker.target_bank = 0;

  if (cfg.n_attackers + 1 > cfg.sim.cores.size())
    throw ParseError(path + ": n_attackers exceeds available cores");
  if (cfg.laps < 1) throw ParseError(path + ": laps must be >= 1");
  return cfg;
}

engine::SimConfig experiment_sim(const RunConfig& cfg, std::uint32_t n_attackers) {
  engine::SimConfig sim = cfg.sim;
  for (std::uint32_t c = 1; c <= n_attackers && c < sim.cores.size(); ++c) {
    if (cfg.throttle > 0) sim.cores[c].throttle = cfg.throttle;
    sim.cores[c].in_order = cfg.attackers_in_order;
  }
  if (cfg.partition) {
    const std::uint32_t n = static_cast<std::uint32_t>(sim.cores.size());
    const std::uint32_t per_core = sim.llc.ways / n;
    if (per_core == 0)
      throw std::invalid_argument("fewer LLC ways than cores to partition");
    sim.llc_partition.resize(n);
    for (std::uint32_t c = 0; c < n; ++c) {
      std::uint32_t extra = c < sim.llc.ways % n ? 1 : 0;
      std::uint32_t width = per_core + extra;
      std::uint32_t start = c * per_core + std::min(c, sim.llc.ways % n);
      sim.llc_partition[c] = ((1ull << width) - 1) << start;
    }
  }
  return sim;
}

}  // namespace memlab::config
