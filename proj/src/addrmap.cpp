#include "memlab/addrmap.hpp"

#include <algorithm>
#include <bit>

namespace memlab::addrmap {

namespace {

void check_bit_position(int bit) {
  if (bit < 0 || bit >= kPhysAddrBits)
    throw std::invalid_argument("bank bit position out of range: " +
                                std::to_string(bit));
}

}  // namespace

AddressMapping AddressMapping::from_mask(const BankMask& mask) {
  if (mask.bits.empty() || mask.bits.size() > 8)
    throw std::invalid_argument("bank mask needs 1..8 bits");
  XorMapping xm;
  for (int bit : mask.bits) xm.functions.push_back({bit});
  AddressMapping m = from_xor(xm);
  // from_xor accepts any distinct singletons; masks must also be ascending.
  for (size_t i = 1; i < mask.bits.size(); ++i)
    if (mask.bits[i] <= mask.bits[i - 1])
      throw std::invalid_argument("bank mask bits must be strictly ascending");
  return m;
}

AddressMapping AddressMapping::from_xor(const XorMapping& xm) {
  if (xm.functions.empty() || xm.functions.size() > 8)
    throw std::invalid_argument("mapping needs 1..8 bank-bit functions");
  std::vector<std::vector<int>> fns;
  std::vector<int> consumed;
  int max_bit = 0;
  for (const auto& fn : xm.functions) {
    if (fn.empty())
      throw std::invalid_argument("empty XOR function in mapping");
    std::vector<int> sorted = fn;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    if (sorted.size() != fn.size())
      throw std::invalid_argument("duplicate bit within an XOR function");
    for (int bit : sorted) check_bit_position(bit);
    max_bit = std::max(max_bit, sorted.back());
    consumed.push_back(sorted.front());
    fns.push_back(std::move(sorted));
  }
  // Row/column reconstruction needs a distinct consumed bit per function.
  std::vector<int> check = consumed;
  std::sort(check.begin(), check.end());
  if (std::adjacent_find(check.begin(), check.end()) != check.end())
    throw std::invalid_argument(
        "XOR functions must have distinct lowest bits");
  std::sort(consumed.begin(), consumed.end());
  return AddressMapping(std::move(fns), std::move(consumed), max_bit);
}

std::uint32_t AddressMapping::bank_of(PhysAddr addr) const {
  std::uint32_t bank = 0;
  for (size_t i = 0; i < functions_.size(); ++i) {
    unsigned parity = 0;
    for (int bit : functions_[i]) parity ^= (addr >> bit) & 1u;
    bank |= parity << i;
  }
  return bank;
}

std::vector<int> AddressMapping::as_mask() const {
  std::vector<int> bits;
  for (const auto& fn : functions_) {
    if (fn.size() != 1) return {};
    bits.push_back(fn.front());
  }
  return bits;
}

std::uint32_t bank_of_mask(const BankMask& mask, PhysAddr addr) {
  return AddressMapping::from_mask(mask).bank_of(addr);
}

std::uint32_t bank_of_xor(const XorMapping& xm, PhysAddr addr) {
  return AddressMapping::from_xor(xm).bank_of(addr);
}

void validate_geometry(const DramGeometry& geom) {
  if (!std::has_single_bit(geom.num_banks))
    throw std::invalid_argument("num_banks must be a power of two");
  if (!std::has_single_bit(geom.row_size) || !std::has_single_bit(geom.line_size))
    throw std::invalid_argument("row_size and line_size must be powers of two");
  if (geom.line_size > geom.row_size)
    throw std::invalid_argument("line_size exceeds row_size");
}

DramCoord coord_of(const DramGeometry& geom, const AddressMapping& mapping,
                   PhysAddr addr) {
  validate_geometry(geom);
  if (mapping.num_banks() != geom.num_banks)
    throw std::invalid_argument("mapping bank-bit count disagrees with geometry");

  addr &= ~(geom.line_size - 1);

  DramCoord coord;
  coord.bank = mapping.bank_of(addr);

  // Drop the consumed bits and concatenate what remains, order preserved.
  PhysAddr compressed = 0;
  int out = 0;
  const auto& consumed = mapping.consumed_bits();
  size_t next = 0;
  for (int bit = 0; bit < kPhysAddrBits; ++bit) {
    if (next < consumed.size() && consumed[next] == bit) {
      ++next;
      continue;
    }
    compressed |= ((addr >> bit) & 1u) << out;
    ++out;
  }

  const std::uint64_t lines_per_row = geom.row_size / geom.line_size;
  const std::uint64_t line_index = compressed / geom.line_size;
  coord.col = line_index % lines_per_row;
  coord.row = line_index / lines_per_row;
  return coord;
}

BitRange controllable_bits(std::uint64_t page_size) {
  if (page_size == 4096) return {0, kSmallPageBits};
  if (page_size == 2u * 1024 * 1024) return {0, kHugePageBits};
  throw std::invalid_argument("unsupported page size: " +
                              std::to_string(page_size));
}

void validate_region(const HugePageRegion& region) {
  const std::uint64_t huge = 1ull << kHugePageBits;
  if (region.base % huge != 0)
    throw std::invalid_argument("region base must be 2 MiB aligned");
  if (region.size == 0 || region.size % huge != 0)
    throw std::invalid_argument("region size must be a positive multiple of 2 MiB");
}

std::vector<PhysAddr> same_bank_lines(const HugePageRegion& region,
                                      const AddressMapping& mapping,
                                      const DramGeometry& geom,
                                      std::uint32_t target_bank) {
  validate_region(region);
  validate_geometry(geom);
  if (mapping.num_banks() != geom.num_banks)
    throw std::invalid_argument("mapping bank-bit count disagrees with geometry");
  if (target_bank >= mapping.num_banks())
    throw std::invalid_argument("target bank out of range");
  if (mapping.max_bit() >= kHugePageBits)
    throw BankBitsNotControllable(
        "mapping uses bit " + std::to_string(mapping.max_bit()) +
        ", beyond the " + std::to_string(kHugePageBits) +
        "-bit hugepage offset");

  std::vector<PhysAddr> lines;
  lines.reserve(region.size / geom.line_size / geom.num_banks);
  for (PhysAddr a = region.base; a < region.base + region.size;
       a += geom.line_size) {
    if (mapping.bank_of(a) == target_bank) lines.push_back(a);
  }
  return lines;
}

}  // namespace memlab::addrmap
