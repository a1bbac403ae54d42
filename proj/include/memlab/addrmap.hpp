#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

// Physical-address to DRAM coordinate decoding.
//
// A bank mapping is either a plain bitmask (bank bit i = address bit at the
// i-th mask position) or a list of XOR reductions (bank bit i = parity of a
// set of address bits). Mask mappings are canonicalized to XOR singletons.

namespace memlab::addrmap {

using PhysAddr = std::uint64_t;

inline constexpr int kPhysAddrBits = 48;
inline constexpr int kHugePageBits = 21;  // 2 MiB page offset
inline constexpr int kSmallPageBits = 12;

struct BankMask {
  std::vector<int> bits;  // ascending bit positions, 1..8 entries
};

struct XorMapping {
  std::vector<std::vector<int>> functions;  // bank bit i = parity over functions[i]
};

// Thrown when a hugepage-sourced allocation cannot steer the bank because a
// mapping bit lies above the controllable page-offset range.
struct BankBitsNotControllable : std::runtime_error {
  explicit BankBitsNotControllable(const std::string& what)
      : std::runtime_error(what) {}
};

class AddressMapping {
 public:
  static AddressMapping from_mask(const BankMask& mask);
  static AddressMapping from_xor(const XorMapping& xm);

  int bank_bits() const { return static_cast<int>(functions_.size()); }
  std::uint32_t num_banks() const { return 1u << bank_bits(); }
  std::uint32_t bank_of(PhysAddr addr) const;

  // Highest address bit any function touches.
  int max_bit() const { return max_bit_; }

  // One physical bit is consumed per bank bit when forming the row/column
  // address: the lowest bit of each function. Returned ascending.
  const std::vector<int>& consumed_bits() const { return consumed_; }

  const std::vector<std::vector<int>>& functions() const { return functions_; }

  // Mask-form mappings round-trip; XOR forms report empty.
  std::vector<int> as_mask() const;

 private:
  AddressMapping(std::vector<std::vector<int>> fns, std::vector<int> consumed,
                 int max_bit)
      : functions_(std::move(fns)), consumed_(std::move(consumed)),
        max_bit_(max_bit) {}

  std::vector<std::vector<int>> functions_;
  std::vector<int> consumed_;
  int max_bit_ = 0;
};

std::uint32_t bank_of_mask(const BankMask& mask, PhysAddr addr);
std::uint32_t bank_of_xor(const XorMapping& xm, PhysAddr addr);

struct DramGeometry {
  std::uint32_t num_banks = 8;
  std::uint64_t row_size = 2048;   // bytes
  std::uint64_t line_size = 64;    // bytes
};

void validate_geometry(const DramGeometry& geom);

struct DramCoord {
  std::uint32_t bank = 0;
  std::uint64_t row = 0;
  std::uint64_t col = 0;  // line index within the row

  bool operator==(const DramCoord&) const = default;
};

// Decodes addr (truncated to a line) into bank/row/column. The bank bits are
// compressed out of the address; the low line bits of what remains select the
// column, the rest the row.
DramCoord coord_of(const DramGeometry& geom, const AddressMapping& mapping,
                   PhysAddr addr);

struct BitRange {
  int lo = 0;
  int hi = 0;  // exclusive
  bool contains(int bit) const { return bit >= lo && bit < hi; }
};

// Address bits an unprivileged allocation controls for a given page size.
BitRange controllable_bits(std::uint64_t page_size);

struct HugePageRegion {
  PhysAddr base = 0;        // 2 MiB aligned
  std::uint64_t size = 0;   // multiple of 2 MiB
};

void validate_region(const HugePageRegion& region);

// Every line-aligned address in the region whose bank equals target_bank,
// ascending. Throws BankBitsNotControllable if the mapping uses bits at or
// above the hugepage offset width.
std::vector<PhysAddr> same_bank_lines(const HugePageRegion& region,
                                      const AddressMapping& mapping,
                                      const DramGeometry& geom,
                                      std::uint32_t target_bank);

}  // namespace memlab::addrmap
