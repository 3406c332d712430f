#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nvlife {

inline constexpr std::size_t kBlockBytes = 64;

using Block = std::array<std::uint8_t, kBlockBytes>;

// Base-delta-immediate encodings, in table order. The numeric value is the
// 4-bit tag stored next to the block. Sizes are non-decreasing in this order,
// so the first encoding that applies is also the smallest one.
enum class Encoding : std::uint8_t {
  kAllZeros = 0,
  kRep8,
  kB8D1,
  kB4D1,
  kB8D2,
  kB8D3,
  kB4D2,
  kB2D1,
  kB8D4,
  kB8D5,
  kB4D3,
  kB8D6,
  kB8D7,
  kUncompressed,
};

inline constexpr std::size_t kNumEncodings = 14;

struct EncodingInfo {
  Encoding encoding;
  std::string_view name;
  std::size_t base_width;   // bytes per value, 0 for all-zeros / uncompressed
  std::size_t delta_width;  // bytes per delta
  std::size_t size;         // compressed payload bytes
};

const std::array<EncodingInfo, kNumEncodings>& encoding_table();
const EncodingInfo& info(Encoding e);
std::string_view name(Encoding e);
std::optional<Encoding> encoding_from_name(std::string_view name);
std::optional<Encoding> encoding_from_tag(unsigned tag);

struct CompressedBlock {
  Encoding encoding = Encoding::kUncompressed;
  std::vector<std::uint8_t> payload;

  std::size_t size() const { return payload.size(); }
  friend bool operator==(const CompressedBlock&, const CompressedBlock&) = default;
};

// Encodes `block` with `e` if every value can be represented, nullopt
// otherwise. Payload layout for the base+delta encodings, all little-endian:
//
//   [base: W bytes][immediate mask: V/8 bytes][V-1 deltas: D bytes each]
//
// where V = 64/W values; the first value is the base. Mask bit i set means
// value i is a delta from zero (an immediate) rather than from the base.
std::optional<CompressedBlock> try_encode(const Block& block, Encoding e);

// Smallest applicable encoding; ties resolve to table order.
CompressedBlock compress(const Block& block);

// Compressed size only, without materializing the payload.
std::size_t compressed_size(const Block& block);

// Throws FormatError when the payload length does not match the encoding.
Block decompress(const CompressedBlock& cb);

// Compression classes: the distinct encoding sizes. A frame with `capacity`
// data bytes belongs to the largest class not exceeding it.
inline constexpr std::array<int, 12> kCompressionClasses = {0,  8,  16, 21, 23, 30,
                                                            36, 37, 44, 51, 58, 64};
inline constexpr int kNumClasses = static_cast<int>(kCompressionClasses.size());

// Class index in [0, 12), or -1 for a frame that cannot hold any block
// (negative capacity). Capacities above 64 clamp to the 64 class.
int class_index(int capacity);

// Class size in bytes, nullopt for dead.
std::optional<int> classify(int capacity);

int class_index_of_size(std::size_t compressed_size);

// Hex helpers shared by the CLI and the text trace format.
std::string to_hex(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> from_hex(std::string_view hex);

}  // namespace nvlife
