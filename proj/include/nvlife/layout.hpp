#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nvlife {

// Live-byte map of one frame; true = usable byte.
class FaultBitmap {
 public:
  FaultBitmap() = default;
  explicit FaultBitmap(std::size_t bytes, bool live = true) : live_(bytes, live ? 1 : 0) {}

  // '1' = live, '0' = dead, position 0 first.
  static FaultBitmap parse(std::string_view bits);
  std::string str() const;

  std::size_t size() const { return live_.size(); }
  bool live(std::size_t i) const { return live_[i] != 0; }
  void kill(std::size_t i) { live_[i] = 0; }
  std::size_t popcount() const;

  friend bool operator==(const FaultBitmap&, const FaultBitmap&) = default;

 private:
  std::vector<std::uint8_t> live_;
};

// Crossbar port indexes and write mask for one frame.
struct IndexVector {
  std::vector<int> index;
  std::vector<std::uint8_t> write_mask;
};

// Index calculation for rearranging an ECB of `size` bytes into a frame:
// prefix sum over the live bytes, rotated so that ECB byte 0 lands on the
// first live byte at or after position `gc`. Throws CapacityError if `size`
// exceeds the number of live bytes, std::out_of_range if gc >= fm.size().
IndexVector index_calc(const FaultBitmap& fm, std::size_t gc, std::size_t size);

// Writes `ecb` into `frame` under the computed write mask; positions outside
// the mask keep their previous contents. Returns the write mask.
std::vector<std::uint8_t> scatter_write(std::span<const std::uint8_t> ecb, const FaultBitmap& fm,
                                        std::size_t gc, std::span<std::uint8_t> frame);

// Inverse of scatter_write: reassembles the `size`-byte ECB from a frame.
std::vector<std::uint8_t> gather_read(std::span<const std::uint8_t> frame, const FaultBitmap& fm,
                                      std::size_t gc, std::size_t size);

// Per-byte 0/1 write increments for a write of `size` bytes.
std::vector<std::uint8_t> write_count_delta(const FaultBitmap& fm, std::size_t gc, std::size_t size);

}  // namespace nvlife
