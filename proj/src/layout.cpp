#include "nvlife/layout.hpp"

#include <algorithm>
#include <stdexcept>

#include "nvlife/error.hpp"

namespace nvlife {

FaultBitmap FaultBitmap::parse(std::string_view bits) {
  FaultBitmap fm(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == '0') {
      fm.kill(i);
    } else if (bits[i] != '1') {
      throw FormatError("fault bitmap must contain only '0' and '1'");
    }
  }
  return fm;
}

std::string FaultBitmap::str() const {
  std::string s(live_.size(), '0');
  for (std::size_t i = 0; i < live_.size(); ++i)
    if (live_[i]) s[i] = '1';
  return s;
}

std::size_t FaultBitmap::popcount() const {
  return static_cast<std::size_t>(std::count(live_.begin(), live_.end(), std::uint8_t{1}));
}

IndexVector index_calc(const FaultBitmap& fm, std::size_t gc, std::size_t size) {
  const std::size_t n = fm.size();
  if (n == 0) throw std::out_of_range("empty frame");
  if (gc >= n) throw std::out_of_range("global counter " + std::to_string(gc) + " outside frame of " +
                                       std::to_string(n) + " bytes");
  IndexVector out{std::vector<int>(n), std::vector<std::uint8_t>(n)};
  auto& idx = out.index;

  idx[0] = 0;
  for (std::size_t i = 1; i < n; ++i) idx[i] = idx[i - 1] + (fm.live(i - 1) ? 1 : 0);
  const int total = idx[n - 1] + (fm.live(n - 1) ? 1 : 0);
  if (size > static_cast<std::size_t>(total)) {
    throw CapacityError("block of " + std::to_string(size) + " bytes does not fit in " +
                        std::to_string(total) + " live bytes");
  }

  const int origin = idx[gc];
  for (std::size_t i = 0; i < n; ++i) idx[i] -= origin;
  for (std::size_t i = 0; i < gc; ++i) idx[i] += total;

  for (std::size_t i = 0; i < n; ++i)
    out.write_mask[i] = (idx[i] < static_cast<int>(size) && fm.live(i)) ? 1 : 0;
  return out;
}

std::vector<std::uint8_t> scatter_write(std::span<const std::uint8_t> ecb, const FaultBitmap& fm,
                                        std::size_t gc, std::span<std::uint8_t> frame) {
  if (frame.size() != fm.size()) throw std::invalid_argument("frame and fault bitmap differ in length");
  IndexVector iv = index_calc(fm, gc, ecb.size());
  for (std::size_t i = 0; i < frame.size(); ++i)
    if (iv.write_mask[i]) frame[i] = ecb[static_cast<std::size_t>(iv.index[i])];
  return std::move(iv.write_mask);
}

std::vector<std::uint8_t> gather_read(std::span<const std::uint8_t> frame, const FaultBitmap& fm,
                                      std::size_t gc, std::size_t size) {
  if (frame.size() != fm.size()) throw std::invalid_argument("frame and fault bitmap differ in length");
  const IndexVector iv = index_calc(fm, gc, size);
  std::vector<std::uint8_t> ecb(size);
  for (std::size_t i = 0; i < frame.size(); ++i)
    if (iv.write_mask[i]) ecb[static_cast<std::size_t>(iv.index[i])] = frame[i];
  return ecb;
}

std::vector<std::uint8_t> write_count_delta(const FaultBitmap& fm, std::size_t gc, std::size_t size) {
  return index_calc(fm, gc, size).write_mask;
}

}  // namespace nvlife
