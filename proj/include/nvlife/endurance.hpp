#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "nvlife/geometry.hpp"

namespace nvlife {

enum class Granularity : std::uint8_t { kByte = 0, kBit = 1 };

// Writes-to-failure of a bitcell ~ Normal(mu, cv * mu).
struct EnduranceModel {
  double mu = 1e11;
  double cv = 0.2;
  Granularity granularity = Granularity::kByte;
  std::uint64_t seed = 1;

  double sigma() const { return cv * mu; }
  void validate() const;
};

// Bit granularity is needed only to count repairable bit failures (FD+R).
Granularity granularity_for(const CacheGeometry& g);

// Dense per-unit array over sets x ways x units, units being bytes or bits
// of each frame. Shared by the remaining-writes and write-rate maps.
class FrameMap {
 public:
  FrameMap() = default;
  FrameMap(std::size_t sets, std::size_t ways, std::size_t frame_bytes, Granularity g,
           double fill = 0.0);

  std::size_t sets() const { return sets_; }
  std::size_t ways() const { return ways_; }
  std::size_t frame_bytes() const { return frame_bytes_; }
  Granularity granularity() const { return granularity_; }
  std::size_t units_per_byte() const { return granularity_ == Granularity::kBit ? 8 : 1; }
  std::size_t units_per_frame() const { return frame_bytes_ * units_per_byte(); }
  std::size_t frame_index(std::size_t set, std::size_t way) const { return set * ways_ + way; }

  double& at(std::size_t set, std::size_t way, std::size_t unit) {
    return values_[frame_index(set, way) * units_per_frame() + unit];
  }
  double at(std::size_t set, std::size_t way, std::size_t unit) const {
    return values_[frame_index(set, way) * units_per_frame() + unit];
  }
  std::span<double> frame(std::size_t frame_idx) {
    return {values_.data() + frame_idx * units_per_frame(), units_per_frame()};
  }
  std::span<const double> frame(std::size_t frame_idx) const {
    return {values_.data() + frame_idx * units_per_frame(), units_per_frame()};
  }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  bool same_shape(const FrameMap& o) const {
    return sets_ == o.sets_ && ways_ == o.ways_ && frame_bytes_ == o.frame_bytes_ &&
           granularity_ == o.granularity_;
  }
  friend bool operator==(const FrameMap&, const FrameMap&) = default;

  // Binary dump: 4-byte magic, version, granularity, shape, raw LE doubles.
  void save(std::ostream& os, std::string_view magic) const;
  static FrameMap load(std::istream& is, std::string_view magic);
  // One row per unit: set,way,unit,value.
  void write_csv(std::ostream& os, std::string_view value_name) const;

 private:
  std::size_t sets_ = 0;
  std::size_t ways_ = 0;
  std::size_t frame_bytes_ = 0;
  Granularity granularity_ = Granularity::kByte;
  std::vector<double> values_;
};

// Remaining writes per unit; 0 means dead.
class RWMap : public FrameMap {
 public:
  using FrameMap::FrameMap;
  explicit RWMap(FrameMap m) : FrameMap(std::move(m)) {}

  static constexpr std::string_view kMagic = "NVRW";
  void save(std::ostream& os) const { FrameMap::save(os, kMagic); }
  static RWMap load(std::istream& is) { return RWMap(FrameMap::load(is, kMagic)); }
  bool live(std::size_t frame_idx, std::size_t unit) const { return frame(frame_idx)[unit] > 0.0; }
};

// Observed writes per simulated second, always per byte.
class WRMap : public FrameMap {
 public:
  WRMap() = default;
  WRMap(std::size_t sets, std::size_t ways, std::size_t frame_bytes, double fill = 0.0)
      : FrameMap(sets, ways, frame_bytes, Granularity::kByte, fill) {}
  explicit WRMap(FrameMap m) : FrameMap(std::move(m)) {}

  static constexpr std::string_view kMagic = "NVWR";
  void save(std::ostream& os) const { FrameMap::save(os, kMagic); }
  static WRMap load(std::istream& is) { return WRMap(FrameMap::load(is, kMagic)); }
};

// Samples every bitcell of the data array. A byte's budget is the minimum of
// its eight bitcells; negative samples clamp to 0 (dead from the start).
RWMap init_rw_map(const CacheGeometry& g, const EnduranceModel& m);

// rw -= T * rate, elementwise. A unit whose predicted lifetime rw/rate does
// not exceed T, or whose budget would fall to zero, ends at exactly 0.
// Returns the number of units that went from live to dead; their indexes are
// appended to `died` when given.
std::size_t apply_wear(std::span<double> rw, std::span<const double> rate, double seconds,
                       std::vector<std::size_t>* died = nullptr);

// Map form: the WR map is per byte; bit units take their byte's rate.
std::size_t apply_wear(RWMap& rw, const WRMap& wr, double seconds);

}  // namespace nvlife
