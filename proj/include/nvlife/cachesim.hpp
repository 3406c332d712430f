#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "nvlife/codec.hpp"
#include "nvlife/endurance.hpp"
#include "nvlife/geometry.hpp"
#include "nvlife/layout.hpp"
#include "nvlife/workload.hpp"

namespace nvlife {

// Histogram slots: slot 0 counts dead frames, slot 1 + c counts class c.
inline constexpr std::size_t kHistogramSlots = kNumClasses + 1;
using ClassHistogram = std::array<std::uint32_t, kHistogramSlots>;

// Health of the data array at one instant: the fault bitmap of every frame
// plus, for repair-entry organizations, the number of failed bitcells.
class HealthSnapshot {
 public:
  HealthSnapshot() = default;
  explicit HealthSnapshot(const CacheGeometry& g);  // everything live
  static HealthSnapshot from_rw(const CacheGeometry& g, const RWMap& rw);

  const CacheGeometry& geometry() const { return geometry_; }
  std::size_t frames() const { return fm_.size(); }
  const FaultBitmap& fm(std::size_t frame) const { return fm_[frame]; }
  std::uint32_t dead_bits(std::size_t frame) const { return dead_bits_[frame]; }

  void kill_byte(std::size_t frame, std::size_t byte);
  void kill_bit(std::size_t frame, std::size_t byte);

  bool frame_live(std::size_t frame) const;
  // Data bytes a frame can hold for blocks: all or -1 (dead) under frame
  // disabling; live bytes minus metadata, capped at the data width, otherwise.
  int capacity(std::size_t frame) const;
  // Class index in [0, 12) or -1 for a dead frame.
  int class_index(std::size_t frame) const { return nvlife::class_index(capacity(frame)); }

  // Sum of max(0, capacity) over frames / (data bytes * frames).
  double effective_capacity() const;
  ClassHistogram histogram() const;
  ClassHistogram set_histogram(std::size_t set) const;

  friend bool operator==(const HealthSnapshot& a, const HealthSnapshot& b) {
    return a.fm_ == b.fm_ && a.dead_bits_ == b.dead_bits_;
  }

  // Binary dump: "NVHS", version, frame count, frame bytes, then per frame
  // a u32 dead-bit count and the bitmap packed one byte per frame byte.
  void save(std::ostream& os) const;
  static HealthSnapshot load(std::istream& is, const CacheGeometry& g);
  // One row per frame: set,way,live_bytes,dead_bits,class,bitmap.
  void write_csv(std::ostream& os) const;

 private:
  CacheGeometry geometry_;
  std::vector<FaultBitmap> fm_;
  std::vector<std::uint32_t> dead_bits_;
};

struct FrameState {
  bool valid = false;
  std::uint64_t tag = 0;
  Encoding ce = Encoding::kUncompressed;
  std::uint8_t stored_bytes = 0;  // ECB bytes on the array (compressed + metadata)
  std::uint64_t stamp = 0;        // last touch; 0 = never, oldest
};

enum class Outcome : std::uint8_t { kHit, kMiss, kInsert, kBypass, kInvalidate, kIgnored };

// Cycle-free performance model: each request stands for 1000/apki
// instructions at base_cpi, each LLC miss adds miss_penalty cycles, and the
// work is split evenly across cores.
struct PerfModel {
  double clock_hz = 3.5e9;
  std::size_t cores = 4;
  double base_cpi = 1.0;
  double miss_penalty = 800.0;
  double apki = 20.0;

  double instructions_per_request() const { return 1000.0 / apki; }
  void validate() const;
};

struct EpochStats {
  std::uint64_t requests = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t inserts = 0;
  std::uint64_t bypasses = 0;
  std::uint64_t evictions = 0;
  std::uint64_t invalidations = 0;
  std::array<std::uint64_t, kNumClasses> insert_classes{};  // by compressed size
  double instructions = 0;
  double cycles = 0;  // per core
  double seconds = 0;
  std::vector<std::uint64_t> byte_writes;  // frames * frame_bytes
  // Per-byte write rates and IPC summed over merged runs; divide by `runs`.
  std::vector<double> rate_sum;
  double ipc_sum = 0;
  std::size_t runs = 0;

  double ipc() const { return runs ? ipc_sum / static_cast<double>(runs) : 0.0; }
  WRMap wr_map(const CacheGeometry& g) const;
  // Counters add; rates and IPC accumulate for averaging.
  void merge(const EpochStats& other);
};

// One bank of the last-level cache.
class Cache {
 public:
  Cache(const CacheGeometry& g, HealthSnapshot health, double start_seconds = 0.0);

  const CacheGeometry& geometry() const { return geometry_; }
  const HealthSnapshot& health() const { return health_; }
  const FrameState& frame(std::size_t set, std::size_t way) const { return state_[idx(set, way)]; }
  std::size_t gc() const { return gc_; }
  std::size_t set_of(std::uint64_t address) const { return address % geometry_.sets; }
  std::uint64_t tag_of(std::uint64_t address) const { return address / geometry_.sets; }
  std::optional<std::size_t> lookup(std::uint64_t address) const;

  Outcome access(const TraceEvent& e);

  // Way for a block of `data_bytes` compressed bytes, or nullopt (bypass).
  std::optional<std::size_t> select_victim(std::size_t set, std::size_t data_bytes) const;

  // Stores `block` in the frame, counting one write per written byte.
  void write_block(std::size_t set, std::size_t way, std::uint64_t tag, const Block& block);
  Block read_block(std::size_t set, std::size_t way) const;

  // Byte-granularity failure (bit failure for repair-entry organizations).
  void disable_unit(std::size_t set, std::size_t way, std::size_t byte);

  void flush_and_rotate_gc();
  // Moves simulated time forward, rotating at every gc_period boundary.
  void advance_clock(double seconds);
  double now() const { return now_; }

  std::span<const std::uint64_t> byte_writes() const { return writes_; }
  std::uint64_t codec_calls() const { return codec_calls_; }
  std::uint64_t evictions() const { return evictions_; }
  std::uint64_t invalidations() const { return invalidations_; }
  // Insert attempts (stored or bypassed) by compressed-size class.
  const std::array<std::uint64_t, kNumClasses>& insert_classes() const { return insert_classes_; }
  // Zeroes write, eviction, invalidation and insert counters.
  void reset_counters();

 private:
  std::size_t idx(std::size_t set, std::size_t way) const { return set * geometry_.ways + way; }
  std::span<std::uint8_t> cells(std::size_t frame) {
    return {cells_.data() + frame * fbytes_, fbytes_};
  }
  std::span<const std::uint8_t> cells(std::size_t frame) const {
    return {cells_.data() + frame * fbytes_, fbytes_};
  }
  void touch(std::size_t frame) { state_[frame].stamp = ++clock_; }
  void invalidate(std::size_t frame);
  void store(std::size_t frame, std::uint64_t tag, const Block& block,
             const std::optional<CompressedBlock>& cb);

  CacheGeometry geometry_;
  HealthSnapshot health_;
  std::size_t fbytes_;
  std::vector<FrameState> state_;
  std::vector<std::uint8_t> cells_;
  std::vector<std::uint64_t> writes_;
  std::uint64_t clock_ = 0;
  std::size_t gc_ = 0;
  double now_ = 0;
  double next_rotation_ = 0;
  std::uint64_t codec_calls_ = 0;
  std::uint64_t evictions_ = 0;
  std::uint64_t invalidations_ = 0;
  std::array<std::uint64_t, kNumClasses> insert_classes_{};
};

// Global counter in effect at simulated time `seconds`.
std::size_t gc_at(const CacheGeometry& g, double seconds);

// Replays `events` on a cache built from `health`, starting at simulated
// time `start_seconds`. The first `warmup` events fill the cache without
// being counted.
EpochStats simulate_phase(const CacheGeometry& g, const HealthSnapshot& health,
                          std::span<const TraceEvent> events, const PerfModel& perf,
                          double start_seconds = 0.0, std::size_t warmup = 0);

}  // namespace nvlife
