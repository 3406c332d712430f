#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "nvlife/codec.hpp"

namespace nvlife {

// LLC-visible events of a non-inclusive hierarchy.
enum class EventKind : std::uint8_t {
  kInsert = 0,            // L2 victim arriving with its data
  kRead = 1,              // L2 read miss looking up the LLC
  kWriteUpgrade = 2,      // L2 write miss: an LLC hit moves the block up and invalidates it
  kCleanEvictNotify = 3,  // clean L2 victim announced without data
};

std::string_view to_string(EventKind k);
std::optional<EventKind> parse_event_kind(std::string_view s);

struct TraceEvent {
  EventKind kind = EventKind::kRead;
  std::uint64_t address = 0;  // block address (byte address >> 6)
  std::uint64_t timestamp = 0;  // simulated cycle
  std::optional<Block> payload;  // inserts only

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

// Throws TraceError if an insert lacks a payload, another kind carries one,
// or timestamps decrease.
void validate_trace(const std::vector<TraceEvent>& events);

// Compressibility groups by compressed size.
enum class CompressGroup : std::uint8_t { kHcr = 0, kLcr = 1, kUnc = 2 };
CompressGroup group_of_size(std::size_t compressed_size);  // <= 37, (37, 64), 64

struct SyntheticProfile {
  // Insert compressibility targets: uncompressible, low-ratio, high-ratio.
  double unc = 0.22;
  double lcr = 0.29;
  double hcr = 0.49;

  // Addresses: `reuse` of the requests go to a footprint of `footprint_blocks`
  // blocks (uniform over cache sets), the rest stream through new blocks.
  // The defaults keep the footprint just under a 64 x 8 cache.
  std::size_t footprint_blocks = 448;
  double reuse = 0.97;
  // Private-cache filter: requested blocks sit in a FIFO of this many
  // entries and are evicted to the LLC in arrival order.
  std::size_t l2_blocks = 64;
  // Fraction of requests that are write misses (write-upgrade events).
  double write_fraction = 0.3;
  // Fraction of clean victims announced without data instead of inserted.
  double notify_fraction = 0.1;
  // Timestamp spacing between consecutive events.
  std::uint64_t cycles_per_event = 20;

  void validate() const;
  static SyntheticProfile reference_mix() { return {}; }
};

// Deterministic under `seed`. `requests` read/write-upgrade events are
// generated; evictions from the private-cache filter are interleaved.
std::vector<TraceEvent> generate(const SyntheticProfile& profile, std::size_t requests,
                                 std::uint64_t seed);

// A 64-byte payload whose smallest encoding falls in `group`.
Block synth_block(CompressGroup group, std::uint64_t seed);

// `.nvtrace` binary: "NVT1", version byte, 3 reserved bytes, u64 event
// count, then records of [u16 length][u8 kind][u64 address][u64 timestamp]
// [64-byte payload for inserts], all little-endian.
void write_trace_binary(std::ostream& os, const std::vector<TraceEvent>& events);
std::vector<TraceEvent> read_trace_binary(std::istream& is);

// Text fixtures, one event per line, '#' comments:
//   <kind> <hex address> [<128 hex digit payload>] [@<cycle>]
void write_trace_text(std::ostream& os, const std::vector<TraceEvent>& events);
std::vector<TraceEvent> read_trace_text(std::istream& is);

// File forms; reading detects binary by its magic.
void write_trace(const std::filesystem::path& path, const std::vector<TraceEvent>& events);
std::vector<TraceEvent> read_trace(const std::filesystem::path& path);

}  // namespace nvlife
