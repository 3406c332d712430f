#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace nvlife {

inline constexpr std::size_t kDataBytes = 64;

enum class Organization {
  kFrameDisabling,  // FD, or FD+R with repair_entries > 0
  kByteDisabling,   // L2C2, or L2C2+N with spare_bytes > 0
};

enum class Replacement { kLruFit, kLruBestFit };

struct CacheGeometry {
  std::size_t sets = 64;
  // Data bytes per frame; only prediction accepts values other than a full
  // cache line (small instances for exhaustive checks).
  std::size_t data_bytes = kDataBytes;
  std::size_t ways = 8;
  std::size_t metadata_bytes = 2;
  std::size_t spare_bytes = 0;
  Organization organization = Organization::kByteDisabling;
  std::size_t repair_entries = 0;
  Replacement replacement = Replacement::kLruFit;
  bool wear_leveling = true;
  double gc_period_s = 86400.0;
  // SRAM tag entry bits before the compression-encoding field.
  std::size_t tag_bits = 34;

  std::size_t frame_bytes() const { return data_bytes + metadata_bytes + spare_bytes; }
  std::size_t frames() const { return sets * ways; }
  bool byte_disabling() const { return organization == Organization::kByteDisabling; }

  // Throws ConfigError on inconsistent parameters.
  void validate() const;

  // FD, FD+6, L2C2, L2C2+6, L2C2-NWL, L2C2-BF, ...
  std::string variant_name() const;

  // Parses a variant name (case-insensitive) into organization, spares,
  // repair entries, wear leveling and replacement; other fields untouched.
  void apply_variant(std::string_view variant);
};

std::string_view to_string(Organization o);
std::string_view to_string(Replacement r);
Replacement parse_replacement(std::string_view s);

// Bits per frame in the SRAM tag array and the NVM data array.
struct StorageCost {
  std::size_t tag_bits;
  std::size_t data_bits;
  friend bool operator==(const StorageCost&, const StorageCost&) = default;
};

StorageCost storage_overhead(const CacheGeometry& g);

}  // namespace nvlife
