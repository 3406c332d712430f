#include "nvlife/geometry.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "nvlife/error.hpp"

namespace nvlife {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::size_t parse_count(std::string_view s, std::string_view what) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw ConfigError("bad " + std::string(what) + " count '" + std::string(s) + "'");
  return v;
}

}  // namespace

void CacheGeometry::validate() const {
  if (sets == 0 || ways == 0) throw ConfigError("cache needs at least one set and one way");
  if (data_bytes == 0 || data_bytes > kDataBytes) throw ConfigError("data_bytes must lie in [1, 64]");
  if (metadata_bytes < 1 || metadata_bytes > 2)
    throw ConfigError("metadata_bytes holds ECC and the encoding tag: 1 or 2 bytes");
  if (organization == Organization::kFrameDisabling && spare_bytes != 0)
    throw ConfigError("frame disabling does not use spare bytes");
  if (organization == Organization::kByteDisabling && repair_entries != 0)
    throw ConfigError("repair entries only apply to frame disabling");
  if (!(gc_period_s > 0)) throw ConfigError("gc_period_s must be positive");
}

std::string CacheGeometry::variant_name() const {
  std::string s;
  if (organization == Organization::kFrameDisabling) {
    s = "FD";
    if (repair_entries) s += "+" + std::to_string(repair_entries);
    return s;
  }
  s = "L2C2";
  if (spare_bytes) s += "+" + std::to_string(spare_bytes);
  if (!wear_leveling) s += "-NWL";
  if (replacement == Replacement::kLruBestFit) s += "-BF";
  return s;
}

void CacheGeometry::apply_variant(std::string_view variant) {
  std::string v = lower(variant);
  bool nwl = false;
  bool bf = false;
  for (;;) {
    if (v.ends_with("-nwl")) {
      nwl = true;
      v.resize(v.size() - 4);
    } else if (v.ends_with("-bf")) {
      bf = true;
      v.resize(v.size() - 3);
    } else {
      break;
    }
  }
  std::string_view head = v;
  std::size_t extra = 0;
  if (auto plus = head.find('+'); plus != std::string_view::npos) {
    extra = parse_count(head.substr(plus + 1), "redundancy");
    head = head.substr(0, plus);
  }
  if (head == "fd") {
    if (nwl || bf) throw ConfigError("-NWL/-BF only apply to L2C2 variants");
    organization = Organization::kFrameDisabling;
    repair_entries = extra;
    spare_bytes = 0;
    wear_leveling = true;
    replacement = Replacement::kLruFit;
  } else if (head == "l2c2") {
    organization = Organization::kByteDisabling;
    spare_bytes = extra;
    repair_entries = 0;
    wear_leveling = !nwl;
    replacement = bf ? Replacement::kLruBestFit : Replacement::kLruFit;
  } else {
    throw ConfigError("unknown cache variant '" + std::string(variant) + "'");
  }
}

std::string_view to_string(Organization o) {
  return o == Organization::kFrameDisabling ? "frame-disabling" : "byte-disabling";
}

std::string_view to_string(Replacement r) {
  return r == Replacement::kLruFit ? "lru-fit" : "lru-best-fit";
}

Replacement parse_replacement(std::string_view s) {
  const std::string v = lower(s);
  if (v == "lru-fit" || v == "fit") return Replacement::kLruFit;
  if (v == "lru-best-fit" || v == "best-fit" || v == "bf") return Replacement::kLruBestFit;
  throw ConfigError("unknown replacement policy '" + std::string(s) + "'");
}

StorageCost storage_overhead(const CacheGeometry& g) {
  const std::size_t frame_bits = g.frame_bytes() * 8;
  StorageCost cost{g.tag_bits, frame_bits};
  if (g.byte_disabling()) {
    cost.tag_bits += 4;               // compression encoding / frame capacity field
    cost.data_bits += g.frame_bytes();  // one fault-bitmap bit per byte
  } else {
    cost.data_bits += 1;  // frame disable bit
    // Each repair entry: a pointer to the failed bit plus its replacement bit.
    std::size_t pointer_bits = 0;
    while ((std::size_t{1} << pointer_bits) < frame_bits) ++pointer_bits;
    cost.data_bits += g.repair_entries * (pointer_bits + 1);
  }
  return cost;
}

}  // namespace nvlife
