#include "nvlife/workload.hpp"

#include <array>
#include <deque>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <unordered_set>

#include "nvlife/error.hpp"

namespace nvlife {

namespace {

constexpr std::string_view kTraceMagic = "NVT1";
constexpr std::uint8_t kTraceVersion = 1;

constexpr std::array<Encoding, 9> kHcrEncodings = {
    Encoding::kAllZeros, Encoding::kRep8, Encoding::kB8D1, Encoding::kB4D1, Encoding::kB8D2,
    Encoding::kB8D3,     Encoding::kB4D2, Encoding::kB2D1, Encoding::kB8D4};
constexpr std::array<Encoding, 4> kLcrEncodings = {Encoding::kB8D5, Encoding::kB4D3, Encoding::kB8D6,
                                                   Encoding::kB8D7};

std::uint64_t width_mask(std::size_t width) {
  return width >= 8 ? ~std::uint64_t{0} : (std::uint64_t{1} << (8 * width)) - 1;
}

// Candidate block built to compress with `e`; the caller checks the result.
Block synth_for(Encoding e, std::mt19937_64& rng) {
  Block b{};
  const EncodingInfo& row = info(e);
  switch (e) {
    case Encoding::kAllZeros:
      return b;
    case Encoding::kRep8: {
      const std::uint64_t v = rng() | (std::uint64_t{1} << 62);
      for (std::size_t i = 0; i < kBlockBytes; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * (i % 8)));
      return b;
    }
    case Encoding::kUncompressed:
      for (auto& x : b) x = static_cast<std::uint8_t>(rng());
      return b;
    default:
      break;
  }
  const std::size_t width = row.base_width;
  const std::size_t delta = row.delta_width;
  const std::size_t count = kBlockBytes / width;
  const std::uint64_t mask = width_mask(width);
  // Large base so that no value doubles as a short immediate.
  const std::uint64_t base = (rng() | (std::uint64_t{1} << (8 * width - 2))) & mask;
  const std::int64_t hi = (std::int64_t{1} << (8 * delta - 1)) - 1;
  const std::int64_t lo = -(hi + 1);
  std::uniform_int_distribution<std::int64_t> any(lo, hi);
  // One delta needs the full width so narrower encodings do not apply.
  const std::int64_t full_lo = delta == 1 ? 1 : (std::int64_t{1} << (8 * (delta - 1) - 1));
  std::uniform_int_distribution<std::int64_t> wide(full_lo, hi);
  std::uniform_int_distribution<std::size_t> pick(1, count - 1);
  const std::size_t forced = pick(rng);

  auto put = [&](std::size_t i, std::uint64_t v) {
    for (std::size_t k = 0; k < width; ++k) b[i * width + k] = static_cast<std::uint8_t>(v >> (8 * k));
  };
  put(0, base);
  for (std::size_t i = 1; i < count; ++i) {
    std::int64_t d = any(rng);
    if (i == forced) d = (rng() & 1) ? wide(rng) : -wide(rng);
    put(i, (base + static_cast<std::uint64_t>(d)) & mask);
  }
  return b;
}

Encoding pick_encoding(CompressGroup g, std::mt19937_64& rng) {
  switch (g) {
    case CompressGroup::kHcr:
      return kHcrEncodings[std::uniform_int_distribution<std::size_t>(0, kHcrEncodings.size() - 1)(rng)];
    case CompressGroup::kLcr:
      return kLcrEncodings[std::uniform_int_distribution<std::size_t>(0, kLcrEncodings.size() - 1)(rng)];
    case CompressGroup::kUnc:
      break;
  }
  return Encoding::kUncompressed;
}

Block synth_block(CompressGroup group, std::mt19937_64& rng) {
  for (;;) {
    Block b = synth_for(pick_encoding(group, rng), rng);
    if (group_of_size(compressed_size(b)) == group) return b;
  }
}

void put_le(std::ostream& os, std::uint64_t v, int bytes) {
  char buf[8];
  for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>(v >> (8 * i));
  os.write(buf, bytes);
}

std::uint64_t get_le(std::istream& is, int bytes) {
  unsigned char buf[8] = {};
  is.read(reinterpret_cast<char*>(buf), bytes);
  if (!is) throw TraceError("truncated trace");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::kInsert:
      return "insert";
    case EventKind::kRead:
      return "read";
    case EventKind::kWriteUpgrade:
      return "write_upgrade";
    case EventKind::kCleanEvictNotify:
      return "clean_evict_notify";
  }
  return "?";
}

std::optional<EventKind> parse_event_kind(std::string_view s) {
  for (auto k : {EventKind::kInsert, EventKind::kRead, EventKind::kWriteUpgrade, EventKind::kCleanEvictNotify})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

void validate_trace(const std::vector<TraceEvent>& events) {
  std::uint64_t last = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const TraceEvent& e = events[i];
    const bool wants_payload = e.kind == EventKind::kInsert;
    if (wants_payload != e.payload.has_value())
      throw TraceError("event " + std::to_string(i) + ": only inserts carry a payload");
    if (e.timestamp < last) throw TraceError("event " + std::to_string(i) + ": timestamp decreases");
    last = e.timestamp;
  }
}

CompressGroup group_of_size(std::size_t compressed_size) {
  if (compressed_size <= 37) return CompressGroup::kHcr;
  if (compressed_size < kBlockBytes) return CompressGroup::kLcr;
  return CompressGroup::kUnc;
}

void SyntheticProfile::validate() const {
  for (double f : {unc, lcr, hcr, reuse, write_fraction, notify_fraction})
    if (f < 0 || f > 1) throw ConfigError("workload fractions must lie in [0, 1]");
  if (std::abs(unc + lcr + hcr - 1.0) > 1e-9) throw ConfigError("compressibility fractions must sum to 1");
  if (footprint_blocks <= l2_blocks) throw ConfigError("footprint must exceed the private-cache filter");
  if (l2_blocks == 0) throw ConfigError("l2_blocks must be positive");
}

Block synth_block(CompressGroup group, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return synth_block(group, rng);
}

std::vector<TraceEvent> generate(const SyntheticProfile& p, std::size_t requests, std::uint64_t seed) {
  p.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::uint64_t> footprint(0, p.footprint_blocks - 1);

  struct Resident {
    std::uint64_t address;
    bool dirty;
  };
  std::deque<Resident> fifo;
  std::unordered_set<std::uint64_t> in_l2;
  std::uint64_t next_stream = p.footprint_blocks;
  std::uint64_t clock = 0;

  std::vector<TraceEvent> out;
  out.reserve(requests * 2 + p.l2_blocks);

  auto victim_payload = [&]() {
    const double u = unit(rng);
    const CompressGroup g = u < p.unc ? CompressGroup::kUnc
                            : u < p.unc + p.lcr ? CompressGroup::kLcr
                                                : CompressGroup::kHcr;
    return synth_block(g, rng);
  };

  for (std::size_t r = 0; r < requests; ++r) {
    std::uint64_t addr = 0;
    do {
      addr = unit(rng) < p.reuse ? footprint(rng) : next_stream++;
    } while (in_l2.contains(addr));

    const bool write = unit(rng) < p.write_fraction;
    out.push_back({write ? EventKind::kWriteUpgrade : EventKind::kRead, addr, clock, std::nullopt});
    clock += p.cycles_per_event;
    fifo.push_back({addr, write});
    in_l2.insert(addr);

    if (fifo.size() > p.l2_blocks) {
      const Resident v = fifo.front();
      fifo.pop_front();
      in_l2.erase(v.address);
      if (!v.dirty && unit(rng) < p.notify_fraction) {
        out.push_back({EventKind::kCleanEvictNotify, v.address, clock, std::nullopt});
      } else {
        out.push_back({EventKind::kInsert, v.address, clock, victim_payload()});
      }
      clock += p.cycles_per_event;
    }
  }
  return out;
}

void write_trace_binary(std::ostream& os, const std::vector<TraceEvent>& events) {
  validate_trace(events);
  os.write(kTraceMagic.data(), 4);
  const char head[4] = {static_cast<char>(kTraceVersion), 0, 0, 0};
  os.write(head, 4);
  put_le(os, events.size(), 8);
  for (const TraceEvent& e : events) {
    const std::uint16_t len = 1 + 8 + 8 + (e.payload ? kBlockBytes : 0);
    put_le(os, len, 2);
    put_le(os, static_cast<std::uint8_t>(e.kind), 1);
    put_le(os, e.address, 8);
    put_le(os, e.timestamp, 8);
    if (e.payload) os.write(reinterpret_cast<const char*>(e.payload->data()), kBlockBytes);
  }
  if (!os) throw TraceError("failed writing trace");
}

std::vector<TraceEvent> read_trace_binary(std::istream& is) {
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::string_view(magic, 4) != kTraceMagic) throw TraceError("not an .nvtrace file");
  const auto version = static_cast<std::uint8_t>(get_le(is, 4) & 0xff);
  if (version != kTraceVersion) throw TraceError("unsupported trace version " + std::to_string(version));
  const std::uint64_t count = get_le(is, 8);
  std::vector<TraceEvent> events;
  events.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 24)));
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = static_cast<std::size_t>(get_le(is, 2));
    const auto raw_kind = static_cast<std::uint8_t>(get_le(is, 1));
    if (raw_kind > 3) throw TraceError("event " + std::to_string(i) + ": unknown kind");
    TraceEvent e;
    e.kind = static_cast<EventKind>(raw_kind);
    e.address = get_le(is, 8);
    e.timestamp = get_le(is, 8);
    const std::size_t expect = 17 + (e.kind == EventKind::kInsert ? kBlockBytes : 0);
    if (len != expect) throw TraceError("event " + std::to_string(i) + ": bad record length");
    if (e.kind == EventKind::kInsert) {
      Block b{};
      is.read(reinterpret_cast<char*>(b.data()), kBlockBytes);
      if (!is) throw TraceError("truncated trace payload");
      e.payload = b;
    }
    events.push_back(std::move(e));
  }
  validate_trace(events);
  return events;
}

void write_trace_text(std::ostream& os, const std::vector<TraceEvent>& events) {
  validate_trace(events);
  for (const TraceEvent& e : events) {
    std::ostringstream addr;
    addr << std::hex << e.address;
    os << to_string(e.kind) << " 0x" << addr.str();
    if (e.payload) os << ' ' << to_hex(*e.payload);
    os << " @" << e.timestamp << '\n';
  }
}

std::vector<TraceEvent> read_trace_text(std::istream& is) {
  std::vector<TraceEvent> events;
  std::string line;
  std::size_t lineno = 0;
  std::uint64_t last = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string kind_tok;
    if (!(ls >> kind_tok)) continue;
    auto fail = [&](const std::string& why) {
      return TraceError("trace line " + std::to_string(lineno) + ": " + why);
    };
    auto kind = parse_event_kind(kind_tok);
    if (!kind) throw fail("unknown event kind '" + kind_tok + "'");
    TraceEvent e;
    e.kind = *kind;
    std::string addr_tok;
    if (!(ls >> addr_tok)) throw fail("missing address");
    try {
      e.address = std::stoull(addr_tok, nullptr, 16);
    } catch (const std::exception&) {
      throw fail("bad address '" + addr_tok + "'");
    }
    e.timestamp = last;
    std::string tok;
    while (ls >> tok) {
      if (tok.starts_with('@')) {
        try {
          e.timestamp = std::stoull(tok.substr(1));
        } catch (const std::exception&) {
          throw fail("bad timestamp '" + tok + "'");
        }
      } else {
        std::vector<std::uint8_t> bytes;
        try {
          bytes = from_hex(tok);
        } catch (const Error& err) {
          throw fail(err.what());
        }
        if (bytes.size() != kBlockBytes) throw fail("payload must be 64 bytes");
        Block b{};
        std::copy(bytes.begin(), bytes.end(), b.begin());
        e.payload = b;
      }
    }
    last = e.timestamp;
    events.push_back(std::move(e));
  }
  validate_trace(events);
  return events;
}

void write_trace(const std::filesystem::path& path, const std::vector<TraceEvent>& events) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw TraceError("cannot open " + path.string() + " for writing");
  if (path.extension() == ".txt")
    write_trace_text(os, events);
  else
    write_trace_binary(os, events);
}

std::vector<TraceEvent> read_trace(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw TraceError("cannot open trace " + path.string());
  char magic[4] = {};
  is.read(magic, 4);
  const bool binary = is.gcount() == 4 && std::string_view(magic, 4) == kTraceMagic;
  is.clear();
  is.seekg(0);
  return binary ? read_trace_binary(is) : read_trace_text(is);
}

}  // namespace nvlife
