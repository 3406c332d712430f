#include "nvlife/cachesim.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "nvlife/error.hpp"

namespace nvlife {

namespace {

constexpr std::string_view kSnapshotMagic = "NVHS";
constexpr std::uint8_t kSnapshotVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>(v >> (8 * i));
  os.write(b, 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4] = {};
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw FormatError("truncated health snapshot");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

bool is_request(EventKind k) { return k == EventKind::kRead || k == EventKind::kWriteUpgrade; }

}  // namespace

HealthSnapshot::HealthSnapshot(const CacheGeometry& g)
    : geometry_(g), fm_(g.frames(), FaultBitmap(g.frame_bytes())), dead_bits_(g.frames(), 0) {}

HealthSnapshot HealthSnapshot::from_rw(const CacheGeometry& g, const RWMap& rw) {
  if (rw.sets() != g.sets || rw.ways() != g.ways || rw.frame_bytes() != g.frame_bytes())
    throw std::invalid_argument("RW map does not match the cache geometry");
  HealthSnapshot h(g);
  const std::size_t upb = rw.units_per_byte();
  for (std::size_t f = 0; f < h.frames(); ++f) {
    const auto units = rw.frame(f);
    for (std::size_t b = 0; b < g.frame_bytes(); ++b) {
      std::uint32_t dead = 0;
      for (std::size_t u = 0; u < upb; ++u) dead += units[b * upb + u] <= 0.0 ? 1 : 0;
      if (dead) {
        h.fm_[f].kill(b);
        h.dead_bits_[f] += upb == 8 ? dead : 0;
      }
    }
  }
  return h;
}

void HealthSnapshot::kill_byte(std::size_t frame, std::size_t byte) { fm_[frame].kill(byte); }

void HealthSnapshot::kill_bit(std::size_t frame, std::size_t byte) {
  fm_[frame].kill(byte);
  ++dead_bits_[frame];
}

bool HealthSnapshot::frame_live(std::size_t frame) const { return capacity(frame) >= 0; }

int HealthSnapshot::capacity(std::size_t frame) const {
  const FaultBitmap& fm = fm_[frame];
  if (!geometry_.byte_disabling()) {
    const bool live = geometry_.repair_entries > 0 ? dead_bits_[frame] <= geometry_.repair_entries
                                                   : fm.popcount() == fm.size();
    return live ? static_cast<int>(geometry_.data_bytes) : -1;
  }
  const int cap = static_cast<int>(fm.popcount()) - static_cast<int>(geometry_.metadata_bytes);
  return std::min(cap, static_cast<int>(geometry_.data_bytes));
}

double HealthSnapshot::effective_capacity() const {
  if (fm_.empty()) return 0.0;
  double sum = 0;
  for (std::size_t f = 0; f < fm_.size(); ++f) sum += std::max(0, capacity(f));
  return sum / (static_cast<double>(geometry_.data_bytes) * static_cast<double>(fm_.size()));
}

ClassHistogram HealthSnapshot::histogram() const {
  ClassHistogram h{};
  for (std::size_t f = 0; f < fm_.size(); ++f) ++h[static_cast<std::size_t>(class_index(f) + 1)];
  return h;
}

ClassHistogram HealthSnapshot::set_histogram(std::size_t set) const {
  ClassHistogram h{};
  for (std::size_t w = 0; w < geometry_.ways; ++w)
    ++h[static_cast<std::size_t>(class_index(set * geometry_.ways + w) + 1)];
  return h;
}

void HealthSnapshot::save(std::ostream& os) const {
  os.write(kSnapshotMagic.data(), 4);
  const char head[4] = {static_cast<char>(kSnapshotVersion), 0, 0, 0};
  os.write(head, 4);
  put_u32(os, static_cast<std::uint32_t>(fm_.size()));
  put_u32(os, static_cast<std::uint32_t>(geometry_.frame_bytes()));
  for (std::size_t f = 0; f < fm_.size(); ++f) {
    put_u32(os, dead_bits_[f]);
    for (std::size_t b = 0; b < fm_[f].size(); ++b) os.put(fm_[f].live(b) ? 1 : 0);
  }
  if (!os) throw FormatError("failed writing health snapshot");
}

HealthSnapshot HealthSnapshot::load(std::istream& is, const CacheGeometry& g) {
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::string_view(magic, 4) != kSnapshotMagic) throw FormatError("not a health snapshot");
  char head[4] = {};
  is.read(head, 4);
  if (!is || static_cast<std::uint8_t>(head[0]) != kSnapshotVersion)
    throw FormatError("unsupported health snapshot version");
  const std::size_t frames = get_u32(is);
  const std::size_t fbytes = get_u32(is);
  if (frames != g.frames() || fbytes != g.frame_bytes())
    throw FormatError("health snapshot does not match the cache geometry");
  HealthSnapshot h(g);
  for (std::size_t f = 0; f < frames; ++f) {
    h.dead_bits_[f] = get_u32(is);
    for (std::size_t b = 0; b < fbytes; ++b) {
      const int c = is.get();
      if (c == std::char_traits<char>::eof()) throw FormatError("truncated health snapshot");
      if (c == 0) h.fm_[f].kill(b);
    }
  }
  return h;
}

void HealthSnapshot::write_csv(std::ostream& os) const {
  os << "set,way,live_bytes,dead_bits,class,bitmap\n";
  for (std::size_t f = 0; f < fm_.size(); ++f) {
    const auto cc = classify(capacity(f));
    os << f / geometry_.ways << ',' << f % geometry_.ways << ',' << fm_[f].popcount() << ','
       << dead_bits_[f] << ',' << (cc ? std::to_string(*cc) : std::string("dead")) << ','
       << fm_[f].str() << '\n';
  }
}

void PerfModel::validate() const {
  if (!(clock_hz > 0)) throw ConfigError("clock_hz must be positive");
  if (cores == 0) throw ConfigError("cores must be positive");
  if (!(base_cpi > 0)) throw ConfigError("base_cpi must be positive");
  if (!(miss_penalty >= 0)) throw ConfigError("miss_penalty must be non-negative");
  if (!(apki > 0)) throw ConfigError("apki must be positive");
}

WRMap EpochStats::wr_map(const CacheGeometry& g) const {
  WRMap wr(g.sets, g.ways, g.frame_bytes());
  if (runs == 0) return wr;
  if (rate_sum.size() != wr.values().size()) throw std::invalid_argument("stats do not match geometry");
  for (std::size_t i = 0; i < rate_sum.size(); ++i)
    wr.values()[i] = rate_sum[i] / static_cast<double>(runs);
  return wr;
}

void EpochStats::merge(const EpochStats& o) {
  requests += o.requests;
  hits += o.hits;
  misses += o.misses;
  inserts += o.inserts;
  bypasses += o.bypasses;
  evictions += o.evictions;
  invalidations += o.invalidations;
  for (std::size_t i = 0; i < insert_classes.size(); ++i) insert_classes[i] += o.insert_classes[i];
  instructions += o.instructions;
  cycles += o.cycles;
  seconds += o.seconds;
  if (byte_writes.empty()) byte_writes.assign(o.byte_writes.size(), 0);
  if (rate_sum.empty()) rate_sum.assign(o.rate_sum.size(), 0.0);
  if (byte_writes.size() != o.byte_writes.size() || rate_sum.size() != o.rate_sum.size())
    throw std::invalid_argument("merging stats of different geometries");
  for (std::size_t i = 0; i < byte_writes.size(); ++i) byte_writes[i] += o.byte_writes[i];
  for (std::size_t i = 0; i < rate_sum.size(); ++i) rate_sum[i] += o.rate_sum[i];
  ipc_sum += o.ipc_sum;
  runs += o.runs;
}

std::size_t gc_at(const CacheGeometry& g, double seconds) {
  if (!g.wear_leveling) return 0;
  const double periods = std::floor(seconds / g.gc_period_s);
  return static_cast<std::size_t>(std::fmod(periods, static_cast<double>(g.frame_bytes())));
}

Cache::Cache(const CacheGeometry& g, HealthSnapshot health, double start_seconds)
    : geometry_(g), health_(std::move(health)), fbytes_(g.frame_bytes()) {
  g.validate();
  if (g.data_bytes != kBlockBytes) throw ConfigError("simulated frames hold full 64-byte blocks");
  if (health_.frames() != g.frames()) throw std::invalid_argument("health snapshot does not match geometry");
  state_.resize(g.frames());
  cells_.assign(g.frames() * fbytes_, 0);
  writes_.assign(g.frames() * fbytes_, 0);
  now_ = start_seconds;
  gc_ = gc_at(g, start_seconds);
  next_rotation_ = (std::floor(start_seconds / g.gc_period_s) + 1.0) * g.gc_period_s;
}

std::optional<std::size_t> Cache::lookup(std::uint64_t address) const {
  const std::size_t set = set_of(address);
  const std::uint64_t tag = tag_of(address);
  for (std::size_t w = 0; w < geometry_.ways; ++w) {
    const FrameState& f = state_[idx(set, w)];
    if (f.valid && f.tag == tag) return w;
  }
  return std::nullopt;
}

std::optional<std::size_t> Cache::select_victim(std::size_t set, std::size_t data_bytes) const {
  std::optional<std::size_t> best;
  int best_cap = 0;
  std::uint64_t best_stamp = 0;
  const bool best_fit = geometry_.replacement == Replacement::kLruBestFit;
  for (std::size_t w = 0; w < geometry_.ways; ++w) {
    const std::size_t f = idx(set, w);
    const int cap = health_.capacity(f);
    if (cap < static_cast<int>(data_bytes)) continue;
    const int cc = *classify(cap);
    const std::uint64_t stamp = state_[f].valid ? state_[f].stamp : 0;
    bool better = !best;
    if (best) {
      if (best_fit && cc != best_cap)
        better = cc < best_cap;
      else
        better = stamp < best_stamp;
    }
    if (better) {
      best = w;
      best_cap = cc;
      best_stamp = stamp;
    }
  }
  return best;
}

void Cache::store(std::size_t frame, std::uint64_t tag, const Block& block,
                  const std::optional<CompressedBlock>& cb) {
  FrameState& st = state_[frame];
  auto out = cells(frame);
  std::uint64_t* counts = writes_.data() + frame * fbytes_;
  if (!cb) {
    // Frame disabling stores the raw block plus metadata over the whole frame.
    std::copy(block.begin(), block.end(), out.begin());
    std::fill(out.begin() + kBlockBytes, out.end(), 0);
    for (std::size_t i = 0; i < fbytes_; ++i) ++counts[i];
    st.ce = Encoding::kUncompressed;
    st.stored_bytes = static_cast<std::uint8_t>(fbytes_);
  } else {
    std::vector<std::uint8_t> ecb(geometry_.metadata_bytes + cb->size());
    ecb[0] = static_cast<std::uint8_t>(cb->encoding);
    std::uint8_t check = 0;
    for (std::uint8_t b : cb->payload) check ^= b;
    if (geometry_.metadata_bytes > 1) ecb[1] = check;
    std::copy(cb->payload.begin(), cb->payload.end(), ecb.begin() + geometry_.metadata_bytes);
    const auto wm = scatter_write(ecb, health_.fm(frame), gc_, out);
    for (std::size_t i = 0; i < fbytes_; ++i) counts[i] += wm[i];
    st.ce = cb->encoding;
    st.stored_bytes = static_cast<std::uint8_t>(ecb.size());
  }
  st.valid = true;
  st.tag = tag;
  touch(frame);
}

void Cache::write_block(std::size_t set, std::size_t way, std::uint64_t tag, const Block& block) {
  const std::size_t f = idx(set, way);
  std::optional<CompressedBlock> cb;
  std::size_t need = kBlockBytes;
  if (geometry_.byte_disabling()) {
    cb = compress(block);
    ++codec_calls_;
    need = cb->size();
  }
  if (health_.capacity(f) < static_cast<int>(need))
    throw CapacityError("block of " + std::to_string(need) + " bytes does not fit frame " + std::to_string(f));
  store(f, tag, block, cb);
}

Block Cache::read_block(std::size_t set, std::size_t way) const {
  const std::size_t f = idx(set, way);
  const FrameState& st = state_[f];
  if (!st.valid) throw std::logic_error("reading an invalid frame");
  const auto in = cells(f);
  Block b{};
  if (!geometry_.byte_disabling()) {
    std::copy(in.begin(), in.begin() + kBlockBytes, b.begin());
    return b;
  }
  const auto ecb = gather_read(in, health_.fm(f), gc_, st.stored_bytes);
  const auto enc = encoding_from_tag(ecb[0]);
  if (!enc) throw FormatError("corrupt encoding tag");
  CompressedBlock cb{*enc, std::vector<std::uint8_t>(ecb.begin() + geometry_.metadata_bytes, ecb.end())};
  return decompress(cb);
}

void Cache::invalidate(std::size_t frame) {
  state_[frame].valid = false;
  state_[frame].stamp = 0;
}

Outcome Cache::access(const TraceEvent& e) {
  const bool wants_payload = e.kind == EventKind::kInsert;
  if (wants_payload != e.payload.has_value()) throw TraceError("only inserts carry a payload");
  const std::size_t set = set_of(e.address);
  const auto way = lookup(e.address);
  switch (e.kind) {
    case EventKind::kRead:
      if (!way) return Outcome::kMiss;
      touch(idx(set, *way));
      return Outcome::kHit;
    case EventKind::kWriteUpgrade:
      if (!way) return Outcome::kMiss;
      invalidate(idx(set, *way));
      ++invalidations_;
      return Outcome::kInvalidate;
    case EventKind::kCleanEvictNotify:
      if (!way) return Outcome::kIgnored;
      touch(idx(set, *way));
      return Outcome::kHit;
    case EventKind::kInsert:
      break;
  }
  if (way) {
    touch(idx(set, *way));
    return Outcome::kHit;
  }
  std::optional<CompressedBlock> cb;
  std::size_t need = kBlockBytes;
  if (geometry_.byte_disabling()) {
    cb = compress(*e.payload);
    ++codec_calls_;
    need = cb->size();
  }
  ++insert_classes_[static_cast<std::size_t>(class_index_of_size(need))];
  const auto victim = select_victim(set, need);
  if (!victim) return Outcome::kBypass;
  const std::size_t f = idx(set, *victim);
  if (state_[f].valid) ++evictions_;
  store(f, tag_of(e.address), *e.payload, cb);
  return Outcome::kInsert;
}

void Cache::disable_unit(std::size_t set, std::size_t way, std::size_t byte) {
  const std::size_t f = idx(set, way);
  if (byte >= fbytes_) throw std::out_of_range("byte outside frame");
  FrameState& st = state_[f];
  if (!geometry_.byte_disabling()) {
    if (geometry_.repair_entries > 0)
      health_.kill_bit(f, byte);
    else
      health_.kill_byte(f, byte);
    if (st.valid && !health_.frame_live(f)) {
      invalidate(f);
      ++invalidations_;
    }
    return;
  }
  if (!health_.fm(f).live(byte)) return;
  bool lost = false;
  if (st.valid) lost = write_count_delta(health_.fm(f), gc_, st.stored_bytes)[byte] != 0;
  health_.kill_byte(f, byte);
  if (st.valid && (lost || health_.capacity(f) < static_cast<int>(st.stored_bytes) -
                                                     static_cast<int>(geometry_.metadata_bytes))) {
    invalidate(f);
    ++invalidations_;
  }
}

void Cache::flush_and_rotate_gc() {
  for (std::size_t f = 0; f < state_.size(); ++f) invalidate(f);
  gc_ = (gc_ + 1) % fbytes_;
}

void Cache::advance_clock(double seconds) {
  now_ += seconds;
  if (!geometry_.wear_leveling) return;
  while (now_ >= next_rotation_) {
    flush_and_rotate_gc();
    next_rotation_ += geometry_.gc_period_s;
  }
}

void Cache::reset_counters() {
  std::fill(writes_.begin(), writes_.end(), 0);
  evictions_ = 0;
  invalidations_ = 0;
  insert_classes_.fill(0);
}

EpochStats simulate_phase(const CacheGeometry& g, const HealthSnapshot& health,
                          std::span<const TraceEvent> events, const PerfModel& perf,
                          double start_seconds, std::size_t warmup) {
  perf.validate();
  Cache cache(g, health, start_seconds);
  warmup = std::min(warmup, events.size());
  for (std::size_t i = 0; i < warmup; ++i) cache.access(events[i]);
  cache.reset_counters();

  EpochStats s;
  const double ipr = perf.instructions_per_request();
  const double cores = static_cast<double>(perf.cores);
  for (std::size_t i = warmup; i < events.size(); ++i) {
    const TraceEvent& e = events[i];
    const Outcome o = cache.access(e);
    if (is_request(e.kind)) {
      ++s.requests;
      const bool miss = o == Outcome::kMiss;
      if (miss)
        ++s.misses;
      else
        ++s.hits;
      const double cyc = (ipr * perf.base_cpi + (miss ? perf.miss_penalty : 0.0)) / cores;
      s.cycles += cyc;
      cache.advance_clock(cyc / perf.clock_hz);
    } else if (o == Outcome::kInsert) {
      ++s.inserts;
    } else if (o == Outcome::kBypass) {
      ++s.bypasses;
    }
  }
  s.instructions = static_cast<double>(s.requests) * ipr;
  s.seconds = s.cycles / perf.clock_hz;
  s.evictions = cache.evictions();
  s.invalidations = cache.invalidations();
  s.insert_classes = cache.insert_classes();
  s.byte_writes.assign(cache.byte_writes().begin(), cache.byte_writes().end());
  s.rate_sum.assign(s.byte_writes.size(), 0.0);
  if (s.seconds > 0) {
    for (std::size_t i = 0; i < s.byte_writes.size(); ++i)
      s.rate_sum[i] = static_cast<double>(s.byte_writes[i]) / s.seconds;
    s.ipc_sum = (s.instructions / cores) / s.cycles;
  }
  s.runs = 1;
  return s;
}

}  // namespace nvlife
