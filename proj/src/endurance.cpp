#include "nvlife/endurance.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>

#include "nvlife/error.hpp"

namespace nvlife {

namespace {

constexpr std::uint8_t kMapVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>(v >> (8 * i));
  os.write(b.data(), b.size());
}

std::uint32_t get_u32(std::istream& is) {
  std::array<unsigned char, 4> b{};
  is.read(reinterpret_cast<char*>(b.data()), b.size());
  if (!is) throw FormatError("truncated map header");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void EnduranceModel::validate() const {
  if (!(mu > 0)) throw ConfigError("endurance mean must be positive");
  if (!(cv > 0 && cv < 1)) throw ConfigError("coefficient of variation must lie in (0, 1)");
}

Granularity granularity_for(const CacheGeometry& g) {
  return (!g.byte_disabling() && g.repair_entries > 0) ? Granularity::kBit : Granularity::kByte;
}

FrameMap::FrameMap(std::size_t sets, std::size_t ways, std::size_t frame_bytes, Granularity g,
                   double fill)
    : sets_(sets), ways_(ways), frame_bytes_(frame_bytes), granularity_(g) {
  values_.assign(sets * ways * units_per_frame(), fill);
}

void FrameMap::save(std::ostream& os, std::string_view magic) const {
  os.write(magic.data(), 4);
  const char head[4] = {static_cast<char>(kMapVersion), static_cast<char>(granularity_), 0, 0};
  os.write(head, 4);
  put_u32(os, static_cast<std::uint32_t>(sets_));
  put_u32(os, static_cast<std::uint32_t>(ways_));
  put_u32(os, static_cast<std::uint32_t>(frame_bytes_));
  std::vector<char> raw(values_.size() * 8);
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(values_[i]);
    for (int b = 0; b < 8; ++b) raw[i * 8 + b] = static_cast<char>(bits >> (8 * b));
  }
  os.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!os) throw FormatError("failed writing map dump");
}

FrameMap FrameMap::load(std::istream& is, std::string_view magic) {
  char got[4] = {};
  is.read(got, 4);
  if (!is || std::string_view(got, 4) != magic)
    throw FormatError("expected map magic '" + std::string(magic) + "'");
  char head[4] = {};
  is.read(head, 4);
  if (!is) throw FormatError("truncated map header");
  if (static_cast<std::uint8_t>(head[0]) != kMapVersion) throw FormatError("unsupported map version");
  const auto gran = static_cast<std::uint8_t>(head[1]);
  if (gran > 1) throw FormatError("bad map granularity");
  const std::size_t sets = get_u32(is);
  const std::size_t ways = get_u32(is);
  const std::size_t frame_bytes = get_u32(is);
  FrameMap m(sets, ways, frame_bytes, static_cast<Granularity>(gran));
  std::vector<unsigned char> raw(m.values_.size() * 8);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!is) throw FormatError("truncated map body");
  for (std::size_t i = 0; i < m.values_.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(raw[i * 8 + b]) << (8 * b);
    m.values_[i] = std::bit_cast<double>(bits);
  }
  return m;
}

void FrameMap::write_csv(std::ostream& os, std::string_view value_name) const {
  os << "set,way," << (granularity_ == Granularity::kBit ? "bit" : "byte") << ',' << value_name << '\n';
  os.precision(17);
  const std::size_t upf = units_per_frame();
  for (std::size_t s = 0; s < sets_; ++s)
    for (std::size_t w = 0; w < ways_; ++w)
      for (std::size_t u = 0; u < upf; ++u) os << s << ',' << w << ',' << u << ',' << at(s, w, u) << '\n';
}

RWMap init_rw_map(const CacheGeometry& g, const EnduranceModel& m) {
  m.validate();
  const Granularity gran = m.granularity;
  RWMap rw(g.sets, g.ways, g.frame_bytes(), gran);
  std::mt19937_64 rng(m.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double mu = m.mu;
  const double sigma = m.sigma();
  auto& v = rw.values();
  std::size_t out = 0;
  const std::size_t bytes = g.frames() * g.frame_bytes();
  for (std::size_t b = 0; b < bytes; ++b) {
    double weakest = 0;
    for (int bit = 0; bit < 8; ++bit) {
      const double sample = std::max(0.0, mu + sigma * normal(rng));
      if (gran == Granularity::kBit) {
        v[out++] = sample;
      } else if (bit == 0 || sample < weakest) {
        weakest = sample;
      }
    }
    if (gran == Granularity::kByte) v[out++] = weakest;
  }
  return rw;
}

std::size_t apply_wear(std::span<double> rw, std::span<const double> rate, double seconds,
                       std::vector<std::size_t>* died_at) {
  if (rw.size() != rate.size()) throw std::invalid_argument("rw and rate spans differ in length");
  std::size_t died = 0;
  for (std::size_t i = 0; i < rw.size(); ++i) {
    const double r = rate[i];
    double& left = rw[i];
    if (r <= 0.0 || left <= 0.0) continue;
    if (left / r <= seconds) {
      left = 0.0;
      ++died;
      if (died_at) died_at->push_back(i);
      continue;
    }
    left -= seconds * r;
    if (left <= 0.0) {
      left = 0.0;
      ++died;
      if (died_at) died_at->push_back(i);
    }
  }
  return died;
}

std::size_t apply_wear(RWMap& rw, const WRMap& wr, double seconds) {
  if (rw.sets() != wr.sets() || rw.ways() != wr.ways() || rw.frame_bytes() != wr.frame_bytes())
    throw std::invalid_argument("RW and WR maps differ in shape");
  if (rw.granularity() == Granularity::kByte) return apply_wear(std::span<double>(rw.values()), wr.values(), seconds);
  std::vector<double> expanded(rw.values().size());
  for (std::size_t i = 0; i < expanded.size(); ++i) expanded[i] = wr.values()[i / 8];
  return apply_wear(std::span<double>(rw.values()), expanded, seconds);
}

}  // namespace nvlife
