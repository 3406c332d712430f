#include "nvlife/codec.hpp"

#include <algorithm>
#include <cctype>

#include "nvlife/error.hpp"

namespace nvlife {

namespace {

constexpr std::array<EncodingInfo, kNumEncodings> kTable = {{
    {Encoding::kAllZeros, "All Zeros", 0, 0, 0},
    {Encoding::kRep8, "Rep. V(8)", 8, 0, 8},
    {Encoding::kB8D1, "B8D1", 8, 1, 16},
    {Encoding::kB4D1, "B4D1", 4, 1, 21},
    {Encoding::kB8D2, "B8D2", 8, 2, 23},
    {Encoding::kB8D3, "B8D3", 8, 3, 30},
    {Encoding::kB4D2, "B4D2", 4, 2, 36},
    {Encoding::kB2D1, "B2D1", 2, 1, 37},
    {Encoding::kB8D4, "B8D4", 8, 4, 37},
    {Encoding::kB8D5, "B8D5", 8, 5, 44},
    {Encoding::kB4D3, "B4D3", 4, 3, 51},
    {Encoding::kB8D6, "B8D6", 8, 6, 51},
    {Encoding::kB8D7, "B8D7", 8, 7, 58},
    {Encoding::kUncompressed, "Uncomp.", 0, 0, 64},
}};

std::uint64_t load_le(const std::uint8_t* p, std::size_t width) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

void store_le(std::uint64_t v, std::size_t width, std::vector<std::uint8_t>& out) {
  for (std::size_t i = 0; i < width; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::int64_t sign_extend(std::uint64_t v, std::size_t width) {
  if (width >= 8) return static_cast<std::int64_t>(v);
  const unsigned shift = static_cast<unsigned>(64 - 8 * width);
  return static_cast<std::int64_t>(v << shift) >> shift;
}

std::uint64_t width_mask(std::size_t width) {
  return width >= 8 ? ~std::uint64_t{0} : (std::uint64_t{1} << (8 * width)) - 1;
}

// Fewest two's-complement bytes holding x.
std::size_t signed_bytes(std::int64_t x) {
  std::size_t n = 1;
  while (n < 8) {
    const std::int64_t lo = -(std::int64_t{1} << (8 * n - 1));
    const std::int64_t hi = (std::int64_t{1} << (8 * n - 1)) - 1;
    if (x >= lo && x <= hi) break;
    ++n;
  }
  return n;
}

// Smallest delta width that represents every value of the block against the
// first value (or against zero), for values of `width` bytes.
std::size_t required_delta_width(const Block& block, std::size_t width) {
  const std::size_t count = kBlockBytes / width;
  const std::uint64_t mask = width_mask(width);
  const std::uint64_t base = load_le(block.data(), width);
  std::size_t need = 1;
  for (std::size_t i = 1; i < count; ++i) {
    const std::uint64_t v = load_le(block.data() + i * width, width);
    const std::size_t from_base = signed_bytes(sign_extend((v - base) & mask, width));
    const std::size_t from_zero = signed_bytes(sign_extend(v, width));
    need = std::max(need, std::min(from_base, from_zero));
    if (need >= width) break;
  }
  return need;
}

bool all_zero(const Block& b) {
  return std::all_of(b.begin(), b.end(), [](std::uint8_t x) { return x == 0; });
}

bool repeated8(const Block& b) {
  for (std::size_t i = 8; i < kBlockBytes; ++i)
    if (b[i] != b[i % 8]) return false;
  return true;
}

}  // namespace

const std::array<EncodingInfo, kNumEncodings>& encoding_table() { return kTable; }

const EncodingInfo& info(Encoding e) { return kTable[static_cast<std::size_t>(e)]; }

std::string_view name(Encoding e) { return info(e).name; }

std::optional<Encoding> encoding_from_name(std::string_view n) {
  for (const auto& row : kTable)
    if (row.name == n) return row.encoding;
  return std::nullopt;
}

std::optional<Encoding> encoding_from_tag(unsigned tag) {
  if (tag >= kNumEncodings) return std::nullopt;
  return static_cast<Encoding>(tag);
}

std::optional<CompressedBlock> try_encode(const Block& block, Encoding e) {
  const EncodingInfo& row = info(e);
  CompressedBlock out{e, {}};
  switch (e) {
    case Encoding::kAllZeros:
      if (!all_zero(block)) return std::nullopt;
      return out;
    case Encoding::kRep8:
      if (!repeated8(block)) return std::nullopt;
      out.payload.assign(block.begin(), block.begin() + 8);
      return out;
    case Encoding::kUncompressed:
      out.payload.assign(block.begin(), block.end());
      return out;
    default:
      break;
  }

  const std::size_t width = row.base_width;
  const std::size_t delta = row.delta_width;
  const std::size_t count = kBlockBytes / width;
  const std::uint64_t mask = width_mask(width);
  const std::uint64_t base = load_le(block.data(), width);

  std::vector<std::uint8_t> immediates(count / 8, 0);
  std::vector<std::uint64_t> deltas;
  deltas.reserve(count - 1);
  for (std::size_t i = 1; i < count; ++i) {
    const std::uint64_t v = load_le(block.data() + i * width, width);
    const std::int64_t d = sign_extend((v - base) & mask, width);
    if (signed_bytes(d) <= delta) {
      deltas.push_back(static_cast<std::uint64_t>(d));
      continue;
    }
    const std::int64_t imm = sign_extend(v, width);
    if (signed_bytes(imm) <= delta) {
      immediates[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
      deltas.push_back(static_cast<std::uint64_t>(imm));
      continue;
    }
    return std::nullopt;
  }

  out.payload.reserve(row.size);
  store_le(base, width, out.payload);
  out.payload.insert(out.payload.end(), immediates.begin(), immediates.end());
  for (std::uint64_t d : deltas) store_le(d, delta, out.payload);
  return out;
}

std::size_t compressed_size(const Block& block) {
  if (all_zero(block)) return 0;
  if (repeated8(block)) return 8;
  const std::size_t need8 = required_delta_width(block, 8);
  const std::size_t need4 = required_delta_width(block, 4);
  const std::size_t need2 = required_delta_width(block, 2);
  std::size_t best = kBlockBytes;
  for (const auto& row : kTable) {
    if (row.delta_width == 0) continue;
    const std::size_t need = row.base_width == 8 ? need8 : row.base_width == 4 ? need4 : need2;
    if (row.delta_width >= need) best = std::min(best, row.size);
  }
  return best;
}

CompressedBlock compress(const Block& block) {
  for (const auto& row : kTable) {
    if (auto cb = try_encode(block, row.encoding)) return *std::move(cb);
  }
  return {Encoding::kUncompressed, std::vector<std::uint8_t>(block.begin(), block.end())};
}

Block decompress(const CompressedBlock& cb) {
  const EncodingInfo& row = info(cb.encoding);
  if (cb.payload.size() != row.size) {
    throw FormatError("compressed payload for " + std::string(row.name) + " must be " +
                      std::to_string(row.size) + " bytes, got " +
                      std::to_string(cb.payload.size()));
  }
  Block out{};
  switch (cb.encoding) {
    case Encoding::kAllZeros:
      return out;
    case Encoding::kRep8:
      for (std::size_t i = 0; i < kBlockBytes; ++i) out[i] = cb.payload[i % 8];
      return out;
    case Encoding::kUncompressed:
      std::copy(cb.payload.begin(), cb.payload.end(), out.begin());
      return out;
    default:
      break;
  }

  const std::size_t width = row.base_width;
  const std::size_t delta = row.delta_width;
  const std::size_t count = kBlockBytes / width;
  const std::uint64_t mask = width_mask(width);
  const std::uint8_t* p = cb.payload.data();
  const std::uint64_t base = load_le(p, width);
  const std::uint8_t* immediates = p + width;
  const std::uint8_t* deltas = immediates + count / 8;

  auto put = [&](std::size_t i, std::uint64_t v) {
    for (std::size_t b = 0; b < width; ++b) out[i * width + b] = static_cast<std::uint8_t>(v >> (8 * b));
  };
  put(0, base);
  for (std::size_t i = 1; i < count; ++i) {
    const auto d = static_cast<std::uint64_t>(sign_extend(load_le(deltas + (i - 1) * delta, delta), delta));
    const bool immediate = (immediates[i / 8] >> (i % 8)) & 1u;
    put(i, (immediate ? d : base + d) & mask);
  }
  return out;
}

int class_index(int capacity) {
  if (capacity < 0) return -1;
  int idx = 0;
  for (int i = 0; i < kNumClasses; ++i)
    if (kCompressionClasses[i] <= capacity) idx = i;
  return idx;
}

std::optional<int> classify(int capacity) {
  const int idx = class_index(capacity);
  if (idx < 0) return std::nullopt;
  return kCompressionClasses[idx];
}

int class_index_of_size(std::size_t compressed_size) {
  return class_index(static_cast<int>(compressed_size));
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    s.push_back(kDigits[b >> 4]);
    s.push_back(kDigits[b & 0xf]);
  }
  return s;
}

std::vector<std::uint8_t> from_hex(std::string_view hex) {
  if (hex.starts_with("0x") || hex.starts_with("0X")) hex.remove_prefix(2);
  if (hex.size() % 2 != 0) throw FormatError("hex string has odd length");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    throw FormatError(std::string("invalid hex digit '") + c + "'");
  };
  std::vector<std::uint8_t> out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  return out;
}

}  // namespace nvlife
