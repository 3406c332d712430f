#include <doctest.h>

#include <random>
#include <set>

#include "nvlife/codec.hpp"
#include "nvlife/error.hpp"
#include "oracles/bdi_oracle.hpp"
#include "support/blocks.hpp"

using namespace nvlife;

namespace {

Block from_u64(std::initializer_list<std::uint64_t> words) {
  Block b{};
  std::size_t i = 0;
  for (std::uint64_t w : words)
    for (int k = 0; k < 8; ++k) b[i++] = static_cast<std::uint8_t>(w >> (8 * k));
  return b;
}

}  // namespace

TEST_CASE("encoding table sizes follow base + mask + deltas") {
  CHECK(encoding_table().size() == kNumEncodings);
  std::size_t prev = 0;
  for (const auto& row : encoding_table()) {
    CHECK(row.size >= prev);
    prev = row.size;
    CHECK(row.size == oracle::kRows[static_cast<std::size_t>(row.encoding)].size);
    if (row.delta_width == 0) continue;
    const std::size_t values = kBlockBytes / row.base_width;
    CHECK(row.size == row.base_width + values / 8 + (values - 1) * row.delta_width);
  }
  CHECK(info(Encoding::kB8D1).size == 16);
  CHECK(info(Encoding::kB2D1).size == 37);
  CHECK(info(Encoding::kUncompressed).size == 64);
}

TEST_CASE("names and tags round trip") {
  for (const auto& row : encoding_table()) {
    CHECK(encoding_from_name(row.name) == row.encoding);
    CHECK(encoding_from_tag(static_cast<unsigned>(row.encoding)) == row.encoding);
  }
  CHECK_FALSE(encoding_from_tag(14));
  CHECK_FALSE(encoding_from_name("B16D1"));
}

TEST_CASE("hand-built blocks pick the expected encoding") {
  CHECK(compress(Block{}).encoding == Encoding::kAllZeros);
  CHECK(compress(Block{}).size() == 0);

  Block rep = from_u64({0x1122334455667788, 0x1122334455667788, 0x1122334455667788, 0x1122334455667788,
                        0x1122334455667788, 0x1122334455667788, 0x1122334455667788, 0x1122334455667788});
  CHECK(compress(rep).encoding == Encoding::kRep8);

  const std::uint64_t base = 0x7f00000000001000;
  Block d1 = from_u64({base, base + 1, base - 3, base + 127, base - 128, base, base + 5, base + 9});
  CHECK(compress(d1).encoding == Encoding::kB8D1);

  // Immediates: small values next to pointers.
  Block mixed = from_u64({base, 3, base + 2, 0, base - 1, 100, base, 7});
  const auto cb = compress(mixed);
  CHECK(cb.encoding == Encoding::kB8D1);
  CHECK(cb.payload[8] == 0b10101010);  // mask byte follows the 8-byte base
  CHECK(decompress(cb) == mixed);

  Block d2 = from_u64({base, base + 200, base - 300, base, base, base, base, base});
  CHECK(compress(d2).encoding == Encoding::kB8D2);
}

TEST_CASE("payload layout is little-endian base, mask, deltas") {
  const std::uint64_t base = 0x0102030405060708;
  Block b = from_u64({base, base + 1, base + 2, base + 3, base + 4, base + 5, base + 6, base - 1});
  const auto cb = try_encode(b, Encoding::kB8D1);
  REQUIRE(cb);
  REQUIRE(cb->size() == 16);
  CHECK(cb->payload[0] == 0x08);
  CHECK(cb->payload[7] == 0x01);
  CHECK(cb->payload[8] == 0);
  CHECK(cb->payload[9] == 1);
  CHECK(cb->payload[15] == 0xff);
}

TEST_CASE("try_encode refuses blocks out of range") {
  Block b{};
  b[8] = 1;
  b[15] = 0x80;  // second 8-byte value needs a full-width delta
  CHECK_FALSE(try_encode(b, Encoding::kB8D1));
  CHECK_FALSE(try_encode(b, Encoding::kRep8));
  CHECK(try_encode(b, Encoding::kUncompressed));
}

TEST_CASE("random blocks: round trip and oracle size agreement") {
  std::mt19937_64 rng(7);
  std::set<Encoding> seen;
  for (int i = 0; i < 20000; ++i) {
    const Block b = support::random_block(rng);
    const CompressedBlock cb = compress(b);
    seen.insert(cb.encoding);
    REQUIRE(decompress(cb) == b);
    REQUIRE(cb.size() == oracle::best_size(b.data()));
    REQUIRE(compressed_size(b) == cb.size());
    for (const auto& row : encoding_table()) {
      const auto enc = try_encode(b, row.encoding);
      REQUIRE(enc.has_value() == oracle::fits(b.data(), oracle::kRows[static_cast<std::size_t>(row.encoding)]));
      if (enc) {
        REQUIRE(enc->size() == row.size);
        REQUIRE(decompress(*enc) == b);
      }
    }
  }
  CHECK(seen.size() == kNumEncodings);
}

TEST_CASE("decompress rejects wrong payload lengths") {
  CompressedBlock cb{Encoding::kB4D1, std::vector<std::uint8_t>(20)};
  CHECK_THROWS_AS(decompress(cb), FormatError);
}

TEST_CASE("class index is the largest class not above the capacity") {
  CHECK(class_index(-1) == -1);
  CHECK(classify(-5) == std::nullopt);
  for (int cap = 0; cap <= 80; ++cap) {
    CHECK(classify(cap) == oracle::largest_class(cap));
    CHECK(kCompressionClasses[static_cast<std::size_t>(class_index(cap))] <= cap);
  }
  CHECK(classify(36) == 36);
  CHECK(classify(43) == 37);
  CHECK(classify(63) == 58);
  CHECK(class_index_of_size(64) == kNumClasses - 1);
}

TEST_CASE("hex helpers") {
  const std::vector<std::uint8_t> bytes = {0x00, 0xab, 0x7f};
  CHECK(to_hex(bytes) == "00ab7f");
  CHECK(from_hex("0x00AB7f") == bytes);
  CHECK_THROWS_AS(from_hex("abc"), FormatError);
  CHECK_THROWS_AS(from_hex("zz"), FormatError);
}
