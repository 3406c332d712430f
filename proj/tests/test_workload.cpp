#include <doctest.h>

#include <filesystem>
#include <set>
#include <sstream>

#include "nvlife/error.hpp"
#include "nvlife/workload.hpp"
#include "oracles/bdi_oracle.hpp"

using namespace nvlife;

TEST_CASE("group boundaries") {
  CHECK(group_of_size(0) == CompressGroup::kHcr);
  CHECK(group_of_size(37) == CompressGroup::kHcr);
  CHECK(group_of_size(44) == CompressGroup::kLcr);
  CHECK(group_of_size(58) == CompressGroup::kLcr);
  CHECK(group_of_size(64) == CompressGroup::kUnc);
}

TEST_CASE("synthetic payloads land in their group by oracle size") {
  std::set<unsigned> sizes;
  for (std::uint64_t seed = 0; seed < 3000; ++seed) {
    for (auto g : {CompressGroup::kHcr, CompressGroup::kLcr, CompressGroup::kUnc}) {
      const Block b = synth_block(g, seed);
      const unsigned size = oracle::best_size(b.data());
      REQUIRE(group_of_size(size) == g);
      sizes.insert(size);
    }
  }
  // Every distinct encoding size shows up.
  CHECK(sizes.size() == 12);
}

TEST_CASE("generated traces are well formed and deterministic") {
  const SyntheticProfile p;
  const auto a = generate(p, 5000, 9);
  CHECK(a == generate(p, 5000, 9));
  CHECK_FALSE(a == generate(p, 5000, 10));
  CHECK_NOTHROW(validate_trace(a));

  std::size_t requests = 0, writes = 0, inserts = 0, notifies = 0;
  std::set<std::uint64_t> private_cache;
  for (const auto& e : a) {
    switch (e.kind) {
      case EventKind::kRead:
      case EventKind::kWriteUpgrade:
        ++requests;
        writes += e.kind == EventKind::kWriteUpgrade;
        REQUIRE_FALSE(private_cache.contains(e.address));
        private_cache.insert(e.address);
        break;
      case EventKind::kInsert:
      case EventKind::kCleanEvictNotify:
        inserts += e.kind == EventKind::kInsert;
        notifies += e.kind == EventKind::kCleanEvictNotify;
        REQUIRE(private_cache.erase(e.address) == 1);
        break;
    }
  }
  CHECK(requests == 5000);
  CHECK(private_cache.size() == p.l2_blocks);
  CHECK(inserts + notifies == 5000 - p.l2_blocks);
  CHECK(std::abs(static_cast<double>(writes) / 5000 - p.write_fraction) < 0.03);
  CHECK(notifies > 0);
}

TEST_CASE("insert compressibility follows the profile") {
  SyntheticProfile p;
  p.unc = 0.5;
  p.lcr = 0.5;
  p.hcr = 0.0;
  p.notify_fraction = 0;
  std::size_t counts[3] = {};
  for (const auto& e : generate(p, 20000, 1))
    if (e.payload) ++counts[static_cast<int>(group_of_size(oracle::best_size(e.payload->data())))];
  CHECK(counts[static_cast<int>(CompressGroup::kHcr)] == 0);
  const double unc = static_cast<double>(counts[2]) / static_cast<double>(counts[1] + counts[2]);
  CHECK(std::abs(unc - 0.5) < 0.02);
}

TEST_CASE("profile validation") {
  SyntheticProfile p;
  p.unc = 0.5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.footprint_blocks = p.l2_blocks;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.reuse = 1.5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("binary and text traces round trip") {
  const auto events = generate(SyntheticProfile{}, 300, 4);
  std::stringstream bin;
  write_trace_binary(bin, events);
  CHECK(read_trace_binary(bin) == events);
  std::stringstream txt;
  write_trace_text(txt, events);
  CHECK(read_trace_text(txt) == events);

  const auto dir = std::filesystem::temp_directory_path() / "nvlife_trace_test";
  std::filesystem::create_directories(dir);
  write_trace(dir / "t.nvtrace", events);
  write_trace(dir / "t.txt", events);
  CHECK(read_trace(dir / "t.nvtrace") == events);
  CHECK(read_trace(dir / "t.txt") == events);
  std::filesystem::remove_all(dir);
}

TEST_CASE("text traces: comments, defaults and errors") {
  std::istringstream ok(
      "# fixture\n"
      "read 0x10 @5\n"
      "write_upgrade 1f   # carries the previous timestamp when unstamped\n"
      "clean_evict_notify 0x10 @9\n");
  const auto ev = read_trace_text(ok);
  REQUIRE(ev.size() == 3);
  CHECK(ev[1].address == 0x1f);
  CHECK(ev[1].timestamp == 5);
  CHECK(ev[2].kind == EventKind::kCleanEvictNotify);

  std::istringstream bad_kind("evict 0x1\n");
  CHECK_THROWS_AS(read_trace_text(bad_kind), TraceError);
  std::istringstream no_payload("insert 0x1 @1\n");
  CHECK_THROWS_AS(read_trace_text(no_payload), TraceError);
  std::istringstream backwards("read 0x1 @5\nread 0x2 @4\n");
  CHECK_THROWS_AS(read_trace_text(backwards), TraceError);
  std::istringstream short_payload("insert 0x1 abcd @1\n");
  CHECK_THROWS_AS(read_trace_text(short_payload), TraceError);

  std::stringstream truncated;
  write_trace_binary(truncated, generate(SyntheticProfile{}, 100, 1));
  std::istringstream cut(truncated.str().substr(0, 100));
  CHECK_THROWS_AS(read_trace_binary(cut), TraceError);
}
