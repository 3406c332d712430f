#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "nvlife/endurance.hpp"
#include "nvlife/error.hpp"

using namespace nvlife;

namespace {

double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

CacheGeometry small(std::size_t sets = 16, std::size_t ways = 4) {
  CacheGeometry g;
  g.sets = sets;
  g.ways = ways;
  return g;
}

}  // namespace

TEST_CASE("sampling is deterministic in the seed") {
  EnduranceModel m;
  m.seed = 42;
  const RWMap a = init_rw_map(small(), m);
  const RWMap b = init_rw_map(small(), m);
  CHECK(a == b);
  m.seed = 43;
  CHECK_FALSE(a == init_rw_map(small(), m));
}

TEST_CASE("byte budgets follow the minimum of eight normal bitcells") {
  EnduranceModel m;
  m.mu = 1000;
  m.cv = 0.25;
  m.seed = 5;
  const RWMap rw = init_rw_map(small(128, 8), m);
  const auto& v = rw.values();
  REQUIRE(v.size() == 128 * 8 * 66);
  for (double x : {800.0, 900.0, 1000.0}) {
    double below = 0;
    for (double r : v) below += r < x ? 1 : 0;
    const double expect = 1.0 - std::pow(1.0 - phi((x - m.mu) / m.sigma()), 8);
    const double n = static_cast<double>(v.size());
    CHECK(std::abs(below / n - expect) < 4.0 * std::sqrt(expect * (1 - expect) / n) + 1e-12);
  }
}

TEST_CASE("bit granularity keeps every bitcell and clamps at zero") {
  EnduranceModel m;
  m.mu = 10;
  m.cv = 0.9;
  m.granularity = Granularity::kBit;
  const RWMap rw = init_rw_map(small(4, 2), m);
  CHECK(rw.units_per_frame() == 66 * 8);
  CHECK(rw.values().size() == 4 * 2 * 66 * 8);
  std::size_t zeros = 0;
  for (double r : rw.values()) {
    CHECK(r >= 0.0);
    zeros += r == 0.0 ? 1 : 0;
  }
  CHECK(zeros > 0);
}

TEST_CASE("granularity follows the organization") {
  CacheGeometry g;
  g.apply_variant("FD+6");
  CHECK(granularity_for(g) == Granularity::kBit);
  g.apply_variant("FD");
  CHECK(granularity_for(g) == Granularity::kByte);
  g.apply_variant("L2C2+6");
  CHECK(granularity_for(g) == Granularity::kByte);
}

TEST_CASE("apply_wear subtracts and kills at the predicted lifetime") {
  std::vector<double> rw = {10, 20, 30, 0, 5};
  const std::vector<double> rate = {1, 2, 1, 1, 0};
  std::vector<std::size_t> died;
  CHECK(apply_wear(rw, rate, 10.0, &died) == 2);
  CHECK(rw == std::vector<double>{0, 0, 20, 0, 5});
  CHECK(died == std::vector<std::size_t>{0, 1});
  CHECK(apply_wear(rw, rate, 0.0) == 0);
  CHECK(rw == std::vector<double>{0, 0, 20, 0, 5});
  std::vector<double> short_rate = {1};
  CHECK_THROWS_AS(apply_wear(rw, short_rate, 1.0), std::invalid_argument);
}

TEST_CASE("wear is monotone and never negative") {
  EnduranceModel m;
  m.mu = 100;
  const RWMap start = init_rw_map(small(4, 4), m);
  RWMap rw = start;
  WRMap wr(4, 4, 66);
  for (std::size_t i = 0; i < wr.values().size(); ++i) wr.values()[i] = static_cast<double>(i % 7);
  for (int step = 0; step < 10; ++step) {
    const RWMap before = rw;
    apply_wear(rw, wr, 3.0);
    for (std::size_t i = 0; i < rw.values().size(); ++i) {
      CHECK(rw.values()[i] >= 0.0);
      CHECK(rw.values()[i] <= before.values()[i]);
    }
  }
}

TEST_CASE("bit maps take their byte's rate") {
  RWMap rw(1, 1, 2, Granularity::kBit, 100.0);
  WRMap wr(1, 1, 2);
  wr.values() = {1.0, 4.0};
  apply_wear(rw, wr, 10.0);
  for (std::size_t u = 0; u < 8; ++u) CHECK(rw.values()[u] == 90.0);
  for (std::size_t u = 8; u < 16; ++u) CHECK(rw.values()[u] == 60.0);
}

TEST_CASE("map dumps round trip bit-exactly") {
  RWMap rw(2, 3, 5, Granularity::kBit);
  for (std::size_t i = 0; i < rw.values().size(); ++i) rw.values()[i] = 1.0 / (1.0 + static_cast<double>(i));
  rw.values()[7] = std::numeric_limits<double>::denorm_min();
  std::stringstream ss;
  rw.save(ss);
  CHECK(RWMap::load(ss) == rw);

  std::stringstream wrong;
  WRMap(1, 1, 1).save(wrong);
  CHECK_THROWS_AS(RWMap::load(wrong), FormatError);
  std::stringstream truncated(ss.str().substr(0, 30));
  CHECK_THROWS_AS(RWMap::load(truncated), FormatError);
}

TEST_CASE("model validation") {
  EnduranceModel m;
  m.cv = 0;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m.cv = 0.2;
  m.mu = -1;
  CHECK_THROWS_AS(m.validate(), ConfigError);
}
