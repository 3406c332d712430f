#pragma once

// Random small caches for checking predict_epoch against the naive oracle.

#include <algorithm>
#include <random>
#include <string>

#include "nvlife/forecast.hpp"
#include "oracles/predict_oracle.hpp"

namespace support {

struct ToyCase {
  nvlife::CacheGeometry geometry;
  nvlife::RWMap rw;
  nvlife::WrAvgTable table;
  nvlife::PredictOptions opts;
  std::string label;
};

// Frames of at most frame_bytes bytes; data bytes fill what metadata and
// spares leave, up to a full line.
inline ToyCase random_toy(std::mt19937_64& rng, std::size_t sets, std::size_t ways, std::size_t frame_bytes) {
  using namespace nvlife;
  static const char* kVariants[] = {"L2C2", "L2C2-NWL", "L2C2+1", "FD", "FD+2", "L2C2+1-NWL"};
  ToyCase c;
  CacheGeometry& g = c.geometry;
  g.apply_variant(kVariants[rng() % std::size(kVariants)]);
  g.sets = sets;
  g.ways = ways;
  g.metadata_bytes = g.spare_bytes > 0 ? 1 : 1 + rng() % 2;
  g.data_bytes = std::min<std::size_t>(kDataBytes, frame_bytes - g.metadata_bytes - g.spare_bytes);

  const Granularity gran = granularity_for(g);
  c.rw = RWMap(sets, ways, g.frame_bytes(), gran);
  std::uniform_real_distribution<double> budget(50.0, 150.0);
  const bool sparse_deaths = rng() % 2;
  for (double& v : c.rw.values()) v = (sparse_deaths && rng() % 12 == 0) ? 0.0 : budget(rng);

  // Rates come from a snapshot that may differ from the starting one, so
  // some keys are missing and the fallback paths run.
  RWMap seen = c.rw;
  if (rng() % 2)
    for (double& v : seen.values())
      if (rng() % 10 == 0) v = 0.0;
  const HealthSnapshot h = HealthSnapshot::from_rw(g, seen);
  WRMap wr(sets, ways, g.frame_bytes());
  std::uniform_real_distribution<double> rate(0.5, 4.0);
  for (double& v : wr.values()) v = rng() % 8 == 0 ? 0.0 : rate(rng);
  c.table = build_wr_avg(wr, h);

  const std::size_t units = g.byte_disabling() ? g.frames() * g.frame_bytes() : g.frames();
  c.opts.extension = 1 + rng() % units;
  c.opts.unseen = rng() % 2 ? UnseenState::kReuse : UnseenState::kEndEpoch;
  c.opts.stop_capacity = rng() % 3 == 0 ? std::uniform_real_distribution<double>(0.2, 0.9)(rng) : -1.0;
  if (rng() % 6 == 0) c.opts.constant_rate = rate(rng);
  c.label = g.variant_name() + " meta=" + std::to_string(g.metadata_bytes) +
            " ext=" + std::to_string(c.opts.extension);
  return c;
}

inline oracle::ToyShape shape_of(const nvlife::CacheGeometry& g) {
  return {g.sets, g.ways, g.frame_bytes(), g.data_bytes, g.metadata_bytes, g.byte_disabling(), g.wear_leveling,
          g.byte_disabling() ? 0 : g.repair_entries};
}

struct ToyOutcome {
  bool same = false;
  std::string detail;
};

// Runs both predictors from the same state and compares everything exactly.
inline ToyOutcome compare_toy(const ToyCase& c) {
  nvlife::RWMap rw = c.rw;
  nvlife::HealthSnapshot h = nvlife::HealthSnapshot::from_rw(c.geometry, rw);
  double clock = 0;
  const nvlife::PredictResult got = nvlife::predict_epoch(rw, h, c.table, c.opts, clock);

  oracle::NaivePredictor naive(shape_of(c.geometry), c.rw.values(), c.table, c.opts);
  double naive_clock = 0;
  const oracle::NaiveResult want = naive.run(naive_clock);

  ToyOutcome out;
  auto diff = [&](const std::string& what) {
    out.detail = c.label + ": " + what;
    return out;
  };
  if (got.steps != want.steps)
    return diff("steps " + std::to_string(got.steps) + " vs " + std::to_string(want.steps));
  if (got.failures != want.failures)
    return diff("failures " + std::to_string(got.failures) + " vs " + std::to_string(want.failures));
  if (got.elapsed != want.elapsed || clock != naive_clock) return diff("elapsed time");
  if (got.exhausted != want.exhausted || got.hit_unseen != want.hit_unseen ||
      got.below_capacity != want.below_capacity)
    return diff("stop reason");
  if (rw.values() != naive.rw()) return diff("remaining writes");
  if (!(h == nvlife::HealthSnapshot::from_rw(c.geometry, rw))) return diff("health snapshot");
  out.same = true;
  return out;
}

}  // namespace support
