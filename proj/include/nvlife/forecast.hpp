#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nvlife/cachesim.hpp"
#include "nvlife/endurance.hpp"
#include "nvlife/geometry.hpp"
#include "nvlife/workload.hpp"

namespace nvlife {

// Set health: frames per compression class. Frame-disabling caches only
// populate the 64 entry, which then equals the live-frame count.
using HealthKey = std::array<std::uint16_t, kNumClasses>;

HealthKey health_key(const HealthSnapshot& h, std::size_t set);

// Seconds until a unit fails at the given rate; +inf for a zero rate.
inline double plt(double remaining, double rate) {
  if (remaining <= 0.0) return 0.0;
  if (rate <= 0.0) return std::numeric_limits<double>::infinity();
  return remaining / rate;
}

// Mean per-byte write rate by set health, frame class and, without wear
// leveling, the byte's rank among the frame's live bytes (-1 otherwise).
class WrAvgTable {
 public:
  struct Key {
    HealthKey health{};
    int cc = kNumClasses - 1;
    int rank = -1;
    auto operator<=>(const Key&) const = default;
  };
  struct Cell {
    double sum = 0;
    double weight = 0;
    double mean() const { return weight > 0 ? sum / weight : 0.0; }
  };

  void add(const Key& k, double rate, double weight = 1.0);
  std::optional<double> find(const Key& k) const;
  bool has_health(const HealthKey& h) const { return healths_.contains(h); }
  std::size_t size() const { return cells_.size(); }
  const std::map<Key, Cell>& cells() const { return cells_; }

 private:
  std::map<Key, Cell> cells_;
  std::set<HealthKey> healths_;
};

// Groups the live bytes of live frames by health key. With wear leveling,
// rates are first averaged within each frame.
WrAvgTable build_wr_avg(const WRMap& wr, const HealthSnapshot& h);

enum class UnseenState { kReuse, kEndEpoch };
enum class WearMode { kSimulate, kAnalytic };

std::string_view to_string(UnseenState u);
std::string_view to_string(WearMode m);
UnseenState parse_unseen_state(std::string_view s);
WearMode parse_wear_mode(std::string_view s);

struct PredictOptions {
  // Failures to predict: dead bytes for byte disabling, dead frames otherwise.
  std::size_t extension = 1;
  // Stop as soon as effective capacity falls below this fraction.
  double stop_capacity = -1.0;
  UnseenState unseen = UnseenState::kReuse;
  // Analytic wear: every live unit of a live frame wears at this rate and
  // the table is ignored.
  std::optional<double> constant_rate;
};

struct PredictResult {
  double elapsed = 0;       // seconds advanced
  std::size_t failures = 0;  // counted as in PredictOptions::extension
  std::size_t steps = 0;
  bool exhausted = false;        // no unit wears any more
  bool hit_unseen = false;       // ended on a health key absent from the table
  bool below_capacity = false;   // reached stop_capacity
};

// Advances `rw` and `health` until `extension` failures have occurred.
// Each step wears every unit for the minimum predicted lifetime, so all
// tied units fail together, then re-rates the sets whose health changed.
// `clock` is advanced step by step.
PredictResult predict_epoch(RWMap& rw, HealthSnapshot& health, const WrAvgTable& table,
                            const PredictOptions& opts, double& clock);

struct ForecastSample {
  double t = 0;
  double capacity = 1;
  double ipc_norm = 1;
  double ipc = 0;
  ClassHistogram classes{};

  friend bool operator==(const ForecastSample&, const ForecastSample&) = default;
};

struct ForecastSeries {
  std::vector<ForecastSample> samples;
  // key = value lines echoed as '#' comments.
  std::vector<std::pair<std::string, std::string>> echo;

  void write_csv(std::ostream& os) const;
  static ForecastSeries read_csv(std::istream& is);
};

struct LifetimeIndices {
  std::optional<double> t50c, t99c, t90c, t99p, t90p;
  double i50c_5y = 0;  // instructions
};

inline constexpr double kFiveYears = 5 * 365.25 * 86400.0;

// First time `value` drops below `threshold`, linearly interpolated between
// samples; 0 if the series starts below it.
std::optional<double> first_below(const ForecastSeries& s, double threshold, bool performance);

LifetimeIndices compute_indices(const ForecastSeries& s, double clock_hz, std::size_t cores,
                                double horizon = kFiveYears);

// Time scaling for bitcells k times more durable: (t, v) -> (k t, v).
ForecastSeries project(const ForecastSeries& s, double k);

struct ForecastConfig {
  CacheGeometry geometry;
  EnduranceModel endurance;
  PerfModel perf;
  std::size_t num_epochs = 16;
  double target = 0.5;  // degradation fraction to forecast
  UnseenState unseen = UnseenState::kReuse;
  WearMode wear_mode = WearMode::kSimulate;
  double analytic_rate = 1.0e3;  // writes per second per unit
  double warmup_fraction = 0.1;
  std::size_t max_epoch_factor = 4;
  unsigned jobs = 1;

  void validate() const;
  // Failure units for the whole target and per epoch.
  std::size_t target_units() const;
  std::size_t extension() const;
};

struct ForecastHooks {
  // Written after every prediction phase when set.
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> resume;
  std::vector<std::pair<std::string, std::string>> echo;
  std::function<void(std::size_t epoch, const ForecastSample&)> on_sample;
};

// Simulates every mix on one snapshot, mixes in parallel up to `jobs`;
// the reduction runs in mix order.
EpochStats simulate_mixes(const CacheGeometry& g, const HealthSnapshot& h,
                          const std::vector<std::vector<TraceEvent>>& mixes, const PerfModel& perf,
                          double start_seconds, double warmup_fraction, unsigned jobs);

ForecastSeries run_forecast(const ForecastConfig& cfg, const std::vector<std::vector<TraceEvent>>& mixes,
                            const ForecastHooks& hooks = {});

}  // namespace nvlife
