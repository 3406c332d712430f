#pragma once

// One failure per step: find the single unit with the shortest remaining
// life, wear everything for that long, kill it, then rebuild every derived
// quantity (capacities, classes, set keys, rates) from the remaining-writes
// array alone.

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "nvlife/forecast.hpp"

namespace oracle {

inline constexpr std::array<int, 12> kClasses = {0, 8, 16, 21, 23, 30, 36, 37, 44, 51, 58, 64};

struct ToyShape {
  std::size_t sets, ways, frame_bytes, data_bytes, meta;
  bool byte_disabling, wear_leveling;
  std::size_t repair;  // > 0 means bit units
};

struct NaiveResult {
  double elapsed = 0;
  std::size_t failures = 0;
  std::size_t steps = 0;
  bool exhausted = false;
  bool hit_unseen = false;
  bool below_capacity = false;
};

class NaivePredictor {
 public:
  NaivePredictor(const ToyShape& s, std::vector<double> rw, const nvlife::WrAvgTable& table,
                 const nvlife::PredictOptions& opts)
      : s_(s), rw_(std::move(rw)), table_(table), opts_(opts), rate_(rw_.size(), 0.0) {
    upb_ = s.repair > 0 ? 8 : 1;
    upf_ = s.frame_bytes * upb_;
    last_key_.resize(s.sets);
    fallback_.resize(s.sets);
    for (std::size_t set = 0; set < s.sets; ++set) {
      last_key_[set] = key(set);
      fallback_[set] = last_key_[set];
    }
    rerate();
  }

  const std::vector<double>& rw() const { return rw_; }

  NaiveResult run(double& clock) {
    NaiveResult res;
    while (res.failures < opts_.extension) {
      if (capacity() < opts_.stop_capacity) {
        res.below_capacity = true;
        break;
      }
      std::size_t victim = rw_.size();
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < rw_.size(); ++i) {
        if (!(rw_[i] > 0.0) || !(rate_[i] > 0.0)) continue;
        const double life = rw_[i] / rate_[i];
        if (life < best) {
          best = life;
          victim = i;
        }
      }
      if (victim == rw_.size()) {
        res.exhausted = true;
        break;
      }
      std::vector<int> cap_before(frames());
      for (std::size_t f = 0; f < frames(); ++f) cap_before[f] = cap(f);
      for (std::size_t i = 0; i < rw_.size(); ++i) {
        if (!(rw_[i] > 0.0) || !(rate_[i] > 0.0)) continue;
        if (i == victim) {
          rw_[i] = 0.0;
          continue;
        }
        const double left = rw_[i] - best * rate_[i];
        rw_[i] = left > 0.0 ? left : 0.0;
      }
      clock += best;
      res.elapsed += best;
      ++res.steps;

      if (s_.byte_disabling) {
        ++res.failures;
      } else {
        for (std::size_t f = 0; f < frames(); ++f)
          if (cap_before[f] >= 0 && cap(f) < 0) ++res.failures;
      }

      bool unseen = false;
      for (std::size_t set = 0; set < s_.sets; ++set) {
        const nvlife::HealthKey now = key(set);
        if (now == last_key_[set]) continue;
        last_key_[set] = now;
        if (table_.has_health(now))
          fallback_[set] = now;
        else if (!opts_.constant_rate)
          unseen = true;
      }
      rerate();
      if (unseen && opts_.unseen == nvlife::UnseenState::kEndEpoch) {
        res.hit_unseen = true;
        break;
      }
    }
    if (capacity() < opts_.stop_capacity) res.below_capacity = true;
    return res;
  }

 private:
  std::size_t frames() const { return s_.sets * s_.ways; }

  bool byte_live(std::size_t f, std::size_t b) const {
    for (std::size_t u = 0; u < upb_; ++u)
      if (!(rw_[f * upf_ + b * upb_ + u] > 0.0)) return false;
    return true;
  }

  int cap(std::size_t f) const {
    std::size_t live = 0;
    std::size_t dead_units = 0;
    for (std::size_t b = 0; b < s_.frame_bytes; ++b) live += byte_live(f, b) ? 1 : 0;
    for (std::size_t u = 0; u < upf_; ++u) dead_units += rw_[f * upf_ + u] > 0.0 ? 0 : 1;
    if (!s_.byte_disabling) {
      const bool ok = s_.repair > 0 ? dead_units <= s_.repair : live == s_.frame_bytes;
      return ok ? static_cast<int>(s_.data_bytes) : -1;
    }
    int c = static_cast<int>(live) - static_cast<int>(s_.meta);
    return c < static_cast<int>(s_.data_bytes) ? c : static_cast<int>(s_.data_bytes);
  }

  int cls(std::size_t f) const {
    const int c = cap(f);
    if (c < 0) return -1;
    int idx = 0;
    for (int i = 0; i < 12; ++i)
      if (kClasses[static_cast<std::size_t>(i)] <= c) idx = i;
    return idx;
  }

  nvlife::HealthKey key(std::size_t set) const {
    nvlife::HealthKey k{};
    for (std::size_t w = 0; w < s_.ways; ++w) {
      const int c = cls(set * s_.ways + w);
      if (c >= 0) ++k[static_cast<std::size_t>(c)];
    }
    return k;
  }

  double capacity() const {
    double sum = 0;
    for (std::size_t f = 0; f < frames(); ++f) {
      const int c = cap(f);
      sum += c > 0 ? c : 0;
    }
    return sum / (static_cast<double>(s_.data_bytes) * static_cast<double>(frames()));
  }

  bool find(std::size_t set, int cc, int rank, double& out) const {
    const nvlife::HealthKey& k = table_.has_health(last_key_[set]) ? last_key_[set] : fallback_[set];
    const auto it = table_.cells().find({k, cc, rank});
    if (it == table_.cells().end()) return false;
    out = it->second.mean();
    return true;
  }

  void rerate() {
    for (std::size_t f = 0; f < frames(); ++f) {
      const std::size_t set = f / s_.ways;
      const int cc = cls(f);
      double* r = rate_.data() + f * upf_;
      if (cc < 0) {
        for (std::size_t u = 0; u < upf_; ++u) r[u] = 0.0;
        continue;
      }
      if (opts_.constant_rate) {
        for (std::size_t u = 0; u < upf_; ++u) r[u] = rw_[f * upf_ + u] > 0.0 ? *opts_.constant_rate : 0.0;
        continue;
      }
      if (!s_.byte_disabling) {
        double v;
        if (find(set, cc, -1, v))
          for (std::size_t u = 0; u < upf_; ++u) r[u] = v;
        continue;
      }
      int rank = 0;
      for (std::size_t b = 0; b < s_.frame_bytes; ++b) {
        if (!byte_live(f, b)) {
          r[b] = 0.0;
          continue;
        }
        double v;
        if (find(set, cc, s_.wear_leveling ? -1 : rank, v)) r[b] = v;
        ++rank;
      }
    }
  }

  ToyShape s_;
  std::vector<double> rw_;
  const nvlife::WrAvgTable& table_;
  const nvlife::PredictOptions& opts_;
  std::vector<double> rate_;
  std::size_t upb_ = 1;
  std::size_t upf_ = 1;
  std::vector<nvlife::HealthKey> last_key_;
  std::vector<nvlife::HealthKey> fallback_;
};

}  // namespace oracle
