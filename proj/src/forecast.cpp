#include "nvlife/forecast.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "nvlife/error.hpp"

namespace nvlife {

namespace {

constexpr std::string_view kCheckpointMagic = "NVCK";
constexpr std::uint32_t kCheckpointVersion = 1;

constexpr int kFullClass = kNumClasses - 1;

class Predictor {
 public:
  Predictor(RWMap& rw, HealthSnapshot& h, const WrAvgTable& table, const PredictOptions& opts)
      : g_(h.geometry()),
        rw_(rw),
        h_(h),
        table_(table),
        opts_(opts),
        upf_(rw.units_per_frame()),
        upb_(rw.units_per_byte()),
        rate_(rw.values().size(), 0.0),
        key_(g_.sets),
        fallback_(g_.sets) {
    for (std::size_t s = 0; s < g_.sets; ++s) {
      key_[s] = health_key(h_, s);
      fallback_[s] = key_[s];
      rate_set(s);
    }
    for (std::size_t f = 0; f < h_.frames(); ++f) cap_sum_ += std::max(0, h_.capacity(f));
  }

  PredictResult run(double& clock) {
    PredictResult res;
    std::vector<std::size_t> died;
    std::vector<std::size_t> touched;
    while (res.failures < opts_.extension) {
      if (capacity() < opts_.stop_capacity) {
        res.below_capacity = true;
        break;
      }
      double step = std::numeric_limits<double>::infinity();
      const auto& rw = rw_.values();
      for (std::size_t i = 0; i < rw.size(); ++i)
        if (rate_[i] > 0.0 && rw[i] > 0.0) step = std::min(step, rw[i] / rate_[i]);
      if (!std::isfinite(step)) {
        res.exhausted = true;
        break;
      }
      died.clear();
      apply_wear(std::span<double>(rw_.values()), rate_, step, &died);
      clock += step;
      res.elapsed += step;
      ++res.steps;

      touched.clear();
      for (std::size_t unit : died) {
        const std::size_t f = unit / upf_;
        const std::size_t byte = (unit % upf_) / upb_;
        const int cap_before = h_.capacity(f);
        if (upb_ == 8)
          h_.kill_bit(f, byte);
        else
          h_.kill_byte(f, byte);
        const int cap_after = h_.capacity(f);
        cap_sum_ += std::max(0, cap_after) - std::max(0, cap_before);
        if (g_.byte_disabling())
          ++res.failures;
        else if (cap_before >= 0 && cap_after < 0)
          ++res.failures;
        touched.push_back(f / g_.ways);
      }
      std::sort(touched.begin(), touched.end());
      touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

      bool unseen = false;
      for (std::size_t s : touched) {
        const HealthKey now = health_key(h_, s);
        if (now != key_[s]) {
          key_[s] = now;
          if (table_.has_health(now))
            fallback_[s] = now;
          else if (!opts_.constant_rate)
            unseen = true;
        }
        rate_set(s);
      }
      if (unseen && opts_.unseen == UnseenState::kEndEpoch) {
        res.hit_unseen = true;
        break;
      }
    }
    if (capacity() < opts_.stop_capacity) res.below_capacity = true;
    return res;
  }

 private:
  double capacity() const {
    return cap_sum_ / (static_cast<double>(g_.data_bytes) * static_cast<double>(h_.frames()));
  }

  // Rate from the table under the set's current key, or under the last key
  // the table knew for this set; nullopt leaves the unit's rate unchanged.
  std::optional<double> lookup(std::size_t set, int cc, int rank) const {
    const HealthKey& k = table_.has_health(key_[set]) ? key_[set] : fallback_[set];
    return table_.find({k, cc, rank});
  }

  void rate_set(std::size_t s) {
    for (std::size_t w = 0; w < g_.ways; ++w) {
      const std::size_t f = s * g_.ways + w;
      double* r = rate_.data() + f * upf_;
      const double* left = rw_.values().data() + f * upf_;
      const int cc = h_.class_index(f);
      if (cc < 0) {
        std::fill(r, r + upf_, 0.0);
        continue;
      }
      if (opts_.constant_rate) {
        for (std::size_t u = 0; u < upf_; ++u) r[u] = left[u] > 0.0 ? *opts_.constant_rate : 0.0;
        continue;
      }
      if (!g_.byte_disabling()) {
        const auto v = lookup(s, cc, -1);
        if (v) std::fill(r, r + upf_, *v);
        continue;
      }
      const FaultBitmap& fm = h_.fm(f);
      if (g_.wear_leveling) {
        const auto v = lookup(s, cc, -1);
        for (std::size_t b = 0; b < upf_; ++b) {
          if (!fm.live(b))
            r[b] = 0.0;
          else if (v)
            r[b] = *v;
        }
        continue;
      }
      int rank = 0;
      for (std::size_t b = 0; b < upf_; ++b) {
        if (!fm.live(b)) {
          r[b] = 0.0;
          continue;
        }
        if (const auto v = lookup(s, cc, rank++)) r[b] = *v;
      }
    }
  }

  const CacheGeometry& g_;
  RWMap& rw_;
  HealthSnapshot& h_;
  const WrAvgTable& table_;
  const PredictOptions& opts_;
  std::size_t upf_;
  std::size_t upb_;
  std::vector<double> rate_;
  std::vector<HealthKey> key_;
  std::vector<HealthKey> fallback_;
  double cap_sum_ = 0;
};

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

nlohmann::json sample_to_json(const ForecastSample& s) {
  return nlohmann::json::array({s.t, s.capacity, s.ipc_norm, s.ipc, s.classes});
}

ForecastSample sample_from_json(const nlohmann::json& j) {
  ForecastSample s;
  s.t = j.at(0).get<double>();
  s.capacity = j.at(1).get<double>();
  s.ipc_norm = j.at(2).get<double>();
  s.ipc = j.at(3).get<double>();
  s.classes = j.at(4).get<ClassHistogram>();
  return s;
}

struct LoopState {
  RWMap rw;
  double t = 0;
  std::size_t epoch = 0;
  std::vector<ForecastSample> samples;
};

void save_checkpoint(const std::filesystem::path& path, const ForecastConfig& cfg, const LoopState& st,
                     const std::vector<std::pair<std::string, std::string>>& echo) {
  nlohmann::json j;
  j["t"] = st.t;
  j["epoch"] = st.epoch;
  j["variant"] = cfg.geometry.variant_name();
  j["sets"] = cfg.geometry.sets;
  j["ways"] = cfg.geometry.ways;
  j["dead_units"] = std::count(st.rw.values().begin(), st.rw.values().end(), 0.0);
  auto& samples = j["samples"] = nlohmann::json::array();
  for (const auto& s : st.samples) samples.push_back(sample_to_json(s));
  auto& conf = j["config"] = nlohmann::json::object();
  for (const auto& [k, v] : echo) conf[k] = v;
  const std::string text = j.dump();

  const auto tmp = std::filesystem::path(path).concat(".tmp");
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw Error("cannot write checkpoint " + tmp.string());
    os.write(kCheckpointMagic.data(), 4);
    char head[12];
    for (int i = 0; i < 4; ++i) head[i] = static_cast<char>(kCheckpointVersion >> (8 * i));
    const std::uint64_t len = text.size();
    for (int i = 0; i < 8; ++i) head[4 + i] = static_cast<char>(len >> (8 * i));
    os.write(head, 12);
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    st.rw.save(os);
    if (!os) throw Error("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

LoopState load_checkpoint(const std::filesystem::path& path, const ForecastConfig& cfg) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open checkpoint " + path.string());
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::string_view(magic, 4) != kCheckpointMagic) throw FormatError("not a checkpoint file");
  unsigned char head[12] = {};
  is.read(reinterpret_cast<char*>(head), 12);
  if (!is) throw FormatError("truncated checkpoint");
  std::uint32_t version = 0;
  for (int i = 0; i < 4; ++i) version |= static_cast<std::uint32_t>(head[i]) << (8 * i);
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version");
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(head[4 + i]) << (8 * i);
  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  if (!is) throw FormatError("truncated checkpoint state");
  const auto j = nlohmann::json::parse(text);
  if (j.at("variant").get<std::string>() != cfg.geometry.variant_name() ||
      j.at("sets").get<std::size_t>() != cfg.geometry.sets || j.at("ways").get<std::size_t>() != cfg.geometry.ways)
    throw ConfigError("checkpoint was written for a different cache");
  LoopState st;
  st.t = j.at("t").get<double>();
  st.epoch = j.at("epoch").get<std::size_t>();
  for (const auto& s : j.at("samples")) st.samples.push_back(sample_from_json(s));
  st.rw = RWMap::load(is);
  if (st.rw.sets() != cfg.geometry.sets || st.rw.ways() != cfg.geometry.ways ||
      st.rw.frame_bytes() != cfg.geometry.frame_bytes())
    throw FormatError("checkpoint RW map does not match the cache");
  return st;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ls(line);
  while (std::getline(ls, cur, sep)) out.push_back(cur);
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

HealthKey health_key(const HealthSnapshot& h, std::size_t set) {
  HealthKey k{};
  const std::size_t ways = h.geometry().ways;
  for (std::size_t w = 0; w < ways; ++w) {
    const int cc = h.class_index(set * ways + w);
    if (cc >= 0) ++k[static_cast<std::size_t>(cc)];
  }
  return k;
}

void WrAvgTable::add(const Key& k, double rate, double weight) {
  Cell& c = cells_[k];
  c.sum += rate * weight;
  c.weight += weight;
  healths_.insert(k.health);
}

std::optional<double> WrAvgTable::find(const Key& k) const {
  const auto it = cells_.find(k);
  if (it == cells_.end()) return std::nullopt;
  return it->second.mean();
}

WrAvgTable build_wr_avg(const WRMap& wr, const HealthSnapshot& h) {
  const CacheGeometry& g = h.geometry();
  if (wr.sets() != g.sets || wr.ways() != g.ways || wr.frame_bytes() != g.frame_bytes())
    throw std::invalid_argument("WR map does not match the snapshot");
  WrAvgTable table;
  for (std::size_t s = 0; s < g.sets; ++s) {
    const HealthKey key = health_key(h, s);
    for (std::size_t w = 0; w < g.ways; ++w) {
      const std::size_t f = s * g.ways + w;
      const int cc = h.class_index(f);
      if (cc < 0) continue;
      const auto rates = wr.frame(f);
      if (!g.byte_disabling()) {
        for (double r : rates) table.add({key, cc, -1}, r);
        continue;
      }
      const FaultBitmap& fm = h.fm(f);
      if (g.wear_leveling) {
        double sum = 0;
        std::size_t live = 0;
        for (std::size_t b = 0; b < rates.size(); ++b) {
          if (!fm.live(b)) continue;
          sum += rates[b];
          ++live;
        }
        if (live) table.add({key, cc, -1}, sum / static_cast<double>(live), static_cast<double>(live));
        continue;
      }
      int rank = 0;
      for (std::size_t b = 0; b < rates.size(); ++b)
        if (fm.live(b)) table.add({key, cc, rank++}, rates[b]);
    }
  }
  return table;
}

std::string_view to_string(UnseenState u) { return u == UnseenState::kReuse ? "reuse" : "end_epoch"; }
std::string_view to_string(WearMode m) { return m == WearMode::kSimulate ? "simulate" : "analytic"; }

UnseenState parse_unseen_state(std::string_view s) {
  if (s == "reuse") return UnseenState::kReuse;
  if (s == "end_epoch") return UnseenState::kEndEpoch;
  throw ConfigError("unseen_state must be reuse or end_epoch, got '" + std::string(s) + "'");
}

WearMode parse_wear_mode(std::string_view s) {
  if (s == "simulate") return WearMode::kSimulate;
  if (s == "analytic") return WearMode::kAnalytic;
  throw ConfigError("wear_mode must be simulate or analytic, got '" + std::string(s) + "'");
}

PredictResult predict_epoch(RWMap& rw, HealthSnapshot& health, const WrAvgTable& table,
                            const PredictOptions& opts, double& clock) {
  const CacheGeometry& g = health.geometry();
  if (rw.sets() != g.sets || rw.ways() != g.ways || rw.frame_bytes() != g.frame_bytes())
    throw std::invalid_argument("RW map does not match the snapshot");
  Predictor p(rw, health, table, opts);
  return p.run(clock);
}

void ForecastSeries::write_csv(std::ostream& os) const {
  for (const auto& [k, v] : echo) os << "# " << k << " = " << v << '\n';
  os << "t_seconds,capacity_fraction,ipc_norm,ipc,cc_dead";
  for (int c : kCompressionClasses) os << ",cc_" << c;
  os << '\n';
  for (const auto& s : samples) {
    os << fmt_double(s.t) << ',' << fmt_double(s.capacity) << ',' << fmt_double(s.ipc_norm) << ','
       << fmt_double(s.ipc);
    for (auto n : s.classes) os << ',' << n;
    os << '\n';
  }
}

ForecastSeries ForecastSeries::read_csv(std::istream& is) {
  ForecastSeries out;
  std::string line;
  std::vector<std::string> header;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& why) {
    return FormatError("series line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (line[0] == '#') {
      const auto body = line.substr(1);
      const auto eq = body.find('=');
      if (eq != std::string::npos) out.echo.emplace_back(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
      continue;
    }
    auto cols = split(line, ',');
    for (auto& c : cols) c = trim(c);
    if (header.empty()) {
      header = cols;
      if (header.empty() || header[0] != "t_seconds") throw fail("expected a t_seconds header");
      continue;
    }
    if (cols.size() != header.size()) throw fail("column count differs from header");
    ForecastSample s;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      const std::string& name = header[i];
      double v = 0;
      try {
        std::size_t used = 0;
        v = std::stod(cols[i], &used);
        if (used != cols[i].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw fail("bad number '" + cols[i] + "'");
      }
      if (name == "t_seconds") {
        s.t = v;
      } else if (name == "capacity_fraction") {
        s.capacity = v;
      } else if (name == "ipc_norm") {
        s.ipc_norm = v;
      } else if (name == "ipc") {
        s.ipc = v;
      } else if (name == "cc_dead") {
        s.classes[0] = static_cast<std::uint32_t>(v);
      } else if (name.starts_with("cc_")) {
        const int size = std::stoi(name.substr(3));
        const int idx = class_index(size);
        if (idx < 0 || kCompressionClasses[static_cast<std::size_t>(idx)] != size)
          throw fail("unknown class column " + name);
        s.classes[static_cast<std::size_t>(idx) + 1] = static_cast<std::uint32_t>(v);
      }
    }
    if (!out.samples.empty() && !(s.t > out.samples.back().t)) throw fail("t_seconds must increase");
    out.samples.push_back(s);
  }
  if (header.empty()) throw FormatError("series has no header");
  return out;
}

std::optional<double> first_below(const ForecastSeries& s, double threshold, bool performance) {
  if (s.samples.empty()) return std::nullopt;
  auto value = [&](const ForecastSample& x) { return performance ? x.ipc_norm : x.capacity; };
  if (value(s.samples.front()) < threshold) return s.samples.front().t;
  for (std::size_t i = 1; i < s.samples.size(); ++i) {
    const double v1 = value(s.samples[i]);
    if (!(v1 < threshold)) continue;
    const double v0 = value(s.samples[i - 1]);
    const double t0 = s.samples[i - 1].t;
    const double t1 = s.samples[i].t;
    return t0 + (v0 - threshold) / (v0 - v1) * (t1 - t0);
  }
  return std::nullopt;
}

LifetimeIndices compute_indices(const ForecastSeries& s, double clock_hz, std::size_t cores, double horizon) {
  LifetimeIndices out;
  out.t50c = first_below(s, 0.50, false);
  out.t99c = first_below(s, 0.99, false);
  out.t90c = first_below(s, 0.90, false);
  out.t99p = first_below(s, 0.99, true);
  out.t90p = first_below(s, 0.90, true);
  if (s.samples.empty()) return out;

  const double end = std::min(out.t50c.value_or(s.samples.back().t), horizon);
  double area = 0;
  for (std::size_t i = 1; i < s.samples.size(); ++i) {
    const ForecastSample& a = s.samples[i - 1];
    const ForecastSample& b = s.samples[i];
    if (a.t >= end) break;
    double tb = b.t;
    double ipc_b = b.ipc;
    if (tb > end) {
      ipc_b = a.ipc + (b.ipc - a.ipc) * (end - a.t) / (b.t - a.t);
      tb = end;
    }
    area += 0.5 * (a.ipc + ipc_b) * (tb - a.t);
  }
  out.i50c_5y = area * clock_hz * static_cast<double>(cores);
  return out;
}

ForecastSeries project(const ForecastSeries& s, double k) {
  if (!(k > 0)) throw ConfigError("projection factor must be positive");
  ForecastSeries out = s;
  for (auto& x : out.samples) x.t *= k;
  return out;
}

void ForecastConfig::validate() const {
  geometry.validate();
  endurance.validate();
  perf.validate();
  if (num_epochs == 0) throw ConfigError("num_epochs must be positive");
  if (!(target >= 0 && target < 1)) throw ConfigError("target must lie in [0, 1)");
  if (!(analytic_rate > 0)) throw ConfigError("analytic_rate must be positive");
  if (!(warmup_fraction >= 0 && warmup_fraction < 1)) throw ConfigError("warmup_fraction must lie in [0, 1)");
  if (max_epoch_factor == 0) throw ConfigError("max_epoch_factor must be positive");
  if (jobs == 0) throw ConfigError("jobs must be positive");
}

std::size_t ForecastConfig::target_units() const {
  const double nominal = static_cast<double>(geometry.frames()) *
                         (geometry.byte_disabling() ? static_cast<double>(geometry.data_bytes) : 1.0);
  return static_cast<std::size_t>(std::ceil(target * nominal));
}

std::size_t ForecastConfig::extension() const {
  const std::size_t units = target_units();
  return std::max<std::size_t>(1, (units + num_epochs - 1) / num_epochs);
}

EpochStats simulate_mixes(const CacheGeometry& g, const HealthSnapshot& h,
                          const std::vector<std::vector<TraceEvent>>& mixes, const PerfModel& perf,
                          double start_seconds, double warmup_fraction, unsigned jobs) {
  std::vector<EpochStats> results(mixes.size());
  std::vector<std::exception_ptr> errors(mixes.size());
  auto run_one = [&](std::size_t i) {
    try {
      const auto warm = static_cast<std::size_t>(warmup_fraction * static_cast<double>(mixes[i].size()));
      results[i] = simulate_phase(g, h, mixes[i], perf, start_seconds, warm);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers = std::min<std::size_t>(std::max(1u, jobs), mixes.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < mixes.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < mixes.size(); i = next++) run_one(i);
      });
  }
  EpochStats total;
  for (std::size_t i = 0; i < mixes.size(); ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    total.merge(results[i]);
  }
  return total;
}

ForecastSeries run_forecast(const ForecastConfig& cfg, const std::vector<std::vector<TraceEvent>>& mixes,
                            const ForecastHooks& hooks) {
  cfg.validate();
  const CacheGeometry& g = cfg.geometry;
  const bool simulate = cfg.wear_mode == WearMode::kSimulate;
  if (simulate && mixes.empty()) throw ConfigError("simulated wear needs at least one workload mix");

  LoopState st;
  if (hooks.resume) {
    st = load_checkpoint(*hooks.resume, cfg);
  } else {
    EnduranceModel model = cfg.endurance;
    model.granularity = granularity_for(g);
    st.rw = init_rw_map(g, model);
  }

  double pristine = 1.0;
  if (simulate) pristine = simulate_mixes(g, HealthSnapshot(g), mixes, cfg.perf, 0.0, cfg.warmup_fraction, cfg.jobs).ipc();

  const double stop = 1.0 - cfg.target;
  const std::size_t max_epochs = cfg.max_epoch_factor * cfg.num_epochs;
  PredictOptions opts;
  opts.extension = cfg.extension();
  opts.stop_capacity = stop;
  opts.unseen = cfg.unseen;
  if (!simulate) opts.constant_rate = cfg.analytic_rate;

  for (;;) {
    HealthSnapshot h = HealthSnapshot::from_rw(g, st.rw);
    ForecastSample sample;
    sample.t = st.t;
    sample.capacity = h.effective_capacity();
    sample.classes = h.histogram();
    WrAvgTable table;
    if (simulate) {
      const EpochStats stats = simulate_mixes(g, h, mixes, cfg.perf, st.t, cfg.warmup_fraction, cfg.jobs);
      sample.ipc = stats.ipc();
      sample.ipc_norm = pristine > 0 ? sample.ipc / pristine : 0.0;
      if (!(sample.capacity < stop) && cfg.target > 0) table = build_wr_avg(stats.wr_map(g), h);
    } else {
      sample.ipc = 1.0 / cfg.perf.base_cpi;
      sample.ipc_norm = 1.0;
    }
    st.samples.push_back(sample);
    if (hooks.on_sample) hooks.on_sample(st.epoch, sample);
    if (sample.capacity < stop || cfg.target <= 0 || st.epoch >= max_epochs) break;

    const PredictResult res = predict_epoch(st.rw, h, table, opts, st.t);
    ++st.epoch;
    if (hooks.checkpoint) save_checkpoint(*hooks.checkpoint, cfg, st, hooks.echo);
    if (res.steps == 0) break;
  }

  ForecastSeries series;
  series.samples = std::move(st.samples);
  series.echo = hooks.echo;
  return series;
}

}  // namespace nvlife
