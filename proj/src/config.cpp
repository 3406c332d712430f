#include "nvlife/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "nvlife/error.hpp"

namespace nvlife {

namespace {

using Getter = std::function<std::string(const ExperimentConfig&)>;
using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

struct Field {
  std::string key;  // section.name
  Getter get;
  Setter set;
};

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

Field dbl(std::string key, double& (*ref)(ExperimentConfig&)) {
  return {key,
          [ref](const ExperimentConfig& c) { return format_double(ref(const_cast<ExperimentConfig&>(c))); },
          [ref, key](ExperimentConfig& c, const std::string& v) { ref(c) = to_double(key, v); }};
}

template <typename Int>
Field integer(std::string key, Int& (*ref)(ExperimentConfig&)) {
  return {key,
          [ref](const ExperimentConfig& c) { return std::to_string(ref(const_cast<ExperimentConfig&>(c))); },
          [ref, key](ExperimentConfig& c, const std::string& v) { ref(c) = static_cast<Int>(to_u64(key, v)); }};
}

Field path(std::string key, std::filesystem::path& (*ref)(ExperimentConfig&)) {
  return {key, [ref](const ExperimentConfig& c) { return ref(const_cast<ExperimentConfig&>(c)).string(); },
          [ref](ExperimentConfig& c, const std::string& v) { ref(c) = v; }};
}

const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> table = {
      {"cache.variant", [](const C& c) { return c.forecast.geometry.variant_name(); },
       [](C& c, const std::string& v) { c.forecast.geometry.apply_variant(v); }},
      integer<std::size_t>("cache.sets", [](C& c) -> std::size_t& { return c.forecast.geometry.sets; }),
      integer<std::size_t>("cache.ways", [](C& c) -> std::size_t& { return c.forecast.geometry.ways; }),
      integer<std::size_t>("cache.data_bytes", [](C& c) -> std::size_t& { return c.forecast.geometry.data_bytes; }),
      integer<std::size_t>("cache.metadata_bytes",
                           [](C& c) -> std::size_t& { return c.forecast.geometry.metadata_bytes; }),
      dbl("cache.gc_period_s", [](C& c) -> double& { return c.forecast.geometry.gc_period_s; }),
      integer<std::size_t>("cache.tag_bits", [](C& c) -> std::size_t& { return c.forecast.geometry.tag_bits; }),

      dbl("endurance.mu", [](C& c) -> double& { return c.forecast.endurance.mu; }),
      dbl("endurance.cv", [](C& c) -> double& { return c.forecast.endurance.cv; }),
      integer<std::uint64_t>("endurance.seed", [](C& c) -> std::uint64_t& { return c.forecast.endurance.seed; }),

      integer<std::size_t>("workload.mixes", [](C& c) -> std::size_t& { return c.workload.mixes; }),
      integer<std::size_t>("workload.requests", [](C& c) -> std::size_t& { return c.workload.requests; }),
      integer<std::uint64_t>("workload.seed", [](C& c) -> std::uint64_t& { return c.workload.seed; }),
      dbl("workload.unc", [](C& c) -> double& { return c.workload.profile.unc; }),
      dbl("workload.lcr", [](C& c) -> double& { return c.workload.profile.lcr; }),
      dbl("workload.hcr", [](C& c) -> double& { return c.workload.profile.hcr; }),
      integer<std::size_t>("workload.footprint_blocks",
                           [](C& c) -> std::size_t& { return c.workload.profile.footprint_blocks; }),
      dbl("workload.reuse", [](C& c) -> double& { return c.workload.profile.reuse; }),
      integer<std::size_t>("workload.l2_blocks", [](C& c) -> std::size_t& { return c.workload.profile.l2_blocks; }),
      dbl("workload.write_fraction", [](C& c) -> double& { return c.workload.profile.write_fraction; }),
      dbl("workload.notify_fraction", [](C& c) -> double& { return c.workload.profile.notify_fraction; }),
      integer<std::uint64_t>("workload.cycles_per_event",
                             [](C& c) -> std::uint64_t& { return c.workload.profile.cycles_per_event; }),
      dbl("workload.warmup_fraction", [](C& c) -> double& { return c.forecast.warmup_fraction; }),
      {"workload.traces",
       [](const C& c) {
         std::string s;
         for (const auto& p : c.workload.traces) s += (s.empty() ? "" : ",") + p.string();
         return s;
       },
       [](C& c, const std::string& v) {
         c.workload.traces.clear();
         std::istringstream ss(v);
         std::string item;
         while (std::getline(ss, item, ','))
           if (!item.empty()) c.workload.traces.emplace_back(item);
       }},

      dbl("perf.clock_hz", [](C& c) -> double& { return c.forecast.perf.clock_hz; }),
      integer<std::size_t>("perf.cores", [](C& c) -> std::size_t& { return c.forecast.perf.cores; }),
      dbl("perf.base_cpi", [](C& c) -> double& { return c.forecast.perf.base_cpi; }),
      dbl("perf.miss_penalty", [](C& c) -> double& { return c.forecast.perf.miss_penalty; }),
      dbl("perf.apki", [](C& c) -> double& { return c.forecast.perf.apki; }),

      integer<std::size_t>("forecast.epochs", [](C& c) -> std::size_t& { return c.forecast.num_epochs; }),
      dbl("forecast.target", [](C& c) -> double& { return c.forecast.target; }),
      {"forecast.unseen_state", [](const C& c) { return std::string(to_string(c.forecast.unseen)); },
       [](C& c, const std::string& v) { c.forecast.unseen = parse_unseen_state(v); }},
      {"forecast.wear_mode", [](const C& c) { return std::string(to_string(c.forecast.wear_mode)); },
       [](C& c, const std::string& v) { c.forecast.wear_mode = parse_wear_mode(v); }},
      dbl("forecast.analytic_rate", [](C& c) -> double& { return c.forecast.analytic_rate; }),
      integer<std::size_t>("forecast.max_epoch_factor",
                           [](C& c) -> std::size_t& { return c.forecast.max_epoch_factor; }),
      integer<unsigned>("forecast.jobs", [](C& c) -> unsigned& { return c.forecast.jobs; }),

      path("output.series", [](C& c) -> std::filesystem::path& { return c.output.series; }),
      path("output.report", [](C& c) -> std::filesystem::path& { return c.output.report; }),
      path("output.checkpoint", [](C& c) -> std::filesystem::path& { return c.output.checkpoint; }),
  };
  return table;
}

const Field& field(std::string_view key) {
  for (const Field& f : fields())
    if (f.key == key) return f;
  throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& p) {
  std::ifstream is(p);
  if (!is) throw ConfigError("cannot open config " + p.string());
  return from_stream(is);
}

ExperimentConfig ExperimentConfig::from_stream(std::istream& is) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ExperimentConfig c;
  // The variant resets organization-level fields, so it goes first.
  if (auto v = tree.get_optional<std::string>("cache.variant")) c.set("cache.variant", *v);
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError("config key '" + section + "' must sit inside a section");
    for (const auto& [key, value] : body) {
      const std::string dotted = section + "." + key;
      if (dotted == "cache.variant") continue;
      c.set(dotted, value.data());
    }
  }
  c.validate();
  return c;
}

void ExperimentConfig::set(std::string_view dotted_key, const std::string& value) {
  field(dotted_key).set(*this, value);
}

void ExperimentConfig::validate() const {
  forecast.validate();
  if (forecast.wear_mode == WearMode::kSimulate && workload.traces.empty()) {
    workload.profile.validate();
    if (workload.mixes == 0) throw ConfigError("workload.mixes must be positive");
    if (workload.requests == 0) throw ConfigError("workload.requests must be positive");
  }
}

Echo ExperimentConfig::echo() const {
  Echo out;
  for (const Field& f : fields()) out.emplace_back(f.key, f.get(*this));
  return out;
}

void ExperimentConfig::write_ini(std::ostream& os) const {
  std::string section;
  for (const auto& [key, value] : echo()) {
    const auto dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) os << '\n';
      os << '[' << sec << "]\n";
      section = sec;
    }
    os << key.substr(dot + 1) << " = " << value << '\n';
  }
}

std::vector<std::vector<TraceEvent>> ExperimentConfig::build_mixes() const {
  std::vector<std::vector<TraceEvent>> mixes;
  if (!workload.traces.empty()) {
    for (const auto& p : workload.traces) mixes.push_back(read_trace(p));
    return mixes;
  }
  for (std::size_t i = 0; i < workload.mixes; ++i)
    mixes.push_back(generate(workload.profile, workload.requests, workload.seed * 1000003u + i));
  return mixes;
}

}  // namespace nvlife
