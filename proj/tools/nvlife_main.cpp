// nvlife: lifetime forecasts for wear-limited last-level caches.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "nvlife/cachesim.hpp"
#include "nvlife/codec.hpp"
#include "nvlife/config.hpp"
#include "nvlife/error.hpp"
#include "nvlife/forecast.hpp"
#include "nvlife/layout.hpp"
#include "nvlife/workload.hpp"

namespace {

using nvlife::ExperimentConfig;
using Json = nlohmann::ordered_json;

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kTrace = 3, kCapacity = 4 };

constexpr const char* kPerfNote =
    "ipc is an analytic proxy: instructions / (base cycles + LLC misses * miss penalty)";

struct ConfigArgs {
  std::string file;
  std::vector<std::string> overrides;
  std::optional<unsigned> jobs;

  void attach(CLI::App* cmd) {
    cmd->add_option("-c,--config", file, "INI experiment file (defaults when omitted)");
    cmd->add_option("-s,--set", overrides, "Override one key, e.g. cache.variant=fd")->take_all();
    cmd->add_option("-j,--jobs", jobs, "Worker threads for workload mixes");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg = file.empty() ? ExperimentConfig{} : ExperimentConfig::from_file(file);
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw nvlife::ConfigError("--set expects key=value, got '" + o + "'");
      cfg.set(o.substr(0, eq), o.substr(eq + 1));
    }
    if (jobs) cfg.forecast.jobs = *jobs;
    cfg.validate();
    return cfg;
  }
};

Json echo_json(const nvlife::Echo& echo) {
  Json j = Json::object();
  for (const auto& [k, v] : echo) j[k] = v;
  return j;
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json indices_json(const nvlife::LifetimeIndices& ix) {
  return {{"T_50C", optional_json(ix.t50c)}, {"T_99C", optional_json(ix.t99c)},
          {"T_90C", optional_json(ix.t90c)}, {"T_99P", optional_json(ix.t99p)},
          {"T_90P", optional_json(ix.t90p)}, {"I_50C_5y", ix.i50c_5y}};
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw nvlife::Error("cannot write " + path);
  return os;
}

nvlife::ForecastSeries read_series(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw nvlife::Error("cannot open series " + path);
  return nvlife::ForecastSeries::read_csv(is);
}

int cmd_forecast(const ConfigArgs& args, const std::string& series_path, const std::string& report_path,
                 const std::string& checkpoint, const std::string& resume, bool quiet) {
  ExperimentConfig cfg = args.resolve();
  if (!series_path.empty()) cfg.output.series = series_path;
  if (!report_path.empty()) cfg.output.report = report_path;
  if (!checkpoint.empty()) cfg.output.checkpoint = checkpoint;

  nvlife::ForecastHooks hooks;
  hooks.echo = cfg.echo();
  hooks.echo.emplace_back("note", kPerfNote);
  if (!cfg.output.checkpoint.empty()) hooks.checkpoint = cfg.output.checkpoint;
  if (!resume.empty()) hooks.resume = resume;
  if (!quiet) {
    hooks.on_sample = [](std::size_t epoch, const nvlife::ForecastSample& s) {
      std::cerr << "epoch " << epoch << "  t=" << s.t << " s  capacity=" << s.capacity
                << "  ipc_norm=" << s.ipc_norm << '\n';
    };
  }
  const auto mixes = cfg.forecast.wear_mode == nvlife::WearMode::kSimulate
                         ? cfg.build_mixes()
                         : std::vector<std::vector<nvlife::TraceEvent>>{};
  const nvlife::ForecastSeries series = nvlife::run_forecast(cfg.forecast, mixes, hooks);
  const auto ix = nvlife::compute_indices(series, cfg.forecast.perf.clock_hz, cfg.forecast.perf.cores);

  if (cfg.output.series.empty()) {
    series.write_csv(std::cout);
  } else {
    auto os = open_out(cfg.output.series.string());
    series.write_csv(os);
  }
  Json report = {{"config", echo_json(hooks.echo)},
                 {"indices", indices_json(ix)},
                 {"samples", series.samples.size()},
                 {"final_capacity", series.samples.back().capacity},
                 {"final_t_seconds", series.samples.back().t}};
  if (cfg.output.report.empty()) {
    std::cerr << report.dump(2) << '\n';
  } else {
    auto os = open_out(cfg.output.report.string());
    os << report.dump(2) << '\n';
  }
  return kOk;
}

int cmd_simulate(const ConfigArgs& args, double at, const std::string& wr_bin, const std::string& wr_csv,
                 const std::string& stats_path) {
  const ExperimentConfig cfg = args.resolve();
  const auto& g = cfg.forecast.geometry;
  nvlife::EnduranceModel model = cfg.forecast.endurance;
  model.granularity = nvlife::granularity_for(g);
  const auto health = nvlife::HealthSnapshot::from_rw(g, nvlife::init_rw_map(g, model));
  const auto stats = nvlife::simulate_mixes(g, health, cfg.build_mixes(), cfg.forecast.perf, at,
                                            cfg.forecast.warmup_fraction, cfg.forecast.jobs);
  const auto wr = stats.wr_map(g);
  if (!wr_bin.empty()) {
    auto os = open_out(wr_bin);
    wr.save(os);
  }
  if (!wr_csv.empty()) {
    auto os = open_out(wr_csv);
    wr.write_csv(os, "writes_per_second");
  }
  Json classes = Json::object();
  for (int c = 0; c < nvlife::kNumClasses; ++c)
    classes[std::to_string(nvlife::kCompressionClasses[static_cast<std::size_t>(c)])] =
        stats.insert_classes[static_cast<std::size_t>(c)];
  Json j = {{"config", echo_json(cfg.echo())},
            {"note", kPerfNote},
            {"mixes", stats.runs},
            {"requests", stats.requests},
            {"hits", stats.hits},
            {"misses", stats.misses},
            {"inserts", stats.inserts},
            {"bypasses", stats.bypasses},
            {"evictions", stats.evictions},
            {"invalidations", stats.invalidations},
            {"insert_classes", classes},
            {"seconds", stats.seconds},
            {"ipc", stats.ipc()},
            {"effective_capacity", health.effective_capacity()}};
  if (stats_path.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    auto os = open_out(stats_path);
    os << j.dump(2) << '\n';
  }
  return kOk;
}

nvlife::Block parse_block(const std::string& hex) {
  const auto bytes = nvlife::from_hex(hex);
  if (bytes.size() != nvlife::kBlockBytes) throw nvlife::FormatError("block must be 64 bytes (128 hex digits)");
  nvlife::Block b{};
  std::copy(bytes.begin(), bytes.end(), b.begin());
  return b;
}

int cmd_compress(const std::string& hex) {
  const auto cb = nvlife::compress(parse_block(hex));
  std::cout << nvlife::name(cb.encoding) << ' ' << cb.size() << '\n';
  if (cb.size()) std::cout << nvlife::to_hex(cb.payload) << '\n';
  return kOk;
}

int cmd_rearrange(const std::string& fm_text, std::size_t gc, const std::string& ecb_hex) {
  const auto fm = nvlife::FaultBitmap::parse(fm_text);
  const auto ecb = nvlife::from_hex(ecb_hex);
  const auto iv = nvlife::index_calc(fm, gc, ecb.size());
  std::vector<std::uint8_t> frame(fm.size(), 0);
  nvlife::scatter_write(ecb, fm, gc, frame);
  std::cout << "pos  fm  index  wm  recb\n";
  for (std::size_t i = 0; i < fm.size(); ++i) {
    std::cout << i << "  " << fm.live(i) << "  " << iv.index[i] << "  " << int(iv.write_mask[i]) << "  ";
    if (iv.write_mask[i])
      std::cout << nvlife::to_hex(std::span<const std::uint8_t>(&frame[i], 1));
    else
      std::cout << "--";
    std::cout << '\n';
  }
  std::string wm;
  for (auto w : iv.write_mask) wm += w ? '1' : '0';
  std::cout << "wm " << wm << '\n';
  return kOk;
}

int cmd_project(const std::string& in, const std::string& out, double k) {
  auto series = nvlife::project(read_series(in), k);
  series.echo.emplace_back("projection_k", nvlife::format_double(k));
  if (out.empty()) {
    series.write_csv(std::cout);
  } else {
    auto os = open_out(out);
    series.write_csv(os);
  }
  return kOk;
}

int cmd_indices(const std::string& in, double clock, std::size_t cores, double horizon) {
  const auto series = read_series(in);
  const auto ix = nvlife::compute_indices(series, clock, cores, horizon);
  Json j = {{"series", in}, {"config", echo_json(series.echo)}, {"indices", indices_json(ix)}};
  std::cout << j.dump(2) << '\n';
  return kOk;
}

int cmd_generate(const ConfigArgs& args, const std::string& out, std::size_t mix) {
  const ExperimentConfig cfg = args.resolve();
  const auto& w = cfg.workload;
  const auto events = nvlife::generate(w.profile, w.requests, w.seed * 1000003u + mix);
  nvlife::write_trace(out, events);
  std::cerr << events.size() << " events written to " << out << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forecast capacity and performance of wear-limited non-volatile last-level caches"};
  app.require_subcommand(0, 1);
  bool show_defaults = false;
  app.add_flag("--show-defaults", show_defaults, "Print every configuration key with its default");

  ConfigArgs fc_args;
  std::string series_out, report_out, checkpoint, resume;
  bool quiet = false;
  auto* fc = app.add_subcommand("forecast", "Run the epoch forecast; series CSV and indices JSON");
  fc_args.attach(fc);
  fc->add_option("--series", series_out, "Series CSV (stdout when unset)");
  fc->add_option("--report", report_out, "Indices JSON (stderr when unset)");
  fc->add_option("--checkpoint", checkpoint, "Checkpoint written after each epoch");
  fc->add_option("--resume", resume, "Continue from a checkpoint");
  fc->add_flag("-q,--quiet", quiet, "No per-epoch progress");

  ConfigArgs sim_args;
  double at = 0;
  std::string wr_bin, wr_csv, stats_out;
  auto* sim = app.add_subcommand("simulate", "One simulation phase on a fresh array; WR map and stats");
  sim_args.attach(sim);
  sim->add_option("--at", at, "Simulated start time in seconds");
  sim->add_option("--wr-map", wr_bin, "Binary WR map dump");
  sim->add_option("--wr-csv", wr_csv, "WR map as CSV");
  sim->add_option("--stats", stats_out, "Stats JSON (stdout when unset)");

  std::string block_hex;
  auto* comp = app.add_subcommand("compress", "Smallest encoding of a 64-byte block");
  comp->add_option("block", block_hex, "128 hex digits")->required();

  std::string fm_text, ecb_hex;
  std::size_t gc = 0;
  auto* rea = app.add_subcommand("rearrange", "Rearranged layout and write mask of an ECB");
  rea->add_option("--fm", fm_text, "Fault bitmap, 1 = live byte")->required();
  rea->add_option("--gc", gc, "Global counter");
  rea->add_option("--ecb", ecb_hex, "ECB bytes in hex")->required();

  std::string proj_in, proj_out;
  double k = 1;
  auto* proj = app.add_subcommand("project", "Scale a series for bitcells k times more durable");
  proj->add_option("series", proj_in, "Series CSV")->required();
  proj->add_option("-k,--k", k, "Endurance multiplier")->required();
  proj->add_option("-o,--out", proj_out, "Output CSV (stdout when unset)");

  std::string ix_in;
  double clock = 3.5e9;
  std::size_t cores = 4;
  double horizon = nvlife::kFiveYears;
  auto* ix = app.add_subcommand("indices", "Lifetime indices of a series CSV");
  ix->add_option("series", ix_in, "Series CSV")->required();
  ix->add_option("--clock", clock, "Core clock in Hz");
  ix->add_option("--cores", cores, "Core count");
  ix->add_option("--horizon", horizon, "Instruction-count horizon in seconds");

  ConfigArgs gen_args;
  std::string gen_out;
  std::size_t gen_mix = 0;
  auto* gen = app.add_subcommand("generate", "Write one synthetic mix as a trace file");
  gen_args.attach(gen);
  gen->add_option("-o,--out", gen_out, "Trace path (.txt for text form)")->required();
  gen->add_option("--mix", gen_mix, "Mix index");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (show_defaults) {
      ExperimentConfig{}.write_ini(std::cout);
      return kOk;
    }
    if (*fc) return cmd_forecast(fc_args, series_out, report_out, checkpoint, resume, quiet);
    if (*sim) return cmd_simulate(sim_args, at, wr_bin, wr_csv, stats_out);
    if (*comp) return cmd_compress(block_hex);
    if (*rea) return cmd_rearrange(fm_text, gc, ecb_hex);
    if (*proj) return cmd_project(proj_in, proj_out, k);
    if (*ix) return cmd_indices(ix_in, clock, cores, horizon);
    if (*gen) return cmd_generate(gen_args, gen_out, gen_mix);
    std::cout << app.help();
    return kOk;
  } catch (const nvlife::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const nvlife::TraceError& e) {
    std::cerr << "trace error: " << e.what() << '\n';
    return kTrace;
  } catch (const nvlife::CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << '\n';
    return kCapacity;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
}
