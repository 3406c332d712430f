#include <doctest.h>

#include <sstream>

#include "nvlife/config.hpp"
#include "nvlife/error.hpp"

using namespace nvlife;

TEST_CASE("INI sections map onto the run configuration") {
  std::istringstream in(
      "; desk run\n"
      "[cache]\n"
      "sets = 32\n"
      "ways = 4\n"
      "variant = FD+6\n"
      "[endurance]\n"
      "cv = 0.3\n"
      "seed = 7\n"
      "[workload]\n"
      "mixes = 2\n"
      "reuse = 0.5\n"
      "[forecast]\n"
      "epochs = 8\n"
      "unseen_state = end_epoch\n");
  const ExperimentConfig c = ExperimentConfig::from_stream(in);
  CHECK(c.forecast.geometry.sets == 32);
  CHECK(c.forecast.geometry.repair_entries == 6);
  CHECK(c.forecast.endurance.cv == 0.3);
  CHECK(c.forecast.endurance.seed == 7);
  CHECK(c.workload.mixes == 2);
  CHECK(c.workload.profile.reuse == 0.5);
  CHECK(c.forecast.num_epochs == 8);
  CHECK(c.forecast.unseen == UnseenState::kEndEpoch);
}

TEST_CASE("the variant applies before other cache keys") {
  std::istringstream in("[cache]\nmetadata_bytes = 1\nvariant = L2C2-NWL\n");
  const ExperimentConfig c = ExperimentConfig::from_stream(in);
  CHECK(c.forecast.geometry.metadata_bytes == 1);
  CHECK_FALSE(c.forecast.geometry.wear_leveling);
}

TEST_CASE("bad input is a configuration error") {
  std::istringstream unknown("[cache]\nsize = 4MB\n");
  CHECK_THROWS_AS(ExperimentConfig::from_stream(unknown), ConfigError);
  std::istringstream number("[endurance]\nmu = lots\n");
  CHECK_THROWS_AS(ExperimentConfig::from_stream(number), ConfigError);
  std::istringstream negative("[cache]\nsets = -4\n");
  CHECK_THROWS_AS(ExperimentConfig::from_stream(negative), ConfigError);
  std::istringstream range("[forecast]\ntarget = 1.5\n");
  CHECK_THROWS_AS(ExperimentConfig::from_stream(range), ConfigError);
  std::istringstream sum("[workload]\nunc = 0.9\n");
  CHECK_THROWS_AS(ExperimentConfig::from_stream(sum), ConfigError);
  std::istringstream loose("mu = 5\n");
  CHECK_THROWS_AS(ExperimentConfig::from_stream(loose), ConfigError);
  std::istringstream syntax("[cache\nsets = 2\n");
  CHECK_THROWS_AS(ExperimentConfig::from_stream(syntax), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_file("/nonexistent/run.ini"), ConfigError);
}

TEST_CASE("echo and INI output round trip every key") {
  ExperimentConfig c;
  c.set("cache.variant", "L2C2+6");
  c.set("endurance.cv", "0.25");
  c.set("forecast.wear_mode", "analytic");
  c.set("workload.traces", "a.nvtrace,b.txt");
  std::stringstream ini;
  c.write_ini(ini);
  const ExperimentConfig back = ExperimentConfig::from_stream(ini);
  CHECK(back.echo() == c.echo());
  CHECK(back.workload.traces.size() == 2);

  bool found = false;
  for (const auto& [k, v] : c.echo())
    if (k == "endurance.cv") found = v == "0.25";
  CHECK(found);
}

TEST_CASE("format_double is shortest round-trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e11) == "1e+11");
  CHECK(format_double(86400) == "86400");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("synthetic mixes get distinct deterministic seeds") {
  ExperimentConfig c;
  c.workload.mixes = 3;
  c.workload.requests = 500;
  const auto a = c.build_mixes();
  REQUIRE(a.size() == 3);
  CHECK_FALSE(a[0] == a[1]);
  CHECK(a == c.build_mixes());
}
