#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nvlife/forecast.hpp"
#include "nvlife/workload.hpp"

namespace nvlife {

struct WorkloadConfig {
  SyntheticProfile profile;
  std::size_t mixes = 4;
  std::size_t requests = 40000;  // per mix
  std::uint64_t seed = 1;
  // Recorded traces replace the synthetic mixes when given.
  std::vector<std::filesystem::path> traces;
};

struct OutputConfig {
  std::filesystem::path series;
  std::filesystem::path report;
  std::filesystem::path checkpoint;
};

using Echo = std::vector<std::pair<std::string, std::string>>;

// Everything one run needs. Sectioned key = value file:
//   [cache] [endurance] [workload] [perf] [forecast] [output]
struct ExperimentConfig {
  ForecastConfig forecast;
  WorkloadConfig workload;
  OutputConfig output;

  static ExperimentConfig from_file(const std::filesystem::path& path);
  static ExperimentConfig from_stream(std::istream& is);

  // Overrides one "section.key" with a textual value.
  void set(std::string_view dotted_key, const std::string& value);
  void validate() const;

  // Every resolved key in file order, for embedding in artifacts.
  Echo echo() const;
  // Same content as an INI document.
  void write_ini(std::ostream& os) const;

  std::vector<std::vector<TraceEvent>> build_mixes() const;
};

// Shortest text that parses back to the same double.
std::string format_double(double v);

}  // namespace nvlife
