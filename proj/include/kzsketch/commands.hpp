#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "kzsketch/geometry.hpp"

namespace kz::cli {

using Json = nlohmann::ordered_json;

enum ExitCode : int { kPass = 0, kAssertionFailed = 1, kUsage = 2 };

// Everything a run depends on. Parameters keep their registration order so
// serialized specs are stable.
struct ExperimentSpec {
  std::string command;
  Json params = Json::object();
  std::uint64_t seed = 0;
  std::string report_format = "json";  // json | table

  Json to_json() const;
  static ExperimentSpec from_json(const Json& j);
};

struct CommandResult {
  int exit_code = kPass;
  Json report;
};

// Runs one command. Throws kz::Error on bad input; never touches stdout.
CommandResult run_spec(const ExperimentSpec& spec);

// Two-column key/value rendering of a report, nested keys joined with '.'.
std::string render_table(const Json& report);
std::string render_report(const Json& report, const std::string& format);

// Directory from KZSKETCH_REPORT_DIR, or empty.
std::string default_report_dir();

// Half uniform grid points, half data points plus Gaussian noise of scale delta/64.
CenterSet sample_query_centers(const GridDataset& data, std::size_t k, std::uint64_t seed);

// Full command-line entry point: parses argv, runs, prints the report.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kz::cli
