#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "echoscope/dates.hpp"
#include "echoscope/echo.hpp"
#include "echoscope/errors.hpp"

namespace echoscope::cli {

// Bad flags, bad config documents, or missing required settings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kTransport = 3 };

struct RunConfig {
  std::filesystem::path releases;
  std::filesystem::path utterances;
  std::filesystem::path out_dir = "echoscope-work";
  std::filesystem::path labels;
  std::filesystem::path stopwords;  // empty = shipped English list

  std::string provider = "reference";  // reference | remote
  std::string endpoint;
  std::string model;
  std::size_t dimension = 0;
  std::size_t batch_size = 64;
  int max_attempts = 4;
  int backoff_ms = 200;

  echo::WindowConfig window;
  bool sensitivity = false;
  bool embed_title = true;
  std::optional<Date> coverage_start;
  std::optional<Date> coverage_end;
  std::size_t top_k = 5;
  std::size_t permutations = 0;

  std::vector<double> grid;  // empty = 201 points over [0, 1]
  std::size_t per_org = 4;
  std::size_t per_bin = 4;
  std::size_t min_per_bin = 4;
  int relevant_days = 7;

  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

// Reads a JSON config document; unknown keys are rejected.
RunConfig load_config(const std::filesystem::path& path);
void apply_config_document(RunConfig& config, const std::string& json_text);

// The settings that determine results (everything except out_dir and workers), as canonical JSON.
std::string effective_config_json(const RunConfig& config);
std::string config_digest(const RunConfig& config);

int cmd_ingest(const RunConfig& config, std::ostream& out);
int cmd_embed(const RunConfig& config, std::ostream& out);
int cmd_calibrate(const RunConfig& config, std::ostream& out);
int cmd_echo(const RunConfig& config, std::ostream& out);
int cmd_report(const RunConfig& config, std::ostream& out);

// Full command line entry point: parses flags, runs the subcommand and maps
// exceptions to exit codes (1 usage/config, 2 data, 3 transport/protocol).
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace echoscope::cli
