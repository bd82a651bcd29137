#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dhd/run_config.hpp"

namespace dhd {

inline constexpr const char* kVersion = "1.0.0";

/// One output file held in memory until write_outputs.
struct Artifact {
  std::string filename;
  std::string content;
};

struct RunResult {
  std::vector<Artifact> artifacts;
  bool ok = true;            ///< false when a self-test fails
  std::string summary;       ///< one line for stdout
};

/// "R0.50_seed42": reflectivity with two decimals (more when needed) and seed.
std::string file_tag(double R, std::uint64_t seed);

/// Writes every artifact under `output_dir` (created if missing).
std::vector<std::filesystem::path> write_outputs(const std::vector<Artifact>& artifacts,
                                                 const std::filesystem::path& output_dir);

/// Subcommands. `config.seed` must be resolved before calling.
RunResult run_theory(const RunConfig& config);
RunResult run_simulate(const RunConfig& config);
RunResult run_reconstruct(const RunConfig& config, const std::filesystem::path& points_file);
RunResult run_sweep(const RunConfig& config);
RunResult run_pulses(const RunConfig& config, bool write_trace_file);
RunResult run_verify(const RunConfig& config);

/// Manifest record: subcommand, version and the fully resolved configuration.
std::string manifest_json(const std::string& subcommand, const RunConfig& config);

/// Reads the x and y columns of a CSV with a header row.
PhasePoints read_points(std::istream& in, Compensation compensation);

/// Full command-line entry point; returns the process exit status.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dhd
