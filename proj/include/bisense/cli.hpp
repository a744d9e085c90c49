#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bisense/config.hpp"

namespace bisense {

// Parsed command line. Flag values override the config file, which overrides
// built-in defaults.
struct RunManifest {
  std::string command;
  std::string config_path;  // empty: built-in defaults
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<double> noise_dbm_hz;
  std::optional<std::string> method;
  std::optional<std::string> cooperation;
  std::optional<std::string> fusion_level;   // --fusion-mode symbol|data
  std::optional<std::string> overlap_combining;
  std::optional<double> grid_res_m;
  std::optional<std::size_t> trials;
  std::optional<int> n_threads;
  bool full_scale = false;
  bool stable_timing = false;
  bool quiet = false;  // suppress per-cell progress lines
  std::vector<std::size_t> bench_grid_sizes{100, 400, 1600};
  std::size_t bench_repeats = 5;
};

// Entry point shared by the binary and the tests. argv-style arguments
// without the program name. Returns the process exit code: 0 on success,
// 1 on runtime failure (including sweeps that exceed the failure-rate
// bound), 2 on usage errors.
int run_cli(const std::vector<std::string>& args);

}  // namespace bisense
