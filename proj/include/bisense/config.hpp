#pragma once

#include <string>
#include <vector>

#include "bisense/eval.hpp"

namespace bisense {

// Full run manifest: system + scenario + search grid + experiment matrix.
// The experiment axes are lists; the CLI expands their cross product into
// one ExperimentSpec per (method, cooperation, fusion level).
struct RunConfig {
  SystemConfig system;
  Scenario scenario;
  Rect region{0.0, 10.0, 300.0, 100.0};
  double grid_resolution_m = 5.0;
  std::vector<double> noise_sweep_dbm_hz;
  std::vector<Method> methods{Method::Gdft};
  std::vector<Cooperation> cooperations{Cooperation::Cooperative,
                                        Cooperation::MbsOnly,
                                        Cooperation::MibsOnly};
  std::vector<FusionLevel> fusion_levels{FusionLevel::SymbolLevel};
  std::size_t trials = 100;
  std::uint64_t base_seed = 1;
  GainMode gain_mode = GainMode::BistaticRadar;
  FusionMode fusion_mode = FusionMode::Normalized;
  double min_separation_m = 0.0;  // <= 0: two grid cells
  std::size_t music_angle_grid = 1024;
  std::size_t music_delay_grid = 2048;
  int n_threads = 1;
  double max_failure_rate = 0.2;

  void validate() const;
  ExperimentSpec make_spec(Method m, Cooperation c, FusionLevel f) const;
};

// CI-scale defaults; full_scale switches to the reference parameter set
// (64-antenna arrays, 512 subcarriers per side, spacing ratio 4).
RunConfig default_run_config(bool full_scale);

// Strict loader: unknown keys, wrong types and out-of-range values all throw
// with a message naming the offending key.
RunConfig load_run_config(const std::string& path);

std::string gain_mode_name(GainMode m);
GainMode gain_mode_from_name(const std::string& name);
std::string fusion_mode_name(FusionMode m);
FusionMode fusion_mode_from_name(const std::string& name);

}  // namespace bisense
