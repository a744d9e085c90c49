#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bisense/estimators.hpp"
#include "bisense/scenario.hpp"
#include "bisense/waveform.hpp"

namespace bisense {

enum class Cooperation { Cooperative, MbsOnly, MibsOnly };
enum class FusionLevel { SymbolLevel, DataLevel };

std::string cooperation_name(Cooperation c);
Cooperation cooperation_from_name(const std::string& name);
std::string fusion_level_name(FusionLevel f);
FusionLevel fusion_level_from_name(const std::string& name);

// One Monte-Carlo experiment: a single (method, cooperation, fusion level)
// combination swept over receiver noise PSD levels.
struct ExperimentSpec {
  SystemConfig system;
  Scenario scenario;
  Method method = Method::Gdft;
  Cooperation cooperation = Cooperation::Cooperative;
  FusionLevel fusion = FusionLevel::SymbolLevel;
  std::vector<double> noise_sweep_dbm_hz;
  std::size_t trials = 100;
  std::uint64_t base_seed = 1;
  Rect region{0.0, 10.0, 300.0, 100.0};
  double grid_resolution_m = 5.0;
  GainMode gain_mode = GainMode::BistaticRadar;
  FusionMode fusion_mode = FusionMode::Normalized;
  LocalizeOptions locopts;
  std::size_t symbol_index = 0;
  int n_threads = 1;
  double max_failure_rate = 0.2;

  void validate() const;
};

// Truth-to-estimate matching: match[t] is the estimate index assigned to
// truth t, or -1 for a miss. Exact minimum of the total squared error over
// all one-to-one assignments, with each truth's squared error capped at
// miss_penalty_m^2 (a miss costs exactly the cap).
struct Assignment {
  std::vector<int> match;
  double total_cost = 0.0;
};

Assignment associate(const std::vector<Vec2>& estimates,
                     const std::vector<Vec2>& truths, double miss_penalty_m);

// Summed per-target RMSE: errors[t][l] is the error of target l in trial t;
// every trial must carry the same target count.
double smse(const std::vector<std::vector<double>>& errors);

struct TrialRecord {
  std::uint64_t seed = 0;
  bool failed = false;
  std::string failure_reason;
  std::vector<Vec2> estimates;
  std::vector<double> per_target_error_m;  // one entry per truth
  double error_sum_m = 0.0;
};

struct CellResult {
  double noise_dbm_hz = 0.0;
  Method method = Method::Gdft;
  Cooperation cooperation = Cooperation::Cooperative;
  FusionLevel fusion = FusionLevel::SymbolLevel;
  double smse_m = 0.0;                // over successful trials
  double median_trial_error_m = 0.0;  // median per-trial error sum
  std::size_t trials = 0;
  std::size_t failures = 0;
  double wall_time_s = 0.0;
  std::vector<TrialRecord> records;
};

struct EvalReport {
  std::vector<CellResult> cells;
};

// Runs `spec.trials` independent trials at one noise level. Trial i draws
// its tensors from base_seed + i (one derived stream per receive side), so
// records are reproducible and independent of n_threads.
CellResult run_cell(const ExperimentSpec& spec, double noise_dbm_hz);

// One cell per entry of the noise sweep.
EvalReport run_sweep(const ExperimentSpec& spec);

// Report CSV, one row per cell. stable_timing zeroes the wall_time_s column
// so reruns of the same experiment are byte-identical.
void write_report_csv(const EvalReport& report, const std::string& path,
                      std::uint64_t base_seed, bool stable_timing);

// Line-delimited JSON trial records (first line is a meta/schema record).
void write_trial_records(const EvalReport& report, const std::string& path,
                         std::uint64_t base_seed);

bool report_within_failure_bound(const EvalReport& report,
                                 double max_failure_rate);

}  // namespace bisense
