#include "bisense/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "bisense/io.hpp"
#include "bisense/parallel.hpp"
#include "bisense/rng.hpp"

namespace bisense {

namespace {

double region_diagonal(const Rect& r) {
  double dx = r.x1 - r.x0, dy = r.y1 - r.y0;
  return std::sqrt(dx * dx + dy * dy);
}

// Exhaustive assignment search; truth counts in play are tiny (a handful of
// targets), so the recursion is exact and cheap.
void assign_rec(const std::vector<Vec2>& est, const std::vector<Vec2>& truth,
                double pen2, std::size_t t, std::vector<int>& cur,
                std::vector<bool>& used, double cost, std::vector<int>& best,
                double& best_cost) {
  if (cost >= best_cost) return;
  if (t == truth.size()) {
    best = cur;
    best_cost = cost;
    return;
  }
  for (std::size_t e = 0; e < est.size(); ++e) {
    if (used[e]) continue;
    double dx = est[e].x - truth[t].x, dy = est[e].y - truth[t].y;
    double c = std::min(dx * dx + dy * dy, pen2);
    used[e] = true;
    cur[t] = static_cast<int>(e);
    assign_rec(est, truth, pen2, t + 1, cur, used, cost + c, best, best_cost);
    used[e] = false;
  }
  cur[t] = -1;
  assign_rec(est, truth, pen2, t + 1, cur, used, cost + pen2, best, best_cost);
}

}  // namespace

std::string cooperation_name(Cooperation c) {
  switch (c) {
    case Cooperation::Cooperative: return "cooperative";
    case Cooperation::MbsOnly: return "mbs_only";
    case Cooperation::MibsOnly: return "mibs_only";
  }
  return "?";
}

Cooperation cooperation_from_name(const std::string& name) {
  if (name == "cooperative") return Cooperation::Cooperative;
  if (name == "mbs_only") return Cooperation::MbsOnly;
  if (name == "mibs_only") return Cooperation::MibsOnly;
  throw std::invalid_argument(
      "unknown cooperation '" + name +
      "' (expected cooperative, mbs_only or mibs_only)");
}

std::string fusion_level_name(FusionLevel f) {
  return f == FusionLevel::SymbolLevel ? "symbol" : "data";
}

FusionLevel fusion_level_from_name(const std::string& name) {
  if (name == "symbol") return FusionLevel::SymbolLevel;
  if (name == "data") return FusionLevel::DataLevel;
  throw std::invalid_argument("unknown fusion level '" + name +
                              "' (expected symbol or data)");
}

void ExperimentSpec::validate() const {
  system.validate();
  scenario.validate();
  if (scenario.targets.empty()) {
    throw std::invalid_argument("experiment needs at least one target");
  }
  if (noise_sweep_dbm_hz.empty()) {
    throw std::invalid_argument("noise sweep must not be empty");
  }
  if (trials == 0) throw std::invalid_argument("trials must be positive");
  if (grid_resolution_m <= 0.0) {
    throw std::invalid_argument("grid resolution must be positive");
  }
  if (max_failure_rate < 0.0 || max_failure_rate > 1.0) {
    throw std::invalid_argument("max_failure_rate must lie in [0, 1]");
  }
  if (symbol_index >= system.n_symbols) {
    throw std::invalid_argument("symbol_index out of range");
  }
}

Assignment associate(const std::vector<Vec2>& estimates,
                     const std::vector<Vec2>& truths, double miss_penalty_m) {
  if (miss_penalty_m <= 0.0) {
    throw std::invalid_argument("miss penalty must be positive");
  }
  Assignment a;
  a.match.assign(truths.size(), -1);
  if (truths.empty()) return a;
  double pen2 = miss_penalty_m * miss_penalty_m;
  std::vector<int> cur(truths.size(), -1);
  std::vector<bool> used(estimates.size(), false);
  double best_cost = std::numeric_limits<double>::infinity();
  assign_rec(estimates, truths, pen2, 0, cur, used, 0.0, a.match, best_cost);
  a.total_cost = best_cost;
  return a;
}

double smse(const std::vector<std::vector<double>>& errors) {
  if (errors.empty()) throw std::invalid_argument("smse needs trials");
  std::size_t n_targets = errors.front().size();
  if (n_targets == 0) throw std::invalid_argument("smse needs targets");
  double total = 0.0;
  for (std::size_t l = 0; l < n_targets; ++l) {
    double acc = 0.0;
    for (const auto& trial : errors) {
      if (trial.size() != n_targets) {
        throw std::invalid_argument("inconsistent target count across trials");
      }
      acc += trial[l] * trial[l];
    }
    total += std::sqrt(acc / static_cast<double>(errors.size()));
  }
  return total;
}

namespace {

// Per-trial estimate production for each cooperation / fusion combination.
LocalizationResult run_trial_estimates(const ExperimentSpec& spec,
                                       const Scenario& sc,
                                       const GridSpec& grid,
                                       std::uint64_t trial_seed) {
  const std::size_t q = spec.system.scs_ratio();
  const std::size_t n_targets = sc.targets.size();
  LocalizeOptions opts = spec.locopts;
  opts.n_threads = 1;  // trials already run in parallel

  auto make = [&](Side side) {
    return synthesize_echo(spec.system, sc, side,
                           spec.symbol_index,
                           split_seed(trial_seed, static_cast<int>(side)),
                           spec.gain_mode);
  };

  switch (spec.cooperation) {
    case Cooperation::MbsOnly: {
      FusedTensor view = sensing_view(make(Side::MbsRx));
      return localize(spec.method, view, grid, n_targets, sc.mbs_pos,
                      sc.mibs_pos, opts);
    }
    case Cooperation::MibsOnly: {
      FusedTensor view = sensing_view(make(Side::MibsRx));
      return localize(spec.method, view, grid, n_targets, sc.mbs_pos,
                      sc.mibs_pos, opts);
    }
    case Cooperation::Cooperative: break;
  }

  EchoTensor y_mbs = make(Side::MbsRx);
  EchoTensor y_mibs = make(Side::MibsRx);
  if (spec.fusion == FusionLevel::SymbolLevel) {
    FusedTensor fused = fuse_symbol_level(y_mbs, y_mibs, q, spec.fusion_mode);
    return localize(spec.method, fused, grid, n_targets, sc.mbs_pos,
                    sc.mibs_pos, opts);
  }

  // Data-level fusion: localize each side independently, pair the two
  // estimate sets, and average matched pairs. MiBS estimates that match
  // nothing are dropped; unmatched MBS estimates stand as-is.
  FusedTensor va = sensing_view(y_mbs);
  FusedTensor vb = sensing_view(y_mibs);
  LocalizationResult ra = localize(spec.method, va, grid, n_targets,
                                   sc.mbs_pos, sc.mibs_pos, opts);
  LocalizationResult rb = localize(spec.method, vb, grid, n_targets,
                                   sc.mbs_pos, sc.mibs_pos, opts);
  Assignment pairing =
      associate(rb.estimates, ra.estimates, region_diagonal(spec.region));
  LocalizationResult fusedr;
  fusedr.method = spec.method;
  fusedr.n_requested = n_targets;
  for (std::size_t i = 0; i < ra.estimates.size(); ++i) {
    Vec2 p = ra.estimates[i];
    if (pairing.match[i] >= 0) {
      const Vec2& qb = rb.estimates[static_cast<std::size_t>(pairing.match[i])];
      p = Vec2{(p.x + qb.x) / 2.0, (p.y + qb.y) / 2.0};
    }
    fusedr.estimates.push_back(p);
    fusedr.peak_values.push_back(ra.peak_values[i]);
  }
  return fusedr;
}

}  // namespace

CellResult run_cell(const ExperimentSpec& spec, double noise_dbm_hz) {
  spec.validate();
  auto t0 = std::chrono::steady_clock::now();

  Scenario sc = spec.scenario;
  sc.noise_psd_dbm_hz = noise_dbm_hz;
  GridSpec grid = build_grid(spec.region, spec.grid_resolution_m, sc);
  const double penalty = region_diagonal(spec.region);

  std::vector<Vec2> truths;
  for (const Target& t : sc.targets) truths.push_back(t.pos);

  CellResult cell;
  cell.noise_dbm_hz = noise_dbm_hz;
  cell.method = spec.method;
  cell.cooperation = spec.cooperation;
  cell.fusion = spec.fusion;
  cell.trials = spec.trials;
  cell.records.resize(spec.trials);

  parallel_for(spec.trials, spec.n_threads, [&](std::size_t i) {
    TrialRecord& rec = cell.records[i];
    rec.seed = spec.base_seed + i;
    try {
      LocalizationResult res = run_trial_estimates(spec, sc, grid, rec.seed);
      Assignment a = associate(res.estimates, truths, penalty);
      rec.estimates = res.estimates;
      rec.per_target_error_m.resize(truths.size());
      for (std::size_t t = 0; t < truths.size(); ++t) {
        double e = penalty;
        if (a.match[t] >= 0) {
          e = std::min(
              dist(res.estimates[static_cast<std::size_t>(a.match[t])],
                   truths[t]),
              penalty);
        }
        rec.per_target_error_m[t] = e;
        rec.error_sum_m += e;
      }
    } catch (const std::exception& ex) {
      rec.failed = true;
      rec.failure_reason = ex.what();
    }
  });

  std::vector<std::vector<double>> err;
  std::vector<double> sums;
  for (const TrialRecord& r : cell.records) {
    if (r.failed) {
      ++cell.failures;
      continue;
    }
    err.push_back(r.per_target_error_m);
    sums.push_back(r.error_sum_m);
  }
  if (!err.empty()) {
    cell.smse_m = smse(err);
    std::sort(sums.begin(), sums.end());
    std::size_t n = sums.size();
    cell.median_trial_error_m =
        (n % 2 == 1) ? sums[n / 2] : 0.5 * (sums[n / 2 - 1] + sums[n / 2]);
  } else {
    cell.smse_m = std::numeric_limits<double>::quiet_NaN();
    cell.median_trial_error_m = std::numeric_limits<double>::quiet_NaN();
  }
  cell.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return cell;
}

EvalReport run_sweep(const ExperimentSpec& spec) {
  spec.validate();
  EvalReport report;
  for (double level : spec.noise_sweep_dbm_hz) {
    report.cells.push_back(run_cell(spec, level));
  }
  return report;
}

void write_report_csv(const EvalReport& report, const std::string& path,
                      std::uint64_t base_seed, bool stable_timing) {
  std::string out;
  out += "# base_seed=" + std::to_string(base_seed) + "\n";
  out += "noise_dbm_hz,method,cooperation,fusion,smse_m,trials,failures,"
         "wall_time_s\n";
  for (const CellResult& c : report.cells) {
    out += fmt_double(c.noise_dbm_hz) + "," + method_name(c.method) + "," +
           cooperation_name(c.cooperation) + "," + fusion_level_name(c.fusion) +
           "," + fmt_double(c.smse_m) + "," + std::to_string(c.trials) + "," +
           std::to_string(c.failures) + "," +
           fmt_double(stable_timing ? 0.0 : c.wall_time_s) + "\n";
  }
  atomic_write(path, out);
}

void write_trial_records(const EvalReport& report, const std::string& path,
                         std::uint64_t base_seed) {
  using nlohmann::json;
  std::string out;
  json meta;
  meta["type"] = "meta";
  meta["base_seed"] = base_seed;
  meta["schema"] = "noise_dbm_hz,method,cooperation,fusion,trial,seed,failed,"
                   "failure_reason,estimates_m,per_target_error_m,error_sum_m";
  out += meta.dump() + "\n";
  for (const CellResult& c : report.cells) {
    for (std::size_t i = 0; i < c.records.size(); ++i) {
      const TrialRecord& r = c.records[i];
      json j;
      j["type"] = "trial";
      j["noise_dbm_hz"] = c.noise_dbm_hz;
      j["method"] = method_name(c.method);
      j["cooperation"] = cooperation_name(c.cooperation);
      j["fusion"] = fusion_level_name(c.fusion);
      j["trial"] = i;
      j["seed"] = r.seed;
      j["failed"] = r.failed;
      j["failure_reason"] = r.failure_reason;
      json est = json::array();
      for (const Vec2& p : r.estimates) est.push_back({p.x, p.y});
      j["estimates_m"] = est;
      j["per_target_error_m"] = r.per_target_error_m;
      j["error_sum_m"] = r.error_sum_m;
      out += j.dump() + "\n";
    }
  }
  atomic_write(path, out);
}

bool report_within_failure_bound(const EvalReport& report,
                                 double max_failure_rate) {
  for (const CellResult& c : report.cells) {
    if (c.trials == 0) return false;
    double rate = static_cast<double>(c.failures) /
                  static_cast<double>(c.trials);
    if (rate > max_failure_rate) return false;
  }
  return true;
}

}  // namespace bisense
