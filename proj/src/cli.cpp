#include "bisense/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>

#include <CLI11.hpp>

#include "bisense/io.hpp"
#include "bisense/rng.hpp"

namespace bisense {

namespace {

namespace fs = std::filesystem;

RunConfig effective_config(const RunManifest& m) {
  RunConfig c = m.config_path.empty() ? default_run_config(m.full_scale)
                                      : load_run_config(m.config_path);
  if (m.seed) c.base_seed = *m.seed;
  if (m.noise_dbm_hz) {
    c.scenario.noise_psd_dbm_hz = *m.noise_dbm_hz;
    c.noise_sweep_dbm_hz = {*m.noise_dbm_hz};
  }
  if (m.method) c.methods = {method_from_name(*m.method)};
  if (m.cooperation) c.cooperations = {cooperation_from_name(*m.cooperation)};
  if (m.fusion_level) c.fusion_levels = {fusion_level_from_name(*m.fusion_level)};
  if (m.overlap_combining) c.fusion_mode = fusion_mode_from_name(*m.overlap_combining);
  if (m.grid_res_m) c.grid_resolution_m = *m.grid_res_m;
  if (m.trials) c.trials = *m.trials;
  if (m.n_threads) c.n_threads = *m.n_threads;
  c.validate();
  return c;
}

std::string out_path(const RunManifest& m, const std::string& name) {
  fs::create_directories(m.out_dir);
  return (fs::path(m.out_dir) / name).string();
}

int cmd_validate(const RunManifest& m) {
  if (m.config_path.empty()) {
    std::cerr << "validate: --config is required\n";
    return 2;
  }
  load_run_config(m.config_path);
  std::cout << "config ok: " << m.config_path << "\n";
  return 0;
}

void write_spectrum_csv(const SpectrumResult& sp, const std::string& path,
                        std::uint64_t seed) {
  std::string out;
  out += "# seed=" + std::to_string(seed) + "\n";
  out += "grid_index,x_m,y_m,spectrum_value\n";
  const GridSpec& g = *sp.grid;
  for (std::size_t i = 0; i < sp.values.size(); ++i) {
    out += std::to_string(i) + "," + fmt_double(g.points[i].x) + "," +
           fmt_double(g.points[i].y) + "," + fmt_double(sp.values[i]) + "\n";
  }
  atomic_write(path, out);
}

void write_params_csv(const std::vector<ParamEstimate>& params,
                      const std::string& path, std::uint64_t seed) {
  std::string out;
  out += "# seed=" + std::to_string(seed) + "\n";
  out += "estimate_index,aoa_rad,aod_rad,delay_s,score\n";
  for (std::size_t i = 0; i < params.size(); ++i) {
    out += std::to_string(i) + "," + fmt_double(params[i].aoa_rad) + "," +
           fmt_double(params[i].aod_rad) + "," + fmt_double(params[i].delay_s) +
           "," + fmt_double(params[i].score) + "\n";
  }
  atomic_write(path, out);
}

void write_estimates_csv(const LocalizationResult& res,
                         const std::vector<Vec2>& truths, double penalty,
                         const std::string& path, std::uint64_t seed) {
  Assignment a = associate(res.estimates, truths, penalty);
  std::string out;
  out += "# seed=" + std::to_string(seed) + "\n";
  out += "target_index,truth_x_m,truth_y_m,est_x_m,est_y_m,error_m\n";
  std::vector<bool> used(res.estimates.size(), false);
  for (std::size_t t = 0; t < truths.size(); ++t) {
    out += std::to_string(t) + "," + fmt_double(truths[t].x) + "," +
           fmt_double(truths[t].y) + ",";
    if (a.match[t] >= 0) {
      const Vec2& e = res.estimates[static_cast<std::size_t>(a.match[t])];
      used[static_cast<std::size_t>(a.match[t])] = true;
      out += fmt_double(e.x) + "," + fmt_double(e.y) + "," +
             fmt_double(std::min(dist(e, truths[t]), penalty)) + "\n";
    } else {
      out += ",," + fmt_double(penalty) + "\n";  // miss
    }
  }
  for (std::size_t i = 0; i < res.estimates.size(); ++i) {
    if (used[i]) continue;  // estimates not matched to any truth
    out += "-1,,," + fmt_double(res.estimates[i].x) + "," +
           fmt_double(res.estimates[i].y) + ",\n";
  }
  atomic_write(path, out);
}

int cmd_map(const RunManifest& m) {
  RunConfig c = effective_config(m);
  double noise = m.noise_dbm_hz ? *m.noise_dbm_hz : c.scenario.noise_psd_dbm_hz;

  for (Method method : c.methods) {
    for (Cooperation coop : c.cooperations) {
      ExperimentSpec spec = c.make_spec(method, coop, FusionLevel::SymbolLevel);
      Scenario sc = spec.scenario;
      sc.noise_psd_dbm_hz = noise;
      GridSpec grid = build_grid(spec.region, spec.grid_resolution_m, sc);
      std::vector<Vec2> truths;
      for (const Target& t : sc.targets) truths.push_back(t.pos);
      double penalty = std::sqrt(
          (spec.region.x1 - spec.region.x0) * (spec.region.x1 - spec.region.x0) +
          (spec.region.y1 - spec.region.y0) * (spec.region.y1 - spec.region.y0));

      auto side_tensor = [&](Side side) {
        return synthesize_echo(spec.system, sc, side, spec.symbol_index,
                               split_seed(spec.base_seed, static_cast<int>(side)),
                               spec.gain_mode);
      };
      FusedTensor cube;
      switch (coop) {
        case Cooperation::Cooperative:
          cube = fuse_symbol_level(side_tensor(Side::MbsRx),
                                   side_tensor(Side::MibsRx),
                                   spec.system.scs_ratio(), spec.fusion_mode);
          break;
        case Cooperation::MbsOnly:
          cube = sensing_view(side_tensor(Side::MbsRx));
          break;
        case Cooperation::MibsOnly:
          cube = sensing_view(side_tensor(Side::MibsRx));
          break;
      }

      std::string stem = "map_" + method_name(method) + "_" +
                         cooperation_name(coop);
      LocalizationResult res;
      if (method == Method::Gdft) {
        double sep = spec.locopts.min_separation_m > 0.0
                         ? spec.locopts.min_separation_m
                         : 2.0 * grid.resolution_m;
        SpectrumResult sp = gdft_spectrum(cube, grid, spec.n_threads);
        res = pick_peaks(sp, truths.size(), sep);
        write_spectrum_csv(sp, out_path(m, stem + "_spectrum.csv"),
                           spec.base_seed);
      } else {
        std::vector<ParamEstimate> params =
            method == Method::Dft3d
                ? dft3d_estimate(cube, truths.size(), spec.locopts.dft3d)
                : music3d_estimate(cube, truths.size(),
                                   spec.locopts.music_angle_grid,
                                   spec.locopts.music_delay_grid);
        write_params_csv(params, out_path(m, stem + "_params.csv"),
                         spec.base_seed);
        res = localize(method, cube, grid, truths.size(), sc.mbs_pos,
                       sc.mibs_pos, spec.locopts);
      }
      write_estimates_csv(res, truths, penalty,
                          out_path(m, stem + "_estimates.csv"), spec.base_seed);
      std::cout << stem << ": " << res.estimates.size() << "/" << truths.size()
                << " estimates written\n";
    }
  }
  return 0;
}

int cmd_sweep(const RunManifest& m) {
  RunConfig c = effective_config(m);
  EvalReport merged;
  for (Method method : c.methods) {
    for (Cooperation coop : c.cooperations) {
      for (FusionLevel fl : c.fusion_levels) {
        // fusion level only differentiates cooperative runs; skip duplicate
        // single-side cells when both levels are requested
        if (coop != Cooperation::Cooperative && fl != c.fusion_levels.front()) {
          continue;
        }
        ExperimentSpec spec = c.make_spec(method, coop, fl);
        EvalReport r = run_sweep(spec);
        for (CellResult& cell : r.cells) {
          if (!m.quiet) {
            std::printf(
                "%s %s %s %8.1f dBm/Hz: smse %10.3f m, %zu/%zu failed\n",
                method_name(cell.method).c_str(),
                cooperation_name(cell.cooperation).c_str(),
                fusion_level_name(cell.fusion).c_str(), cell.noise_dbm_hz,
                cell.smse_m, cell.failures, cell.trials);
          }
          merged.cells.push_back(std::move(cell));
        }
      }
    }
  }
  write_report_csv(merged, out_path(m, "report.csv"), c.base_seed,
                   m.stable_timing);
  write_trial_records(merged, out_path(m, "records.jsonl"), c.base_seed);
  bool ok = report_within_failure_bound(merged, c.max_failure_rate);
  if (!ok) {
    std::cerr << "sweep: failure rate bound " << c.max_failure_rate
              << " exceeded in at least one cell\n";
  }
  return ok ? 0 : 1;
}

int cmd_bench(const RunManifest& m) {
  if (m.bench_grid_sizes.empty()) {
    std::cerr << "bench: no grid sizes requested\n";
    return 2;
  }
  for (std::size_t g : m.bench_grid_sizes) {
    if (g == 0) {
      std::cerr << "bench: grid size must be positive\n";
      return 2;
    }
  }
  RunConfig c = effective_config(m);
  ExperimentSpec spec = c.make_spec(Method::Gdft, Cooperation::Cooperative,
                                    FusionLevel::SymbolLevel);
  Scenario sc = spec.scenario;

  EchoTensor y_mbs = synthesize_echo(spec.system, sc, Side::MbsRx, 0,
                                     split_seed(c.base_seed, 0), c.gain_mode);
  EchoTensor y_mibs = synthesize_echo(spec.system, sc, Side::MibsRx, 0,
                                      split_seed(c.base_seed, 1), c.gain_mode);
  FusedTensor cube = fuse_symbol_level(y_mbs, y_mibs, spec.system.scs_ratio(),
                                       c.fusion_mode);

  // master grid fine enough to slice the requested point counts from
  std::size_t want = *std::max_element(m.bench_grid_sizes.begin(),
                                       m.bench_grid_sizes.end());
  double res = spec.grid_resolution_m;
  GridSpec master = build_grid(spec.region, res, sc);
  while (master.n_grid() < want && res > 1e-3) {
    res /= 2.0;
    master = build_grid(spec.region, res, sc);
  }
  if (master.n_grid() < want) {
    std::cerr << "bench: cannot build " << want << " grid points\n";
    return 2;
  }

  auto time_median = [&](const std::function<void()>& fn) {
    std::vector<double> times;
    for (std::size_t r = 0; r < std::max<std::size_t>(m.bench_repeats, 1); ++r) {
      auto t0 = std::chrono::steady_clock::now();
      fn();
      times.push_back(std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count());
    }
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
  };

  std::string out;
  out += "# seed=" + std::to_string(c.base_seed) + "\n";
  out += "method,params,wall_time_s\n";
  volatile double sink = 0.0;  // keep timed results observable

  for (std::size_t g : m.bench_grid_sizes) {
    GridSpec sub;
    sub.region = master.region;
    sub.resolution_m = master.resolution_m;
    sub.points.assign(master.points.begin(), master.points.begin() + g);
    sub.aoa_rad.assign(master.aoa_rad.begin(), master.aoa_rad.begin() + g);
    sub.aod_rad.assign(master.aod_rad.begin(), master.aod_rad.begin() + g);
    sub.delay_s.assign(master.delay_s.begin(), master.delay_s.begin() + g);
    double t = time_median([&]() {
      SpectrumResult sp = gdft_spectrum(cube, sub, c.n_threads);
      sink = sink + sp.values.back();
    });
    out += "gdft,g=" + std::to_string(g) + ";n=" + std::to_string(cube.data.dim0()) +
           ";bins=" + std::to_string(cube.n_bins()) + "," + fmt_double(t) + "\n";
  }

  std::size_t l = sc.targets.size();
  double t_dft = time_median([&]() {
    auto est = dft3d_estimate(cube, l, spec.locopts.dft3d);
    sink = sink + est.front().delay_s;
  });
  out += "dft3d,n=" + std::to_string(cube.data.dim0()) + ";bins=" +
         std::to_string(cube.n_bins()) + "," + fmt_double(t_dft) + "\n";
  double t_music = time_median([&]() {
    auto est = music3d_estimate(cube, l, c.music_angle_grid, c.music_delay_grid);
    sink = sink + est.front().delay_s;
  });
  out += "music3d,n=" + std::to_string(cube.data.dim0()) + ";bins=" +
         std::to_string(cube.n_bins()) + ";psi=" +
         std::to_string(c.music_angle_grid) + ";phi=" +
         std::to_string(c.music_delay_grid) + "," + fmt_double(t_music) + "\n";

  atomic_write(out_path(m, "bench.csv"), out);
  std::cout << "bench.csv written (" << m.bench_grid_sizes.size() + 2
            << " rows)\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"bistatic cooperative sensing simulator"};
  app.require_subcommand(1);

  RunManifest m;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", m.config_path, "JSON run manifest");
    sub->add_option("--out", m.out_dir, "output directory");
    sub->add_option("--seed", m.seed, "base seed override");
    sub->add_option("--noise-dbm-hz", m.noise_dbm_hz,
                    "noise PSD override; replaces the sweep");
    sub->add_option("--method", m.method, "gdft | dft3d | music3d");
    sub->add_option("--cooperation", m.cooperation,
                    "cooperative | mbs_only | mibs_only");
    sub->add_option("--fusion-mode", m.fusion_level, "symbol | data");
    sub->add_option("--overlap-combining", m.overlap_combining,
                    "normalized | array_scaled");
    sub->add_option("--grid-res-m", m.grid_res_m, "search grid resolution");
    sub->add_option("--trials", m.trials, "Monte-Carlo trials per cell");
    sub->add_option("--threads", m.n_threads, "worker threads");
    sub->add_flag("--full-scale", m.full_scale,
                  "use the reference full-scale defaults");
    sub->add_flag("--stable-timing", m.stable_timing,
                  "zero timing columns for byte-reproducible outputs");
    sub->add_flag("--quiet", m.quiet, "suppress per-cell progress lines");
  };

  CLI::App* c_map = app.add_subcommand("map", "single-trial spectrum heat maps");
  CLI::App* c_sweep = app.add_subcommand("sweep", "Monte-Carlo noise sweep");
  CLI::App* c_bench = app.add_subcommand("bench", "estimator timing benchmark");
  CLI::App* c_val = app.add_subcommand("validate", "check a config file");
  for (CLI::App* sub : {c_map, c_sweep, c_bench, c_val}) add_common(sub);
  c_bench->add_option("--bench-g", m.bench_grid_sizes,
                      "grid point counts to time");
  c_bench->add_option("--repeats", m.bench_repeats, "timing repeats");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (c_map->parsed()) {
      m.command = "map";
      return cmd_map(m);
    }
    if (c_sweep->parsed()) {
      m.command = "sweep";
      return cmd_sweep(m);
    }
    if (c_bench->parsed()) {
      m.command = "bench";
      return cmd_bench(m);
    }
    m.command = "validate";
    return cmd_validate(m);
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace bisense
