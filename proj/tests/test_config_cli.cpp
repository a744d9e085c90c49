#include <doctest.h>

#include <bisense/cli.hpp>
#include <bisense/config.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace bisense;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::trunc);
  REQUIRE(f.good());
  f << content;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Tiny but complete manifest used across the CLI tests.
const char* kTinyConfig = R"json({
  "system": {
    "n_subcarriers_mbs": 12, "n_subcarriers_mibs": 8,
    "n_symbols": 4, "n_rx": 3, "n_tx": 3,
    "scs_mbs_hz": 30e3, "scs_mibs_hz": 60e3
  },
  "scenario": {
    "targets": [{"pos": [200.0, 30.0]}],
    "noise_psd_dbm_hz": -400.0
  },
  "grid": {"region": [0, 10, 300, 100], "resolution_m": 10.0},
  "eval": {
    "noise_sweep_dbm_hz": [-400.0],
    "methods": ["gdft"],
    "cooperations": ["cooperative"],
    "trials": 2,
    "base_seed": 7,
    "gain_mode": "unit"
  }
})json";

}  // namespace

TEST_CASE("mode names round-trip") {
  for (GainMode g : {GainMode::Unit, GainMode::BistaticRadar}) {
    CHECK(gain_mode_from_name(gain_mode_name(g)) == g);
  }
  for (FusionMode f : {FusionMode::Normalized, FusionMode::ArrayScaled}) {
    CHECK(fusion_mode_from_name(fusion_mode_name(f)) == f);
  }
  CHECK_THROWS_AS((void)gain_mode_from_name("free_space"), std::invalid_argument);
  CHECK_THROWS_AS((void)fusion_mode_from_name("mean"), std::invalid_argument);
}

TEST_CASE("built-in defaults validate at both scales") {
  RunConfig ci = default_run_config(false);
  CHECK_NOTHROW(ci.validate());
  CHECK(ci.system.scs_ratio() == 2);
  CHECK(ci.system.n_rx == 8);

  RunConfig full = default_run_config(true);
  CHECK_NOTHROW(full.validate());
  CHECK(full.system.scs_ratio() == 4);
  CHECK(full.system.n_rx == 64);
  CHECK(full.scenario.targets.size() == 3);
  CHECK(full.grid_resolution_m == 1.0);
}

TEST_CASE("config loader applies values and keeps defaults elsewhere") {
  TempDir dir("bisense_cfg_test");
  write_file(dir.file("tiny.json"), kTinyConfig);
  RunConfig c = load_run_config(dir.file("tiny.json"));
  CHECK(c.system.n_subcarriers_mbs == 12);
  CHECK(c.system.n_rx == 3);
  CHECK(c.scenario.targets.size() == 1);
  CHECK(c.scenario.targets[0].pos.x == 200.0);
  CHECK(c.trials == 2);
  CHECK(c.base_seed == 7);
  CHECK(c.gain_mode == GainMode::Unit);
  CHECK(c.grid_resolution_m == 10.0);
  // untouched keys keep the CI defaults
  CHECK(c.system.carrier_freq_mibs_hz == 26.0e9);
  CHECK(c.fusion_mode == FusionMode::Normalized);
  CHECK(c.methods.size() == 1);
  CHECK(c.cooperations.size() == 1);
}

TEST_CASE("config loader names the offending key") {
  TempDir dir("bisense_cfg_err");
  auto expect_error = [&](const std::string& body, const std::string& needle) {
    write_file(dir.file("bad.json"), body);
    try {
      (void)load_run_config(dir.file("bad.json"));
      FAIL_CHECK("expected an exception for: " << body);
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  expect_error(R"({"system": {"n_antennas": 4}})", "system.n_antennas");
  expect_error(R"({"grid": {"step": 5}})", "grid.step");
  expect_error(R"({"eval": {"methods": ["fft"]}})", "fft");
  expect_error(R"({"turbo": true})", "turbo");
  expect_error(R"({"system": {"n_rx": -3}})", "system.n_rx");
  expect_error(R"({"scenario": {"targets": [{"speed_mps": 1}]}})", "pos");
  expect_error("{nope", "JSON");

  CHECK_THROWS_AS((void)load_run_config(dir.file("missing.json")),
                  std::runtime_error);
}

TEST_CASE("validate subcommand") {
  TempDir dir("bisense_cli_validate");
  write_file(dir.file("tiny.json"), kTinyConfig);
  CHECK(run_cli({"validate", "--config", dir.file("tiny.json")}) == 0);
  CHECK(run_cli({"validate"}) == 2);
  write_file(dir.file("bad.json"), R"({"system": {"bogus": 1}})");
  CHECK(run_cli({"validate", "--config", dir.file("bad.json")}) == 2);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(run_cli({}) == 2);
  CHECK(run_cli({"frobnicate"}) == 2);
  TempDir dir("bisense_cli_usage");
  write_file(dir.file("tiny.json"), kTinyConfig);
  CHECK(run_cli({"sweep", "--config", dir.file("tiny.json"), "--method",
                 "esprit", "--out", dir.file("out")}) == 2);
}

TEST_CASE("sweep subcommand writes report and records") {
  TempDir dir("bisense_cli_sweep");
  write_file(dir.file("tiny.json"), kTinyConfig);
  std::string out = dir.file("out");
  int rc = run_cli({"sweep", "--config", dir.file("tiny.json"), "--out", out,
                    "--stable-timing"});
  CHECK(rc == 0);
  std::string report = slurp(out + "/report.csv");
  CHECK(report.find("# base_seed=7") == 0);
  CHECK(report.find("noise_dbm_hz,method,cooperation,fusion,smse_m,trials,"
                    "failures,wall_time_s") != std::string::npos);
  CHECK(report.find("gdft,cooperative,symbol,0,2,0,0") != std::string::npos);
  CHECK(fs::exists(out + "/records.jsonl"));

  // byte-identical rerun, also under a different thread count; --quiet only
  // silences progress lines and must not change the files
  std::string out2 = dir.file("out2");
  CHECK(run_cli({"sweep", "--config", dir.file("tiny.json"), "--out", out2,
                 "--stable-timing", "--threads", "3", "--quiet"}) == 0);
  CHECK(slurp(out2 + "/report.csv") == report);
  CHECK(slurp(out2 + "/records.jsonl") == slurp(out + "/records.jsonl"));
}

TEST_CASE("flag overrides beat the config file") {
  TempDir dir("bisense_cli_override");
  write_file(dir.file("tiny.json"), kTinyConfig);
  std::string out = dir.file("out");
  int rc = run_cli({"sweep", "--config", dir.file("tiny.json"), "--out", out,
                    "--seed", "99", "--trials", "3", "--noise-dbm-hz", "-401",
                    "--stable-timing"});
  CHECK(rc == 0);
  std::string report = slurp(out + "/report.csv");
  CHECK(report.find("# base_seed=99") == 0);
  // the override replaces the whole sweep with the single level
  CHECK(report.find("-401,gdft") != std::string::npos);
  CHECK(report.find("-400,") == std::string::npos);
  CHECK(report.find(",3,0,0") != std::string::npos);
}

TEST_CASE("map subcommand writes spectrum and estimate tables") {
  TempDir dir("bisense_cli_map");
  write_file(dir.file("tiny.json"), kTinyConfig);
  std::string out = dir.file("out");
  int rc = run_cli({"map", "--config", dir.file("tiny.json"), "--out", out});
  CHECK(rc == 0);
  std::string spectrum = slurp(out + "/map_gdft_cooperative_spectrum.csv");
  CHECK(spectrum.find("# seed=7") == 0);
  CHECK(spectrum.find("grid_index,x_m,y_m,spectrum_value") != std::string::npos);
  std::string est = slurp(out + "/map_gdft_cooperative_estimates.csv");
  CHECK(est.find("target_index,truth_x_m,truth_y_m,est_x_m,est_y_m,error_m") !=
        std::string::npos);
  // noiseless on-node single target localises exactly
  CHECK(est.find("0,200,30,200,30,0") != std::string::npos);
}

TEST_CASE("map with a parametric baseline writes the parameter table") {
  TempDir dir("bisense_cli_map_dft");
  write_file(dir.file("tiny.json"), kTinyConfig);
  std::string out = dir.file("out");
  int rc = run_cli({"map", "--config", dir.file("tiny.json"), "--out", out,
                    "--method", "dft3d", "--cooperation", "mbs_only"});
  CHECK(rc == 0);
  std::string params = slurp(out + "/map_dft3d_mbs_only_params.csv");
  CHECK(params.find("estimate_index,aoa_rad,aod_rad,delay_s,score") !=
        std::string::npos);
  CHECK(fs::exists(out + "/map_dft3d_mbs_only_estimates.csv"));
  CHECK_FALSE(fs::exists(out + "/map_dft3d_mbs_only_spectrum.csv"));
}

TEST_CASE("bench subcommand times the estimators") {
  TempDir dir("bisense_cli_bench");
  write_file(dir.file("tiny.json"), kTinyConfig);
  std::string out = dir.file("out");
  int rc = run_cli({"bench", "--config", dir.file("tiny.json"), "--out", out,
                    "--bench-g", "20", "--bench-g", "40", "--repeats", "2"});
  CHECK(rc == 0);
  std::string bench = slurp(out + "/bench.csv");
  CHECK(bench.find("method,params,wall_time_s") != std::string::npos);
  CHECK(bench.find("gdft,g=20;") != std::string::npos);
  CHECK(bench.find("gdft,g=40;") != std::string::npos);
  CHECK(bench.find("dft3d,") != std::string::npos);
  CHECK(bench.find("music3d,") != std::string::npos);

  CHECK(run_cli({"bench", "--config", dir.file("tiny.json"), "--out", out,
                 "--bench-g", "0"}) == 2);
}
