#include "bisense/config.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace bisense {

using nlohmann::json;

namespace {

[[noreturn]] void bad_key(const std::string& section, const std::string& key,
                          const std::string& why) {
  throw std::invalid_argument("config key '" + section + "." + key + "' " +
                              why);
}

double need_num(const json& v, const std::string& section,
                const std::string& key) {
  if (!v.is_number()) bad_key(section, key, "must be a number");
  return v.get<double>();
}

std::size_t need_count(const json& v, const std::string& section,
                       const std::string& key) {
  if (!v.is_number_unsigned()) {
    bad_key(section, key, "must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::string need_str(const json& v, const std::string& section,
                     const std::string& key) {
  if (!v.is_string()) bad_key(section, key, "must be a string");
  return v.get<std::string>();
}

Vec2 need_vec2(const json& v, const std::string& section,
               const std::string& key) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() ||
      !v[1].is_number()) {
    bad_key(section, key, "must be [x, y]");
  }
  return Vec2{v[0].get<double>(), v[1].get<double>()};
}

void parse_system(const json& j, SystemConfig& s) {
  for (const auto& [key, val] : j.items()) {
    if (key == "n_subcarriers_mbs") s.n_subcarriers_mbs = need_count(val, "system", key);
    else if (key == "n_subcarriers_mibs") s.n_subcarriers_mibs = need_count(val, "system", key);
    else if (key == "n_symbols") s.n_symbols = need_count(val, "system", key);
    else if (key == "n_rx") s.n_rx = need_count(val, "system", key);
    else if (key == "n_tx") s.n_tx = need_count(val, "system", key);
    else if (key == "tx_power_mbs_dbm") s.tx_power_mbs_dbm = need_num(val, "system", key);
    else if (key == "tx_power_mibs_dbm") s.tx_power_mibs_dbm = need_num(val, "system", key);
    else if (key == "carrier_freq_mbs_hz") s.carrier_freq_mbs_hz = need_num(val, "system", key);
    else if (key == "carrier_freq_mibs_hz") s.carrier_freq_mibs_hz = need_num(val, "system", key);
    else if (key == "scs_mbs_hz") s.scs_mbs_hz = need_num(val, "system", key);
    else if (key == "scs_mibs_hz") s.scs_mibs_hz = need_num(val, "system", key);
    else if (key == "cp_duration_s") s.cp_duration_s = need_num(val, "system", key);
    else bad_key("system", key, "is not a recognised key");
  }
}

void parse_target(const json& j, Target& t, const std::string& section) {
  bool have_pos = false;
  for (const auto& [key, val] : j.items()) {
    if (key == "pos") {
      t.pos = need_vec2(val, section, key);
      have_pos = true;
    } else if (key == "speed_mps") {
      t.speed_mps = need_num(val, section, key);
    } else if (key == "heading_rad") {
      t.heading_rad = need_num(val, section, key);
    } else if (key == "reflectivity") {
      if (!val.is_array() || val.size() != 2) {
        bad_key(section, key, "must be [re, im]");
      }
      t.reflectivity = {val[0].get<double>(), val[1].get<double>()};
    } else {
      bad_key(section, key, "is not a recognised key");
    }
  }
  if (!have_pos) bad_key(section, "pos", "is required");
}

void parse_scenario(const json& j, Scenario& s) {
  for (const auto& [key, val] : j.items()) {
    if (key == "mbs_pos") s.mbs_pos = need_vec2(val, "scenario", key);
    else if (key == "mibs_pos") s.mibs_pos = need_vec2(val, "scenario", key);
    else if (key == "noise_psd_dbm_hz") s.noise_psd_dbm_hz = need_num(val, "scenario", key);
    else if (key == "targets") {
      if (!val.is_array()) bad_key("scenario", key, "must be an array");
      s.targets.clear();
      for (std::size_t i = 0; i < val.size(); ++i) {
        Target t;
        parse_target(val[i], t, "scenario.targets[" + std::to_string(i) + "]");
        s.targets.push_back(t);
      }
    } else {
      bad_key("scenario", key, "is not a recognised key");
    }
  }
}

void parse_grid(const json& j, RunConfig& c) {
  for (const auto& [key, val] : j.items()) {
    if (key == "region") {
      if (!val.is_array() || val.size() != 4) {
        bad_key("grid", key, "must be [x0, y0, x1, y1]");
      }
      c.region = Rect{val[0].get<double>(), val[1].get<double>(),
                      val[2].get<double>(), val[3].get<double>()};
    } else if (key == "resolution_m") {
      c.grid_resolution_m = need_num(val, "grid", key);
    } else {
      bad_key("grid", key, "is not a recognised key");
    }
  }
}

void parse_eval(const json& j, RunConfig& c) {
  for (const auto& [key, val] : j.items()) {
    if (key == "noise_sweep_dbm_hz") {
      if (!val.is_array() || val.empty()) {
        bad_key("eval", key, "must be a non-empty array of numbers");
      }
      c.noise_sweep_dbm_hz.clear();
      for (const auto& x : val) {
        c.noise_sweep_dbm_hz.push_back(need_num(x, "eval", key));
      }
    } else if (key == "methods") {
      if (!val.is_array() || val.empty()) {
        bad_key("eval", key, "must be a non-empty array");
      }
      c.methods.clear();
      for (const auto& x : val) {
        c.methods.push_back(method_from_name(need_str(x, "eval", key)));
      }
    } else if (key == "cooperations") {
      if (!val.is_array() || val.empty()) {
        bad_key("eval", key, "must be a non-empty array");
      }
      c.cooperations.clear();
      for (const auto& x : val) {
        c.cooperations.push_back(
            cooperation_from_name(need_str(x, "eval", key)));
      }
    } else if (key == "fusion_levels") {
      if (!val.is_array() || val.empty()) {
        bad_key("eval", key, "must be a non-empty array");
      }
      c.fusion_levels.clear();
      for (const auto& x : val) {
        c.fusion_levels.push_back(
            fusion_level_from_name(need_str(x, "eval", key)));
      }
    } else if (key == "trials") {
      c.trials = need_count(val, "eval", key);
    } else if (key == "base_seed") {
      c.base_seed = static_cast<std::uint64_t>(need_count(val, "eval", key));
    } else if (key == "gain_mode") {
      c.gain_mode = gain_mode_from_name(need_str(val, "eval", key));
    } else if (key == "fusion_mode") {
      c.fusion_mode = fusion_mode_from_name(need_str(val, "eval", key));
    } else if (key == "min_separation_m") {
      c.min_separation_m = need_num(val, "eval", key);
    } else if (key == "music_angle_grid") {
      c.music_angle_grid = need_count(val, "eval", key);
    } else if (key == "music_delay_grid") {
      c.music_delay_grid = need_count(val, "eval", key);
    } else if (key == "n_threads") {
      c.n_threads = static_cast<int>(need_count(val, "eval", key));
    } else if (key == "max_failure_rate") {
      c.max_failure_rate = need_num(val, "eval", key);
    } else {
      bad_key("eval", key, "is not a recognised key");
    }
  }
}

}  // namespace

std::string gain_mode_name(GainMode m) {
  return m == GainMode::Unit ? "unit" : "bistatic_radar";
}

GainMode gain_mode_from_name(const std::string& name) {
  if (name == "unit") return GainMode::Unit;
  if (name == "bistatic_radar") return GainMode::BistaticRadar;
  throw std::invalid_argument("unknown gain mode '" + name +
                              "' (expected unit or bistatic_radar)");
}

std::string fusion_mode_name(FusionMode m) {
  return m == FusionMode::ArrayScaled ? "array_scaled" : "normalized";
}

FusionMode fusion_mode_from_name(const std::string& name) {
  if (name == "array_scaled") return FusionMode::ArrayScaled;
  if (name == "normalized") return FusionMode::Normalized;
  throw std::invalid_argument("unknown fusion mode '" + name +
                              "' (expected normalized or array_scaled)");
}

void RunConfig::validate() const {
  system.validate();
  scenario.validate();
  if (scenario.targets.empty()) {
    throw std::invalid_argument("config needs at least one target");
  }
  if (noise_sweep_dbm_hz.empty()) {
    throw std::invalid_argument("eval.noise_sweep_dbm_hz must not be empty");
  }
  if (trials == 0) throw std::invalid_argument("eval.trials must be positive");
  if (grid_resolution_m <= 0.0) {
    throw std::invalid_argument("grid.resolution_m must be positive");
  }
  if (max_failure_rate < 0.0 || max_failure_rate > 1.0) {
    throw std::invalid_argument("eval.max_failure_rate must lie in [0, 1]");
  }
  if (n_threads < 1) {
    throw std::invalid_argument("eval.n_threads must be at least 1");
  }
  // the grid must be constructible against this scenario
  build_grid(region, grid_resolution_m, scenario);
}

ExperimentSpec RunConfig::make_spec(Method m, Cooperation c,
                                    FusionLevel f) const {
  ExperimentSpec s;
  s.system = system;
  s.scenario = scenario;
  s.method = m;
  s.cooperation = c;
  s.fusion = f;
  s.noise_sweep_dbm_hz = noise_sweep_dbm_hz;
  s.trials = trials;
  s.base_seed = base_seed;
  s.region = region;
  s.grid_resolution_m = grid_resolution_m;
  s.gain_mode = gain_mode;
  s.fusion_mode = fusion_mode;
  s.locopts.min_separation_m = min_separation_m;
  s.locopts.music_angle_grid = music_angle_grid;
  s.locopts.music_delay_grid = music_delay_grid;
  s.n_threads = n_threads;
  s.max_failure_rate = max_failure_rate;
  return s;
}

RunConfig default_run_config(bool full_scale) {
  RunConfig c;
  if (full_scale) {
    // reference parameter set
    c.system.n_subcarriers_mbs = 512;
    c.system.n_subcarriers_mibs = 512;
    c.system.n_symbols = 128;
    c.system.n_rx = 64;
    c.system.n_tx = 64;
    c.system.tx_power_mbs_dbm = 46.0;
    c.system.tx_power_mibs_dbm = 27.0;
    c.system.carrier_freq_mbs_hz = 2.6e9;
    c.system.carrier_freq_mibs_hz = 26.0e9;
    c.system.scs_mbs_hz = 30.0e3;
    c.system.scs_mibs_hz = 120.0e3;
    c.scenario.targets = {
        Target{{200.0, 30.0}, 10.0, 0.0, {1.0, 0.0}},
        Target{{250.0, 60.0}, 10.0, 0.0, {1.0, 0.0}},
        Target{{300.0, 80.0}, 10.0, 0.0, {1.0, 0.0}},
    };
    c.system.cp_duration_s = 2.34e-6;
    c.grid_resolution_m = 1.0;
  } else {
    // CI scale: small arrays and subcarrier counts, spacing ratio 2. Wide
    // subcarrier spacing keeps the fused lattice span (and with it the
    // delay resolution) useful despite the short subcarrier count; at 8
    // antennas the angle axes barely separate targets, so the delay axis
    // has to. The transmit powers keep every link comfortably above noise
    // over the clean half of the default sweep (so medians there reflect
    // each mode's resolution floor, not noise) while the weaker high-band
    // link degrades visibly at the noisy end; the macro power also keeps
    // the low-band contribution dominant inside the fused lattice, which
    // is what pushes the fused floor below the single-receiver floors.
    // The default targets spread across angle-of-departure and delay so
    // the set is resolvable at this aperture; peak separation matches.
    c.system.n_subcarriers_mbs = 64;
    c.system.n_subcarriers_mibs = 64;
    c.system.n_symbols = 16;
    c.system.n_rx = 8;
    c.system.n_tx = 8;
    c.system.tx_power_mbs_dbm = 36.0;
    c.system.tx_power_mibs_dbm = 60.0;
    c.system.carrier_freq_mbs_hz = 2.6e9;
    c.system.carrier_freq_mibs_hz = 26.0e9;
    c.system.scs_mbs_hz = 240.0e3;
    c.system.scs_mibs_hz = 480.0e3;
    c.scenario.targets = {
        Target{{280.6, 29.6}, 10.0, 0.0, {1.0, 0.0}},
        Target{{132.4, 56.7}, 10.0, 0.0, {1.0, 0.0}},
        Target{{284.4, 76.0}, 10.0, 0.0, {1.0, 0.0}},
    };
    c.system.cp_duration_s = 0.59e-6;
    c.grid_resolution_m = 5.0;
    c.min_separation_m = 30.0;
  }
  c.scenario.mbs_pos = {0.0, 0.0};
  c.scenario.mibs_pos = {300.0, 0.0};
  c.scenario.noise_psd_dbm_hz = -175.0;
  c.region = Rect{0.0, 10.0, 300.0, 100.0};
  c.noise_sweep_dbm_hz = {-175.0, -165.0, -155.0, -145.0, -135.0};
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") +
                                e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config root must be an object");

  RunConfig c = default_run_config(false);
  for (const auto& [key, val] : j.items()) {
    if (key == "system") parse_system(val, c.system);
    else if (key == "scenario") parse_scenario(val, c.scenario);
    else if (key == "grid") parse_grid(val, c);
    else if (key == "eval") parse_eval(val, c);
    else bad_key("(root)", key, "is not a recognised section");
  }
  c.validate();
  return c;
}

}  // namespace bisense
