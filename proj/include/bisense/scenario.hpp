#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace bisense {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s, exact

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double dist(const Vec2& a, const Vec2& b) {
  double dx = a.x - b.x, dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

// Per-BS transmit parameters. Each receiver sees the *other* BS's waveform,
// so e.g. the tensor captured at the MBS uses the MiBS subcarrier count and
// spacing.
struct SystemConfig {
  std::size_t n_subcarriers_mbs = 512;   // MBS-transmitted waveform
  std::size_t n_subcarriers_mibs = 512;  // MiBS-transmitted waveform
  std::size_t n_symbols = 128;
  std::size_t n_rx = 64;
  std::size_t n_tx = 64;
  double tx_power_mbs_dbm = 46.0;
  double tx_power_mibs_dbm = 27.0;
  double carrier_freq_mbs_hz = 2.6e9;
  double carrier_freq_mibs_hz = 26.0e9;
  double scs_mbs_hz = 30.0e3;
  double scs_mibs_hz = 120.0e3;
  double cp_duration_s = 2.34e-6;

  // Subcarrier spacing ratio Q = scs_mibs / scs_mbs; must be a positive
  // integer for the fused bin lattice to exist.
  std::size_t scs_ratio() const;
  void validate() const;  // throws std::invalid_argument
};

struct Target {
  Vec2 pos;
  double speed_mps = 0.0;
  double heading_rad = 0.0;  // direction of motion in the global frame
  std::complex<double> reflectivity = {1.0, 0.0};
};

struct Scenario {
  Vec2 mbs_pos{0.0, 0.0};
  Vec2 mibs_pos{300.0, 0.0};
  std::vector<Target> targets;
  // Noise PSD at each receiver; values <= -300 dBm/Hz disable noise.
  double noise_psd_dbm_hz = -175.0;

  void validate() const;
  bool noise_enabled() const { return noise_psd_dbm_hz > -300.0; }
};

// Angles follow the broadside convention: both uniform linear arrays lie
// along the global x axis and look toward +y, so sin(angle) is the
// normalised x offset of the target from the BS. Targets must sit strictly
// in front of both arrays (y above both BS y coordinates).
struct BistaticParams {
  double aoa_rad = 0.0;    // at the MBS
  double aod_rad = 0.0;    // at the MiBS
  double delay_s = 0.0;    // (|target-MBS| + |target-MiBS|) / c0
};

BistaticParams bistatic_geometry(const Vec2& target, const Vec2& mbs,
                                 const Vec2& mibs);

// Bistatic Doppler for a target moving with the given speed/heading;
// aoa/aod are the broadside angles from bistatic_geometry.
double doppler_shift(const Target& t, double aoa_rad, double aod_rad,
                     double carrier_hz);

struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
};

// Search grid with per-point bistatic parameters precomputed against a fixed
// BS pair. points[g], aoa[g], aod[g], delay[g] stay index-aligned.
struct GridSpec {
  std::vector<Vec2> points;
  std::vector<double> aoa_rad;
  std::vector<double> aod_rad;
  std::vector<double> delay_s;
  Rect region;
  double resolution_m = 0.0;

  std::size_t n_grid() const { return points.size(); }
};

// Lattice covers x0..x1 / y0..y1 inclusive at the given resolution, row-major
// with x fastest. Points without a valid bistatic geometry (coincident with a
// BS or not in front of both arrays) are dropped; an empty result throws.
GridSpec build_grid(const Rect& region, double resolution_m,
                    const Scenario& sc);

}  // namespace bisense
