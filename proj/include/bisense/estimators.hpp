#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bisense/fusion.hpp"
#include "bisense/scenario.hpp"

namespace bisense {

enum class Method { Gdft, Dft3d, Music3d };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

// Matched-filter magnitude per grid point. `grid` aliases the caller's
// GridSpec and must outlive the result.
struct SpectrumResult {
  std::vector<double> values;
  const GridSpec* grid = nullptr;
};

// Evaluates the grid matched filter over the sensing cube: for each grid
// point g the template conjugates the steering phases and delay ramp of g and
// coherently sums every occupied bin; empty bins are exact zeros so they add
// nothing. Summation per point runs k-major, then tx index, then bin, making
// the result independent of n_threads (threads split whole grid points).
SpectrumResult gdft_spectrum(const FusedTensor& d, const GridSpec& grid,
                             int n_threads = 1);

struct LocalizationResult {
  std::vector<Vec2> estimates;
  std::vector<double> peak_values;  // aligned with estimates
  Method method = Method::Gdft;
  std::size_t n_requested = 0;

  bool complete() const { return estimates.size() == n_requested; }
};

// Greedy strongest-first peak extraction with a minimum Euclidean separation
// between accepted peaks. Ties in value resolve to the lower grid index.
// Returns fewer than n_targets peaks if suppression exhausts the grid.
LocalizationResult pick_peaks(const SpectrumResult& spectrum,
                              std::size_t n_targets, double min_separation_m);

// Raw parameter triple produced by the decoupled baselines. score is the
// peak height that ranked the triple; it is comparable only within one call.
struct ParamEstimate {
  double aoa_rad = 0.0;
  double aod_rad = 0.0;
  double delay_s = 0.0;
  double score = 0.0;
};

struct Dft3dOptions {
  // Delay variant whose bin-width denominator carries an extra antenna-count
  // factor; off (default) uses the dimensionally consistent
  // 1/(scs * n_bins) bin width.
  bool antenna_scaled_delay = false;
};

// Decoupled 3-axis DFT estimator: forward DFTs along both antenna axes, an
// inverse DFT along the bin axis, then the n_targets strongest cells (with a
// one-bin suppression neighbourhood) are mapped back to parameters:
//   sin(angle) = 2 * a / N with bins a >= N/2 wrapped negative, so estimated
//   sines lie in [-1, 1); delay = c / (scs * n_bins) for bin c.
std::vector<ParamEstimate> dft3d_estimate(const FusedTensor& t,
                                          std::size_t n_targets,
                                          const Dft3dOptions& opts = {});

// Three decoupled 1D MUSIC searches (rx axis -> AoA, tx axis -> AoD,
// occupied-bin axis -> delay), each over its own search grid; peaks are
// associated across axes by descending pseudo-spectrum height. Angle grids
// span sin in [-1, 1]; the delay grid spans one ambiguity period [0, 1/scs).
// Throws if n_targets is zero or leaves no noise subspace on some axis.
std::vector<ParamEstimate> music3d_estimate(const FusedTensor& t,
                                            std::size_t n_targets,
                                            std::size_t n_angle_grid,
                                            std::size_t n_delay_grid);

// Maps an (AoA, bistatic delay) pair to a position on the AoA ray from the
// MBS using the bistatic ellipse: with R = delay * c0, L the baseline length
// and psi the angle between the ray and the baseline,
//   d = (R^2 - L^2) / (2 * (R - L * cos(psi))).
// Throws when R <= L or the ray cannot intersect the ellipse (d <= 0).
Vec2 aoa_localize(const ParamEstimate& est, const Vec2& mbs, const Vec2& mibs);

struct LocalizeOptions {
  // <= 0 selects the default of two grid cells.
  double min_separation_m = 0.0;
  std::size_t music_angle_grid = 1024;
  std::size_t music_delay_grid = 2048;
  int n_threads = 1;
  Dft3dOptions dft3d;
};

// Uniform entry point: Gdft runs the grid matched filter + peak picking;
// the baselines estimate parameter triples and map them through
// aoa_localize, clamping results into the grid's rectangle so every estimate
// stays inside the search region. Baseline triples whose geometry is
// degenerate are dropped (the result then reports fewer than n_targets).
LocalizationResult localize(Method method, const FusedTensor& t,
                            const GridSpec& grid, std::size_t n_targets,
                            const Vec2& mbs, const Vec2& mibs,
                            const LocalizeOptions& opts = {});

}  // namespace bisense
