#include "bisense/estimators.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

#include "bisense/parallel.hpp"

namespace bisense {

namespace {

// FFTW plan creation/destruction is not thread-safe; execution is.
std::mutex g_fftw_mutex;

struct PeakCell {
  std::size_t i0 = 0, i1 = 0, i2 = 0;
  double value = 0.0;
};

std::size_t circ_dist(std::size_t a, std::size_t b, std::size_t n) {
  std::size_t d = a > b ? a - b : b - a;
  return std::min(d, n - d);
}

// Strongest cells of a 3D magnitude field, suppressing the one-bin circular
// neighbourhood of every accepted cell. Ties resolve to the lower flat index.
std::vector<PeakCell> strongest_cells(const ComplexTensor3& x,
                                      std::size_t count) {
  const std::size_t n0 = x.dim0(), n1 = x.dim1(), n2 = x.dim2();
  std::vector<PeakCell> picked;
  picked.reserve(count);
  for (std::size_t round = 0; round < count; ++round) {
    bool found = false;
    PeakCell best;
    for (std::size_t i0 = 0; i0 < n0; ++i0) {
      for (std::size_t i1 = 0; i1 < n1; ++i1) {
        for (std::size_t i2 = 0; i2 < n2; ++i2) {
          double v = std::abs(x(i0, i1, i2));
          if (found && v <= best.value) continue;
          bool suppressed = false;
          for (const PeakCell& q : picked) {
            if (circ_dist(i0, q.i0, n0) <= 1 && circ_dist(i1, q.i1, n1) <= 1 &&
                circ_dist(i2, q.i2, n2) <= 1) {
              suppressed = true;
              break;
            }
          }
          if (suppressed) continue;
          best = PeakCell{i0, i1, i2, v};
          found = true;
        }
      }
    }
    if (!found) break;
    picked.push_back(best);
  }
  return picked;
}

double wrapped_sine(std::size_t bin, std::size_t n) {
  // bins at or above n/2 alias to negative sines; results lie in [-1, 1)
  auto b = static_cast<std::ptrdiff_t>(bin);
  if (2 * bin >= n) b -= static_cast<std::ptrdiff_t>(n);
  return 2.0 * static_cast<double>(b) / static_cast<double>(n);
}

// Indices of up to `count` tallest local maxima of a 1D curve, tallest first;
// pads with the tallest remaining samples if the curve has too few maxima.
std::vector<std::size_t> top_local_maxima(const std::vector<double>& p,
                                          std::size_t count) {
  const std::size_t n = p.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
  auto is_peak = [&](std::size_t i) {
    bool left = (i == 0) || p[i] > p[i - 1];
    bool right = (i + 1 == n) || p[i] >= p[i + 1];
    return left && right;
  };
  std::vector<std::size_t> out;
  for (std::size_t i : order) {
    if (out.size() == count) return out;
    if (is_peak(i)) out.push_back(i);
  }
  for (std::size_t i : order) {
    if (out.size() == count) break;
    if (std::find(out.begin(), out.end(), i) == out.end()) out.push_back(i);
  }
  return out;
}

Eigen::MatrixXcd noise_subspace(const Eigen::MatrixXcd& cov,
                                std::size_t n_targets, const char* axis) {
  const auto dim = static_cast<std::size_t>(cov.rows());
  if (n_targets >= dim) {
    throw std::invalid_argument(
        std::string("music3d: no noise subspace on the ") + axis +
        " axis (n_targets >= dimension)");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(cov);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("music3d: eigendecomposition failed");
  }
  // eigenvalues ascend, so the first dim - n_targets columns span the noise
  // subspace
  return eig.eigenvectors().leftCols(
      static_cast<Eigen::Index>(dim - n_targets));
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::Gdft: return "gdft";
    case Method::Dft3d: return "dft3d";
    case Method::Music3d: return "music3d";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  if (name == "gdft") return Method::Gdft;
  if (name == "dft3d") return Method::Dft3d;
  if (name == "music3d") return Method::Music3d;
  throw std::invalid_argument("unknown method '" + name +
                              "' (expected gdft, dft3d or music3d)");
}

SpectrumResult gdft_spectrum(const FusedTensor& d, const GridSpec& grid,
                             int n_threads) {
  const std::size_t n0 = d.data.dim0();
  const std::size_t n1 = d.data.dim1();
  const std::size_t nb = d.data.dim2();
  if (d.occupancy.size() != nb) {
    throw std::invalid_argument("fused tensor occupancy out of sync");
  }
  if (grid.n_grid() == 0) throw std::invalid_argument("empty grid");

  SpectrumResult r;
  r.grid = &grid;
  r.values.assign(grid.n_grid(), 0.0);

  parallel_for(grid.n_grid(), n_threads, [&](std::size_t g) {
    thread_local std::vector<cd> u, v, w;
    // template phases conjugate the synthesis model; empty bins are zero in
    // the data, so summing the whole row equals summing occupied bins only
    phase_ramp(u, -M_PI * std::sin(grid.aoa_rad[g]), n0 + 1);
    phase_ramp(v, -M_PI * std::sin(grid.aod_rad[g]), n1 + 1);
    phase_ramp(w, 2.0 * M_PI * d.scs_base_hz * grid.delay_s[g], nb);
    cd acc{0.0, 0.0};
    for (std::size_t k = 0; k < n0; ++k) {
      for (std::size_t p = 0; p < n1; ++p) {
        const cd* row = &d.data(k, p, 0);
        cd inner{0.0, 0.0};
        for (std::size_t n = 0; n < nb; ++n) inner += w[n] * row[n];
        acc += u[k + 1] * v[p + 1] * inner;
      }
    }
    r.values[g] = std::abs(acc);
  });
  return r;
}

LocalizationResult pick_peaks(const SpectrumResult& spectrum,
                              std::size_t n_targets, double min_separation_m) {
  if (spectrum.grid == nullptr ||
      spectrum.values.size() != spectrum.grid->n_grid()) {
    throw std::invalid_argument("spectrum does not match its grid");
  }
  if (min_separation_m < 0.0) {
    throw std::invalid_argument("min_separation must be non-negative");
  }
  const GridSpec& grid = *spectrum.grid;
  LocalizationResult out;
  out.method = Method::Gdft;
  out.n_requested = n_targets;

  std::vector<std::size_t> accepted;
  for (std::size_t round = 0; round < n_targets; ++round) {
    bool found = false;
    std::size_t arg = 0;
    double best = 0.0;
    for (std::size_t g = 0; g < spectrum.values.size(); ++g) {
      double vg = spectrum.values[g];
      if (found && vg <= best) continue;  // strict > keeps the lowest index
      bool ok = true;
      for (std::size_t a : accepted) {
        // an accepted index is never re-picked, even with zero separation
        if (a == g || dist(grid.points[g], grid.points[a]) < min_separation_m) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      best = vg;
      arg = g;
      found = true;
    }
    if (!found) break;
    accepted.push_back(arg);
    out.estimates.push_back(grid.points[arg]);
    out.peak_values.push_back(best);
  }
  return out;
}

std::vector<ParamEstimate> dft3d_estimate(const FusedTensor& t,
                                          std::size_t n_targets,
                                          const Dft3dOptions& opts) {
  const std::size_t n0 = t.data.dim0();
  const std::size_t n1 = t.data.dim1();
  const std::size_t nb = t.data.dim2();
  if (n_targets == 0) throw std::invalid_argument("n_targets must be positive");
  if (t.scs_base_hz <= 0.0) throw std::invalid_argument("bad bin spacing");

  ComplexTensor3 x = t.data;  // transformed in place
  auto* ptr = reinterpret_cast<fftw_complex*>(x.data());
  const int len0 = static_cast<int>(n0);
  const int len1 = static_cast<int>(n1);
  const int lenb = static_cast<int>(nb);
  {
    std::lock_guard<std::mutex> lock(g_fftw_mutex);
    // rx axis: forward DFT, vectors stride n1*nb, one per (p, n) pair
    fftw_plan p0 = fftw_plan_many_dft(
        1, &len0, static_cast<int>(n1 * nb), ptr, nullptr,
        static_cast<int>(n1 * nb), 1, ptr, nullptr,
        static_cast<int>(n1 * nb), 1, FFTW_FORWARD, FFTW_ESTIMATE);
    // tx axis: forward DFT, executed once per rx index
    fftw_plan p1 = fftw_plan_many_dft(
        1, &len1, static_cast<int>(nb), ptr, nullptr, static_cast<int>(nb), 1,
        ptr, nullptr, static_cast<int>(nb), 1, FFTW_FORWARD, FFTW_ESTIMATE);
    // bin axis: inverse DFT (scaled by 1/nb below)
    fftw_plan p2 = fftw_plan_many_dft(
        1, &lenb, static_cast<int>(n0 * n1), ptr, nullptr, 1,
        static_cast<int>(nb), ptr, nullptr, 1, static_cast<int>(nb),
        FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(p0);
    for (std::size_t k = 0; k < n0; ++k) {
      auto* rowk = reinterpret_cast<fftw_complex*>(&x(k, 0, 0));
      fftw_execute_dft(p1, rowk, rowk);
    }
    fftw_execute(p2);
    fftw_destroy_plan(p0);
    fftw_destroy_plan(p1);
    fftw_destroy_plan(p2);
  }
  const double inv_nb = 1.0 / static_cast<double>(nb);
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] *= inv_nb;

  double delay_denom = t.scs_base_hz * static_cast<double>(nb);
  if (opts.antenna_scaled_delay) delay_denom *= static_cast<double>(n0);

  std::vector<ParamEstimate> out;
  for (const PeakCell& c : strongest_cells(x, n_targets)) {
    ParamEstimate e;
    e.aoa_rad = std::asin(wrapped_sine(c.i0, n0));
    e.aod_rad = std::asin(wrapped_sine(c.i1, n1));
    e.delay_s = static_cast<double>(c.i2) / delay_denom;
    e.score = c.value;
    out.push_back(e);
  }
  return out;
}

std::vector<ParamEstimate> music3d_estimate(const FusedTensor& t,
                                            std::size_t n_targets,
                                            std::size_t n_angle_grid,
                                            std::size_t n_delay_grid) {
  const std::size_t n0 = t.data.dim0();
  const std::size_t n1 = t.data.dim1();
  const std::size_t nb = t.data.dim2();
  if (n_targets == 0) throw std::invalid_argument("n_targets must be positive");
  if (n_angle_grid < 2 || n_delay_grid < 2) {
    throw std::invalid_argument("search grids need at least two points");
  }

  std::vector<std::size_t> occ;
  for (std::size_t n = 0; n < nb; ++n) {
    if (bin_occupied(t.occupancy[n])) occ.push_back(n);
  }
  if (occ.empty()) throw std::invalid_argument("tensor has no occupied bins");

  using Eigen::Index;
  using Eigen::MatrixXcd;
  using Eigen::VectorXcd;

  // sample covariances along each axis; scaling is irrelevant to the
  // eigenvector split
  MatrixXcd cov_rx = MatrixXcd::Zero(static_cast<Index>(n0),
                                     static_cast<Index>(n0));
  MatrixXcd cov_tx = MatrixXcd::Zero(static_cast<Index>(n1),
                                     static_cast<Index>(n1));
  MatrixXcd cov_bin = MatrixXcd::Zero(static_cast<Index>(occ.size()),
                                      static_cast<Index>(occ.size()));
  VectorXcd snap_rx(static_cast<Index>(n0));
  VectorXcd snap_tx(static_cast<Index>(n1));
  VectorXcd snap_bin(static_cast<Index>(occ.size()));
  for (std::size_t p = 0; p < n1; ++p) {
    for (std::size_t d = 0; d < occ.size(); ++d) {
      for (std::size_t k = 0; k < n0; ++k) {
        snap_rx(static_cast<Index>(k)) = t.data(k, p, occ[d]);
      }
      cov_rx += snap_rx * snap_rx.adjoint();
    }
  }
  for (std::size_t k = 0; k < n0; ++k) {
    for (std::size_t d = 0; d < occ.size(); ++d) {
      for (std::size_t p = 0; p < n1; ++p) {
        snap_tx(static_cast<Index>(p)) = t.data(k, p, occ[d]);
      }
      cov_tx += snap_tx * snap_tx.adjoint();
    }
    for (std::size_t p = 0; p < n1; ++p) {
      for (std::size_t d = 0; d < occ.size(); ++d) {
        snap_bin(static_cast<Index>(d)) = t.data(k, p, occ[d]);
      }
      cov_bin += snap_bin * snap_bin.adjoint();
    }
  }

  MatrixXcd en_rx = noise_subspace(cov_rx, n_targets, "rx");
  MatrixXcd en_tx = noise_subspace(cov_tx, n_targets, "tx");
  MatrixXcd en_bin = noise_subspace(cov_bin, n_targets, "bin");

  auto angle_spectrum = [&](const MatrixXcd& en, std::size_t n_ant) {
    std::vector<double> ps(n_angle_grid);
    VectorXcd a(static_cast<Index>(n_ant));
    for (std::size_t i = 0; i < n_angle_grid; ++i) {
      double s = -1.0 + 2.0 * static_cast<double>(i) /
                            static_cast<double>(n_angle_grid - 1);
      for (std::size_t k = 0; k < n_ant; ++k) {
        a(static_cast<Index>(k)) =
            std::polar(1.0, M_PI * static_cast<double>(k + 1) * s);
      }
      double denom = (en.adjoint() * a).squaredNorm();
      ps[i] = 1.0 / std::max(denom, 1e-300);
    }
    return ps;
  };
  std::vector<double> ps_rx = angle_spectrum(en_rx, n0);
  std::vector<double> ps_tx = angle_spectrum(en_tx, n1);

  std::vector<double> ps_bin(n_delay_grid);
  {
    VectorXcd a(static_cast<Index>(occ.size()));
    for (std::size_t j = 0; j < n_delay_grid; ++j) {
      // delay grid spans one ambiguity period [0, 1/scs)
      double frac = static_cast<double>(j) / static_cast<double>(n_delay_grid);
      for (std::size_t d = 0; d < occ.size(); ++d) {
        a(static_cast<Index>(d)) =
            std::polar(1.0, -2.0 * M_PI * static_cast<double>(occ[d]) * frac);
      }
      double denom = (en_bin.adjoint() * a).squaredNorm();
      ps_bin[j] = 1.0 / std::max(denom, 1e-300);
    }
  }

  std::vector<std::size_t> pk_rx = top_local_maxima(ps_rx, n_targets);
  std::vector<std::size_t> pk_tx = top_local_maxima(ps_tx, n_targets);
  std::vector<std::size_t> pk_bin = top_local_maxima(ps_bin, n_targets);

  // associate across axes by descending peak height (the lists are already
  // tallest-first)
  std::size_t n_est = std::min({pk_rx.size(), pk_tx.size(), pk_bin.size()});
  std::vector<ParamEstimate> out;
  for (std::size_t i = 0; i < n_est; ++i) {
    ParamEstimate e;
    double s_rx = -1.0 + 2.0 * static_cast<double>(pk_rx[i]) /
                             static_cast<double>(n_angle_grid - 1);
    double s_tx = -1.0 + 2.0 * static_cast<double>(pk_tx[i]) /
                             static_cast<double>(n_angle_grid - 1);
    e.aoa_rad = std::asin(s_rx);
    e.aod_rad = std::asin(s_tx);
    e.delay_s = static_cast<double>(pk_bin[i]) /
                (t.scs_base_hz * static_cast<double>(n_delay_grid));
    e.score = ps_rx[pk_rx[i]];
    out.push_back(e);
  }
  return out;
}

Vec2 aoa_localize(const ParamEstimate& est, const Vec2& mbs,
                  const Vec2& mibs) {
  double base = dist(mbs, mibs);
  if (base <= 0.0) throw std::domain_error("BS positions coincide");
  double range_sum = est.delay_s * kSpeedOfLight;
  if (range_sum <= base) {
    throw std::domain_error("bistatic range does not exceed the baseline");
  }
  // broadside angle -> ray direction; arrays lie along x and look toward +y
  Vec2 dir{std::sin(est.aoa_rad), std::cos(est.aoa_rad)};
  Vec2 u{(mibs.x - mbs.x) / base, (mibs.y - mbs.y) / base};
  double cos_psi = dir.x * u.x + dir.y * u.y;
  double denom = range_sum - base * cos_psi;
  if (denom <= 0.0) {
    throw std::domain_error("AoA ray cannot intersect the bistatic ellipse");
  }
  double d_ro = (range_sum * range_sum - base * base) / (2.0 * denom);
  if (d_ro <= 0.0) throw std::domain_error("non-positive range solution");
  return Vec2{mbs.x + d_ro * dir.x, mbs.y + d_ro * dir.y};
}

LocalizationResult localize(Method method, const FusedTensor& t,
                            const GridSpec& grid, std::size_t n_targets,
                            const Vec2& mbs, const Vec2& mibs,
                            const LocalizeOptions& opts) {
  if (method == Method::Gdft) {
    double sep = opts.min_separation_m > 0.0 ? opts.min_separation_m
                                             : 2.0 * grid.resolution_m;
    SpectrumResult sp = gdft_spectrum(t, grid, opts.n_threads);
    LocalizationResult r = pick_peaks(sp, n_targets, sep);
    r.method = Method::Gdft;
    return r;
  }

  std::vector<ParamEstimate> params =
      method == Method::Dft3d
          ? dft3d_estimate(t, n_targets, opts.dft3d)
          : music3d_estimate(t, n_targets, opts.music_angle_grid,
                             opts.music_delay_grid);
  LocalizationResult r;
  r.method = method;
  r.n_requested = n_targets;
  for (const ParamEstimate& e : params) {
    Vec2 pos;
    try {
      pos = aoa_localize(e, mbs, mibs);
    } catch (const std::domain_error&) {
      continue;  // degenerate triple; report one estimate fewer
    }
    pos.x = std::clamp(pos.x, grid.region.x0, grid.region.x1);
    pos.y = std::clamp(pos.y, grid.region.y0, grid.region.y1);
    r.estimates.push_back(pos);
    r.peak_values.push_back(e.score);
  }
  return r;
}

}  // namespace bisense
