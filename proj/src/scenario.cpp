#include "bisense/scenario.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bisense {

std::size_t SystemConfig::scs_ratio() const {
  if (scs_mbs_hz <= 0.0 || scs_mibs_hz <= 0.0) {
    throw std::invalid_argument("subcarrier spacings must be positive");
  }
  double q = scs_mibs_hz / scs_mbs_hz;
  double qr = std::round(q);
  if (qr < 1.0 || std::abs(q - qr) > 1e-9 * qr) {
    throw std::invalid_argument(
        "scs_mibs_hz / scs_mbs_hz must be a positive integer, got " +
        std::to_string(q));
  }
  return static_cast<std::size_t>(qr);
}

void SystemConfig::validate() const {
  if (n_subcarriers_mbs == 0 || n_subcarriers_mibs == 0) {
    throw std::invalid_argument("subcarrier counts must be positive");
  }
  if (n_symbols == 0) throw std::invalid_argument("n_symbols must be positive");
  if (n_rx == 0 || n_tx == 0) {
    throw std::invalid_argument("antenna counts must be positive");
  }
  if (carrier_freq_mbs_hz <= 0.0 || carrier_freq_mibs_hz <= 0.0) {
    throw std::invalid_argument("carrier frequencies must be positive");
  }
  if (cp_duration_s < 0.0) {
    throw std::invalid_argument("cp_duration_s must be non-negative");
  }
  scs_ratio();
}

void Scenario::validate() const {
  if (mbs_pos.x == mibs_pos.x && mbs_pos.y == mibs_pos.y) {
    throw std::invalid_argument("BS positions must differ");
  }
  for (const Target& t : targets) {
    bistatic_geometry(t.pos, mbs_pos, mibs_pos);  // throws if degenerate
    if (t.speed_mps < 0.0) {
      throw std::invalid_argument("target speed must be non-negative");
    }
  }
}

BistaticParams bistatic_geometry(const Vec2& target, const Vec2& mbs,
                                 const Vec2& mibs) {
  double d1 = dist(target, mbs);
  double d2 = dist(target, mibs);
  if (d1 == 0.0 || d2 == 0.0) {
    throw std::domain_error("target coincides with a BS");
  }
  if (target.y <= mbs.y || target.y <= mibs.y) {
    throw std::domain_error("target must be in front of both arrays");
  }
  BistaticParams p;
  p.aoa_rad = std::asin((target.x - mbs.x) / d1);
  p.aod_rad = std::asin((target.x - mibs.x) / d2);
  p.delay_s = (d1 + d2) / kSpeedOfLight;
  return p;
}

double doppler_shift(const Target& t, double aoa_rad, double aod_rad,
                     double carrier_hz) {
  double s = -t.speed_mps * carrier_hz / kSpeedOfLight;
  return s * (std::cos(t.heading_rad - aoa_rad) +
              std::cos(t.heading_rad - aod_rad));
}

GridSpec build_grid(const Rect& region, double resolution_m,
                    const Scenario& sc) {
  if (resolution_m <= 0.0) {
    throw std::invalid_argument("grid resolution must be positive");
  }
  if (region.x1 < region.x0 || region.y1 < region.y0) {
    throw std::invalid_argument("grid region is inverted");
  }
  // Inclusive endpoint count with a tolerance so e.g. [0,300] at 10 m gives
  // 31 columns.
  auto lattice_count = [&](double lo, double hi) {
    return static_cast<std::size_t>(
               std::floor((hi - lo) / resolution_m + 1e-9)) + 1;
  };
  std::size_t nx = lattice_count(region.x0, region.x1);
  std::size_t ny = lattice_count(region.y0, region.y1);

  GridSpec g;
  g.region = region;
  g.resolution_m = resolution_m;
  g.points.reserve(nx * ny);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      Vec2 p{region.x0 + static_cast<double>(ix) * resolution_m,
             region.y0 + static_cast<double>(iy) * resolution_m};
      try {
        BistaticParams bp = bistatic_geometry(p, sc.mbs_pos, sc.mibs_pos);
        g.points.push_back(p);
        g.aoa_rad.push_back(bp.aoa_rad);
        g.aod_rad.push_back(bp.aod_rad);
        g.delay_s.push_back(bp.delay_s);
      } catch (const std::domain_error&) {
        // point has no valid geometry against this BS pair; skip it
      }
    }
  }
  if (g.points.empty()) {
    throw std::invalid_argument("grid region contains no usable points");
  }
  return g;
}

}  // namespace bisense
