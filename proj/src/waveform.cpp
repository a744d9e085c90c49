#include "bisense/waveform.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "bisense/rng.hpp"

namespace bisense {

namespace {

constexpr char kMagic[4] = {'B', 'S', 'T', 'X'};
constexpr std::uint32_t kVersion = 1;

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

}  // namespace

double noise_variance_w(double noise_psd_dbm_hz, double scs_hz) {
  if (noise_psd_dbm_hz <= -300.0) return 0.0;
  return dbm_to_watts(noise_psd_dbm_hz) * scs_hz;
}

std::vector<cd> steering_vector(double angle_rad, std::size_t n) {
  std::vector<cd> a(n);
  double s = std::sin(angle_rad);
  for (std::size_t k = 0; k < n; ++k) {
    a[k] = std::polar(1.0, M_PI * static_cast<double>(k + 1) * s);
  }
  return a;
}

cd path_gain(const Target& t, double d_tx_m, double d_rx_m,
             double wavelength_m, GainMode mode) {
  if (mode == GainMode::Unit) return t.reflectivity;
  if (d_tx_m <= 0.0 || d_rx_m <= 0.0) {
    throw std::domain_error("path_gain requires positive leg distances");
  }
  double sigma = std::norm(t.reflectivity);  // RCS in m^2
  double amp = std::sqrt(sigma) * wavelength_m /
               (std::pow(4.0 * M_PI, 1.5) * d_tx_m * d_rx_m);
  return {amp, 0.0};
}

EchoTensor synthesize_echo(const SystemConfig& cfg, const Scenario& sc,
                           Side side, std::size_t symbol_index,
                           std::uint64_t seed, GainMode mode) {
  cfg.validate();
  sc.validate();
  if (symbol_index >= cfg.n_symbols) {
    throw std::invalid_argument("symbol_index out of range");
  }

  const bool mbs_rx = (side == Side::MbsRx);
  // The receiver observes the other BS's transmit parameters.
  const double tx_power_w =
      dbm_to_watts(mbs_rx ? cfg.tx_power_mibs_dbm : cfg.tx_power_mbs_dbm);
  const double carrier_hz =
      mbs_rx ? cfg.carrier_freq_mibs_hz : cfg.carrier_freq_mbs_hz;
  const double scs = mbs_rx ? cfg.scs_mibs_hz : cfg.scs_mbs_hz;
  const std::size_t n_sc =
      mbs_rx ? cfg.n_subcarriers_mibs : cfg.n_subcarriers_mbs;
  const double sym_duration = 1.0 / scs + cfg.cp_duration_s;
  const double wavelength = kSpeedOfLight / carrier_hz;
  const double amp0 = std::sqrt(tx_power_w);

  EchoTensor out;
  out.data = ComplexTensor3(cfg.n_rx, cfg.n_tx, n_sc);
  out.scs_hz = scs;
  out.side = side;

  std::vector<cd> rx_steer, tx_steer, delay_ramp;
  for (const Target& t : sc.targets) {
    BistaticParams bp = bistatic_geometry(t.pos, sc.mbs_pos, sc.mibs_pos);
    double d_mbs = dist(t.pos, sc.mbs_pos);
    double d_mibs = dist(t.pos, sc.mibs_pos);
    // Transmit leg runs from the transmitting BS to the target.
    double d_tx = mbs_rx ? d_mibs : d_mbs;
    double d_rx = mbs_rx ? d_mbs : d_mibs;
    cd b = path_gain(t, d_tx, d_rx, wavelength, mode);

    double fd = doppler_shift(t, bp.aoa_rad, bp.aod_rad, carrier_hz);
    cd doppler = std::polar(
        1.0, 2.0 * M_PI * fd * static_cast<double>(symbol_index) * sym_duration);

    // Receive array sees the arrival angle at this BS; transmit array is the
    // other BS's departure angle. For MbsRx that is (aoa, aod); the MibsRx
    // tensor swaps them.
    double rx_angle = mbs_rx ? bp.aoa_rad : bp.aod_rad;
    double tx_angle = mbs_rx ? bp.aod_rad : bp.aoa_rad;

    rx_steer = steering_vector(rx_angle, cfg.n_rx);
    tx_steer = steering_vector(tx_angle, cfg.n_tx);
    phase_ramp(delay_ramp, -2.0 * M_PI * scs * bp.delay_s, n_sc);

    cd common = amp0 * b * doppler;
    for (std::size_t k = 0; k < cfg.n_rx; ++k) {
      for (std::size_t p = 0; p < cfg.n_tx; ++p) {
        cd c = common * rx_steer[k] * tx_steer[p];
        cd* row = &out.data(k, p, 0);
        for (std::size_t n = 0; n < n_sc; ++n) row[n] += c * delay_ramp[n];
      }
    }
  }

  double var = noise_variance_w(sc.noise_psd_dbm_hz, scs);
  if (var > 0.0) {
    Rng rng(seed);
    cd* d = out.data.data();
    for (std::size_t i = 0; i < out.data.size(); ++i) {
      d[i] += rng.complex_gaussian(var);
    }
  }
  return out;
}

EchoTensor cancel_communication(const ComplexTensor3& raw,
                                const SymbolGrid& symbols, double scs_hz,
                                Side side) {
  if (symbols.n_tx != raw.dim1() || symbols.n_sc != raw.dim2()) {
    throw std::invalid_argument("symbol grid shape mismatch");
  }
  for (const cd& s : symbols.x) {
    if (std::abs(s) == 0.0) {
      throw std::invalid_argument("cannot cancel a zero symbol");
    }
  }
  EchoTensor out;
  out.data = ComplexTensor3(raw.dim0(), raw.dim1(), raw.dim2());
  out.scs_hz = scs_hz;
  out.side = side;
  for (std::size_t k = 0; k < raw.dim0(); ++k) {
    for (std::size_t p = 0; p < raw.dim1(); ++p) {
      for (std::size_t n = 0; n < raw.dim2(); ++n) {
        out.data(k, p, n) = raw(k, p, n) / symbols.at(p, n);
      }
    }
  }
  return out;
}

void write_tensor(const EchoTensor& t, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f.write(kMagic, 4);
  auto put_u32 = [&](std::uint32_t v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(v));
  };
  auto put_u64 = [&](std::uint64_t v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(v));
  };
  put_u32(kVersion);
  put_u64(t.data.dim0());
  put_u64(t.data.dim1());
  put_u64(t.data.dim2());
  put_u32(static_cast<std::uint32_t>(t.side));
  f.write(reinterpret_cast<const char*>(&t.scs_hz), sizeof(double));
  // payload: interleaved re/im, row-major (k, p, n)
  f.write(reinterpret_cast<const char*>(t.data.data()),
          static_cast<std::streamsize>(t.data.size() * sizeof(cd)));
  if (!f) throw std::runtime_error("short write to " + path);
}

EchoTensor read_tensor(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error(path + " is not a tensor dump");
  }
  auto get_u32 = [&]() {
    std::uint32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
  };
  auto get_u64 = [&]() {
    std::uint64_t v = 0;
    f.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
  };
  if (get_u32() != kVersion) throw std::runtime_error("unsupported version");
  std::uint64_t d0 = get_u64(), d1 = get_u64(), d2 = get_u64();
  std::uint32_t side = get_u32();
  if (side > 1) throw std::runtime_error("bad side tag");
  EchoTensor t;
  t.side = static_cast<Side>(side);
  f.read(reinterpret_cast<char*>(&t.scs_hz), sizeof(double));
  t.data = ComplexTensor3(d0, d1, d2);
  f.read(reinterpret_cast<char*>(t.data.data()),
         static_cast<std::streamsize>(t.data.size() * sizeof(cd)));
  if (!f) throw std::runtime_error("truncated tensor dump " + path);
  return t;
}

}  // namespace bisense
