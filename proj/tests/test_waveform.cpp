#include <doctest.h>

#include <bisense/rng.hpp>
#include <bisense/waveform.hpp>

#include <cmath>
#include <cstdio>
#include <random>

using namespace bisense;

namespace {

// Independent reference: every phase evaluated directly with std::polar,
// no shared ramp helpers, so agreement actually checks the model.
ComplexTensor3 naive_echo(const SystemConfig& cfg, const Scenario& sc,
                          Side side, std::size_t m, GainMode mode) {
  const bool mbs_rx = (side == Side::MbsRx);
  const double p_dbm = mbs_rx ? cfg.tx_power_mibs_dbm : cfg.tx_power_mbs_dbm;
  const double fc = mbs_rx ? cfg.carrier_freq_mibs_hz : cfg.carrier_freq_mbs_hz;
  const double scs = mbs_rx ? cfg.scs_mibs_hz : cfg.scs_mbs_hz;
  const std::size_t nsc =
      mbs_rx ? cfg.n_subcarriers_mibs : cfg.n_subcarriers_mbs;
  const double amp = std::sqrt(std::pow(10.0, (p_dbm - 30.0) / 10.0));
  const double lambda = kSpeedOfLight / fc;
  const double sym_t = 1.0 / scs + cfg.cp_duration_s;

  ComplexTensor3 out(cfg.n_rx, cfg.n_tx, nsc);
  for (const Target& t : sc.targets) {
    auto bp = bistatic_geometry(t.pos, sc.mbs_pos, sc.mibs_pos);
    double d_mbs = dist(t.pos, sc.mbs_pos);
    double d_mibs = dist(t.pos, sc.mibs_pos);
    cd b = path_gain(t, mbs_rx ? d_mibs : d_mbs, mbs_rx ? d_mbs : d_mibs,
                     lambda, mode);
    double fd = doppler_shift(t, bp.aoa_rad, bp.aod_rad, fc);
    double rx_ang = mbs_rx ? bp.aoa_rad : bp.aod_rad;
    double tx_ang = mbs_rx ? bp.aod_rad : bp.aoa_rad;
    for (std::size_t k = 0; k < cfg.n_rx; ++k) {
      for (std::size_t p = 0; p < cfg.n_tx; ++p) {
        for (std::size_t n = 0; n < nsc; ++n) {
          double phase = 2.0 * M_PI * fd * double(m) * sym_t -
                         2.0 * M_PI * double(n) * scs * bp.delay_s +
                         M_PI * double(k + 1) * std::sin(rx_ang) +
                         M_PI * double(p + 1) * std::sin(tx_ang);
          out(k, p, n) += amp * b * std::polar(1.0, phase);
        }
      }
    }
  }
  return out;
}

double max_rel_err(const ComplexTensor3& a, const ComplexTensor3& b) {
  REQUIRE(a.size() == b.size());
  double scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    scale = std::max(scale, std::abs(b.data()[i]));
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  return scale == 0.0 ? worst : worst / scale;
}

SystemConfig small_cfg() {
  SystemConfig cfg;
  cfg.n_subcarriers_mbs = 24;
  cfg.n_subcarriers_mibs = 20;
  cfg.n_symbols = 8;
  cfg.n_rx = 4;
  cfg.n_tx = 3;
  cfg.scs_mbs_hz = 30e3;
  cfg.scs_mibs_hz = 120e3;
  return cfg;
}

Scenario two_target_scene() {
  Scenario sc;
  sc.noise_psd_dbm_hz = -400.0;  // noiseless
  Target a;
  a.pos = {120.0, 55.0};
  a.speed_mps = 12.0;
  a.heading_rad = 0.7;
  a.reflectivity = {0.8, -0.3};
  Target b;
  b.pos = {240.0, 90.0};
  b.speed_mps = 5.0;
  b.heading_rad = -2.1;
  b.reflectivity = {1.4, 0.6};
  sc.targets = {a, b};
  return sc;
}

}  // namespace

TEST_CASE("steering vector oracle values") {
  auto s0 = steering_vector(0.0, 4);
  for (auto& z : s0) {
    CHECK(z.real() == doctest::Approx(1.0));
    CHECK(z.imag() == doctest::Approx(0.0));
  }
  // sin(pi/6) = 1/2: phases pi/2, pi
  auto s1 = steering_vector(M_PI / 6.0, 2);
  CHECK(s1[0].real() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s1[0].imag() == doctest::Approx(1.0));
  CHECK(s1[1].real() == doctest::Approx(-1.0));
  CHECK(s1[1].imag() == doctest::Approx(0.0).epsilon(1e-12));
  // sin(-pi/2) = -1: alternating -1, +1, -1
  auto s2 = steering_vector(-M_PI / 2.0, 3);
  CHECK(s2[0].real() == doctest::Approx(-1.0));
  CHECK(s2[1].real() == doctest::Approx(1.0));
  CHECK(s2[2].real() == doctest::Approx(-1.0));

  std::mt19937_64 eng(3);
  std::uniform_real_distribution<double> ua(-1.5, 1.5);
  for (int i = 0; i < 20; ++i) {
    for (auto& z : steering_vector(ua(eng), 16)) {
      CHECK(std::abs(z) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("path gain oracle") {
  Target t;
  t.reflectivity = {0.5, -0.25};
  CHECK(path_gain(t, 100.0, 50.0, 0.1, GainMode::Unit) == t.reflectivity);

  t.reflectivity = {1.0, 0.0};
  cd g = path_gain(t, 100.0, 100.0, 0.1153, GainMode::BistaticRadar);
  CHECK(g.imag() == 0.0);
  CHECK(g.real() == doctest::Approx(2.5883e-7).epsilon(1e-4));
  // doubling both legs divides the gain by four
  cd g2 = path_gain(t, 200.0, 200.0, 0.1153, GainMode::BistaticRadar);
  CHECK(g.real() / g2.real() == doctest::Approx(4.0).epsilon(1e-12));

  CHECK_THROWS_AS((void)path_gain(t, 0.0, 1.0, 0.1, GainMode::BistaticRadar),
                  std::domain_error);
}

TEST_CASE("noise variance per resource element") {
  CHECK(noise_variance_w(-170.0, 30e3) == doctest::Approx(3e-16).epsilon(1e-12));
  CHECK(noise_variance_w(-400.0, 30e3) == 0.0);
  CHECK(noise_variance_w(-301.0, 30e3) == 0.0);
}

TEST_CASE("synthesised echo matches the direct per-entry model") {
  SystemConfig cfg = small_cfg();
  Scenario sc = two_target_scene();
  for (Side side : {Side::MbsRx, Side::MibsRx}) {
    for (GainMode mode : {GainMode::Unit, GainMode::BistaticRadar}) {
      EchoTensor y = synthesize_echo(cfg, sc, side, 3, 99, mode);
      ComplexTensor3 ref = naive_echo(cfg, sc, side, 3, mode);
      CHECK(max_rel_err(y.data, ref) < 1e-12);
      CHECK(y.data.all_finite());
    }
  }
  EchoTensor ym = synthesize_echo(cfg, sc, Side::MbsRx, 0, 1, GainMode::Unit);
  CHECK(ym.scs_hz == cfg.scs_mibs_hz);
  CHECK(ym.n_sc() == cfg.n_subcarriers_mibs);
  EchoTensor yu = synthesize_echo(cfg, sc, Side::MibsRx, 0, 1, GainMode::Unit);
  CHECK(yu.scs_hz == cfg.scs_mbs_hz);
  CHECK(yu.n_sc() == cfg.n_subcarriers_mbs);
}

TEST_CASE("transmit power sets the per-entry amplitude") {
  SystemConfig cfg = small_cfg();
  cfg.tx_power_mibs_dbm = 46.0;
  Scenario sc;
  sc.noise_psd_dbm_hz = -400.0;
  Target t;
  t.pos = {150.0, 80.0};
  sc.targets = {t};
  EchoTensor y = synthesize_echo(cfg, sc, Side::MbsRx, 0, 0, GainMode::Unit);
  // 46 dBm -> 39.81 W -> amplitude 6.3096, same magnitude in every entry
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    CHECK(std::abs(y.data.data()[i]) == doctest::Approx(6.30957).epsilon(1e-5));
  }
}

TEST_CASE("axis ratios recover the steering and delay phases") {
  SystemConfig cfg = small_cfg();
  Scenario sc;
  sc.noise_psd_dbm_hz = -400.0;
  Target t;
  t.pos = {220.0, 60.0};
  sc.targets = {t};
  auto bp = bistatic_geometry(t.pos, sc.mbs_pos, sc.mibs_pos);
  EchoTensor y = synthesize_echo(cfg, sc, Side::MbsRx, 0, 0, GainMode::Unit);

  cd rx_ratio = y.data(1, 0, 0) / y.data(0, 0, 0);
  CHECK(std::arg(rx_ratio * std::polar(1.0, -M_PI * std::sin(bp.aoa_rad))) ==
        doctest::Approx(0.0).epsilon(1e-9));
  cd tx_ratio = y.data(0, 1, 0) / y.data(0, 0, 0);
  CHECK(std::arg(tx_ratio * std::polar(1.0, -M_PI * std::sin(bp.aod_rad))) ==
        doctest::Approx(0.0).epsilon(1e-9));
  cd sc_ratio = y.data(0, 0, 1) / y.data(0, 0, 0);
  CHECK(std::arg(sc_ratio *
                 std::polar(1.0, 2.0 * M_PI * cfg.scs_mibs_hz * bp.delay_s)) ==
        doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("symmetric links make the two tensors transposes of each other") {
  SystemConfig cfg = small_cfg();
  cfg.n_rx = cfg.n_tx = 4;
  cfg.n_subcarriers_mbs = cfg.n_subcarriers_mibs = 16;
  cfg.scs_mbs_hz = cfg.scs_mibs_hz = 30e3;
  cfg.carrier_freq_mibs_hz = cfg.carrier_freq_mbs_hz;
  cfg.tx_power_mibs_dbm = cfg.tx_power_mbs_dbm;
  Scenario sc = two_target_scene();
  for (std::size_t m : {std::size_t{0}, std::size_t{5}}) {
    EchoTensor ya = synthesize_echo(cfg, sc, Side::MbsRx, m, 0, GainMode::Unit);
    EchoTensor yb = synthesize_echo(cfg, sc, Side::MibsRx, m, 0, GainMode::Unit);
    for (std::size_t k = 0; k < 4; ++k)
      for (std::size_t p = 0; p < 4; ++p)
        for (std::size_t n = 0; n < 16; ++n) {
          CHECK(std::abs(ya.data(k, p, n) - yb.data(p, k, n)) < 1e-12);
        }
  }
}

TEST_CASE("superposition over targets is exact") {
  SystemConfig cfg = small_cfg();
  Scenario sc = two_target_scene();
  Scenario sa = sc, sb = sc;
  sa.targets = {sc.targets[0]};
  sb.targets = {sc.targets[1]};
  EchoTensor both = synthesize_echo(cfg, sc, Side::MibsRx, 2, 0, GainMode::Unit);
  EchoTensor ya = synthesize_echo(cfg, sa, Side::MibsRx, 2, 0, GainMode::Unit);
  EchoTensor yb = synthesize_echo(cfg, sb, Side::MibsRx, 2, 0, GainMode::Unit);
  for (std::size_t i = 0; i < both.data.size(); ++i) {
    CHECK(std::abs(both.data.data()[i] -
                   (ya.data.data()[i] + yb.data.data()[i])) < 1e-12);
  }
}

TEST_CASE("noise draws are reproducible and match the configured variance") {
  SystemConfig cfg = small_cfg();
  cfg.n_rx = 8;
  cfg.n_tx = 8;
  cfg.n_subcarriers_mibs = 512;
  Scenario sc;
  sc.targets = {};
  sc.noise_psd_dbm_hz = -170.0;

  EchoTensor a = synthesize_echo(cfg, sc, Side::MbsRx, 0, 42, GainMode::Unit);
  EchoTensor b = synthesize_echo(cfg, sc, Side::MbsRx, 0, 42, GainMode::Unit);
  EchoTensor c = synthesize_echo(cfg, sc, Side::MbsRx, 0, 43, GainMode::Unit);
  bool same = true, differs = false;
  double power = 0.0;
  cd mean = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    same = same && a.data.data()[i] == b.data.data()[i];
    differs = differs || a.data.data()[i] != c.data.data()[i];
    power += std::norm(a.data.data()[i]);
    mean += a.data.data()[i];
  }
  power /= double(a.data.size());
  mean /= double(a.data.size());
  CHECK(same);
  CHECK(differs);
  double sigma2 = noise_variance_w(-170.0, cfg.scs_mibs_hz);
  CHECK(power == doctest::Approx(sigma2).epsilon(0.05));
  CHECK(std::abs(mean) < 5.0 * std::sqrt(sigma2 / double(a.data.size())));
}

TEST_CASE("noiseless synthesis ignores the seed") {
  SystemConfig cfg = small_cfg();
  Scenario sc = two_target_scene();
  EchoTensor a = synthesize_echo(cfg, sc, Side::MbsRx, 1, 7, GainMode::Unit);
  EchoTensor b = synthesize_echo(cfg, sc, Side::MbsRx, 1, 8, GainMode::Unit);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    CHECK(a.data.data()[i] == b.data.data()[i]);
  }
}

TEST_CASE("communication cancellation recovers the echo") {
  SystemConfig cfg = small_cfg();
  Scenario sc = two_target_scene();
  EchoTensor echo = synthesize_echo(cfg, sc, Side::MbsRx, 0, 0, GainMode::Unit);

  // modulate with random QPSK, then cancel
  SymbolGrid sym(cfg.n_tx, echo.n_sc());
  std::mt19937_64 eng(11);
  for (auto& s : sym.x) {
    double ph = M_PI / 4.0 + (M_PI / 2.0) * double(eng() % 4);
    s = std::polar(1.0, ph);
  }
  ComplexTensor3 raw(echo.n_rx(), echo.n_tx(), echo.n_sc());
  for (std::size_t k = 0; k < echo.n_rx(); ++k)
    for (std::size_t p = 0; p < echo.n_tx(); ++p)
      for (std::size_t n = 0; n < echo.n_sc(); ++n)
        raw(k, p, n) = echo.data(k, p, n) * sym.at(p, n);

  EchoTensor rec = cancel_communication(raw, sym, echo.scs_hz, echo.side);
  CHECK(max_rel_err(rec.data, echo.data) < 1e-12);
  CHECK(rec.scs_hz == echo.scs_hz);

  // all-ones payload is the identity
  SymbolGrid ones(cfg.n_tx, echo.n_sc());
  for (auto& s : ones.x) s = {1.0, 0.0};
  EchoTensor id = cancel_communication(echo.data, ones, echo.scs_hz, echo.side);
  for (std::size_t i = 0; i < id.data.size(); ++i) {
    CHECK(id.data.data()[i] == echo.data.data()[i]);
  }

  // unit-modulus payloads keep per-entry magnitudes
  for (std::size_t i = 0; i < rec.data.size(); ++i) {
    CHECK(std::abs(rec.data.data()[i]) ==
          doctest::Approx(std::abs(echo.data.data()[i])).epsilon(1e-12));
  }

  SymbolGrid zeroed = sym;
  zeroed.at(0, 0) = 0.0;
  CHECK_THROWS_AS((void)cancel_communication(raw, zeroed, echo.scs_hz, echo.side),
                  std::invalid_argument);
  SymbolGrid wrong(cfg.n_tx + 1, echo.n_sc());
  for (auto& s : wrong.x) s = {1.0, 0.0};
  CHECK_THROWS_AS((void)cancel_communication(raw, wrong, echo.scs_hz, echo.side),
                  std::invalid_argument);
}

TEST_CASE("tensor dump round-trips bitwise") {
  SystemConfig cfg = small_cfg();
  Scenario sc = two_target_scene();
  sc.noise_psd_dbm_hz = -165.0;
  EchoTensor y = synthesize_echo(cfg, sc, Side::MibsRx, 4, 17, GainMode::Unit);
  const std::string path = "tensor_roundtrip.bin";
  write_tensor(y, path);
  EchoTensor back = read_tensor(path);
  CHECK(back.side == y.side);
  CHECK(back.scs_hz == y.scs_hz);
  REQUIRE(back.data.size() == y.data.size());
  CHECK(back.data.dim0() == y.data.dim0());
  CHECK(back.data.dim1() == y.data.dim1());
  CHECK(back.data.dim2() == y.data.dim2());
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    CHECK(back.data.data()[i] == y.data.data()[i]);
  }
  std::remove(path.c_str());

  const std::string bad = "tensor_bad.bin";
  {
    std::FILE* f = std::fopen(bad.c_str(), "wb");
    std::fputs("BSTX", f);  // header cut short
    std::fclose(f);
  }
  CHECK_THROWS_AS((void)read_tensor(bad), std::runtime_error);
  std::remove(bad.c_str());
  CHECK_THROWS_AS((void)read_tensor("no_such_file.bin"), std::runtime_error);
}

TEST_CASE("synthesis argument validation") {
  SystemConfig cfg = small_cfg();
  Scenario sc = two_target_scene();
  CHECK_THROWS_AS((void)synthesize_echo(cfg, sc, Side::MbsRx, cfg.n_symbols, 0,
                                        GainMode::Unit),
                  std::invalid_argument);
}
