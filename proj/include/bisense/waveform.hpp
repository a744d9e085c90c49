#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bisense/scenario.hpp"
#include "bisense/tensor.hpp"

namespace bisense {

// Which BS captured the tensor. MbsRx holds the MiBS-transmitted echo
// (high-band numerology); MibsRx holds the MBS-transmitted echo.
enum class Side : std::uint8_t { MbsRx = 0, MibsRx = 1 };

enum class GainMode {
  Unit,           // per-target complex reflectivity used as-is
  BistaticRadar,  // sqrt(sigma_rcs) * lambda / ((4*pi)^1.5 * d_tx * d_rx)
};

// Post-cancellation echo cube, shape (n_rx, n_tx, n_subcarriers) with the
// subcarrier axis on the transmitting BS's frequency lattice.
struct EchoTensor {
  ComplexTensor3 data;
  double scs_hz = 0.0;  // spacing of the subcarrier axis
  Side side = Side::MbsRx;

  std::size_t n_rx() const { return data.dim0(); }
  std::size_t n_tx() const { return data.dim1(); }
  std::size_t n_sc() const { return data.dim2(); }
};

// Half-wavelength ULA steering vector with 1-based element phases:
// element k (k = 1..n) is exp(j*pi*k*sin(angle)).
std::vector<cd> steering_vector(double angle_rad, std::size_t n);

// Channel amplitude of one bistatic leg. Unit mode returns the target's
// reflectivity unchanged; BistaticRadar applies the bistatic radar equation
// with sigma_rcs = |reflectivity|^2 treated as the RCS in m^2.
cd path_gain(const Target& t, double d_tx_m, double d_rx_m,
             double wavelength_m, GainMode mode);

// Synthesises the post-cancellation sensing tensor of one side for one OFDM
// symbol. Entries follow the echo model exactly: for MbsRx,
//   sqrt(P_mibs) * sum_l b_l * exp(j*2*pi*f_d*m*T) * exp(-j*2*pi*n*scs*tau_l)
//                * exp(j*pi*k*sin(aoa_l)) * exp(j*pi*p*sin(aod_l))
// with k/p 1-based antenna indices, n 0-based on the MiBS lattice; the MibsRx
// side swaps the roles of aoa and aod and uses the MBS power/lattice.
// Additive per-entry complex Gaussian noise with variance
// 10^((noise_psd_dbm_hz - 30)/10) * scs is drawn from the seed; the noiseless
// part does not consume random draws, so noise-off tensors are seed-free.
EchoTensor synthesize_echo(const SystemConfig& cfg, const Scenario& sc,
                           Side side, std::size_t symbol_index,
                           std::uint64_t seed,
                           GainMode mode = GainMode::BistaticRadar);

// Removes the known communication payload from a raw reception:
// out(k,p,n) = raw(k,p,n) / symbols(p,n). Throws if any symbol magnitude is
// zero. Unit-modulus constellations leave the per-entry noise variance
// unchanged.
EchoTensor cancel_communication(const ComplexTensor3& raw,
                                const SymbolGrid& symbols, double scs_hz,
                                Side side);

// Binary dump: fixed little-endian header (magic, version, dims, side, scs)
// followed by interleaved re/im doubles in row-major (k, p, n) order.
void write_tensor(const EchoTensor& t, const std::string& path);
EchoTensor read_tensor(const std::string& path);

// Per-entry noise variance in watts for a receiver whose subcarrier lattice
// has the given spacing; psd values <= -300 dBm/Hz mean noise off.
double noise_variance_w(double noise_psd_dbm_hz, double scs_hz);

}  // namespace bisense
