#include "bisense/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bisense {

std::size_t FusedTensor::n_occupied() const {
  return occupancy.size() - count(BinOccupancy::Empty);
}

std::size_t FusedTensor::count(BinOccupancy o) const {
  return static_cast<std::size_t>(
      std::count(occupancy.begin(), occupancy.end(), o));
}

BinOccupancy bin_occupancy(std::size_t n_prime, std::size_t q,
                           std::size_t n_mbs, std::size_t n_mibs) {
  bool mibs = n_prime < n_mibs;
  bool mbs = (n_prime % q == 0) && (n_prime / q < n_mbs);
  if (mibs && mbs) return BinOccupancy::Overlap;
  if (mibs) return BinOccupancy::MibsOnly;
  if (mbs) return BinOccupancy::MbsOnly;
  return BinOccupancy::Empty;
}

FusedTensor fuse_symbol_level(const EchoTensor& y_mbs,
                              const EchoTensor& y_mibs, std::size_t q,
                              FusionMode mode) {
  if (y_mbs.side != Side::MbsRx || y_mibs.side != Side::MibsRx) {
    throw std::invalid_argument("fuse_symbol_level: tensors passed in wrong order");
  }
  if (q == 0) throw std::invalid_argument("q must be positive");
  if (y_mbs.n_rx() != y_mibs.n_rx() || y_mbs.n_tx() != y_mibs.n_tx()) {
    throw std::invalid_argument("antenna shape mismatch between sides");
  }
  if (y_mbs.n_rx() != y_mbs.n_tx()) {
    throw std::invalid_argument("fusion requires square arrays (n_rx == n_tx)");
  }
  double ratio = y_mbs.scs_hz / y_mibs.scs_hz;
  if (std::abs(ratio - static_cast<double>(q)) > 1e-9 * ratio) {
    throw std::invalid_argument("tensor spacing ratio does not equal q");
  }

  const std::size_t n = y_mbs.n_rx();
  const std::size_t n_mbs = y_mbs.n_sc();
  const std::size_t n_mibs = y_mibs.n_sc();
  const std::size_t n_bins = std::max(q * (n_mbs - 1) + 1, n_mibs);
  const double overlap_scale =
      (mode == FusionMode::ArrayScaled)
          ? 1.0 / (2.0 * static_cast<double>(n) * static_cast<double>(n))
          : 0.5;

  FusedTensor f;
  f.data = ComplexTensor3(n, n, n_bins);
  f.occupancy.resize(n_bins);
  f.scs_base_hz = y_mibs.scs_hz;
  f.mode = mode;

  for (std::size_t np = 0; np < n_bins; ++np) {
    f.occupancy[np] = bin_occupancy(np, q, n_mbs, n_mibs);
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t p = 0; p < n; ++p) {
      cd* row = &f.data(k, p, 0);
      for (std::size_t np = 0; np < n_bins; ++np) {
        switch (f.occupancy[np]) {
          case BinOccupancy::MibsOnly:
            row[np] = y_mibs.data(p, k, np);  // transposed into MbsRx axes
            break;
          case BinOccupancy::MbsOnly:
            row[np] = y_mbs.data(k, p, np / q);
            break;
          case BinOccupancy::Overlap:
            row[np] = (y_mibs.data(p, k, np) + y_mbs.data(k, p, np / q)) *
                      overlap_scale;
            break;
          case BinOccupancy::Empty:
            break;  // stays exactly zero
        }
      }
    }
  }
  return f;
}

FusedTensor sensing_view(const EchoTensor& y) {
  if (y.n_rx() != y.n_tx()) {
    throw std::invalid_argument("sensing_view requires square arrays");
  }
  const std::size_t n = y.n_rx();
  const std::size_t n_sc = y.n_sc();
  FusedTensor f;
  f.data = ComplexTensor3(n, n, n_sc);
  f.occupancy.assign(n_sc, y.side == Side::MbsRx ? BinOccupancy::MbsOnly
                                                 : BinOccupancy::MibsOnly);
  f.scs_base_hz = y.scs_hz;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t p = 0; p < n; ++p) {
      cd* row = &f.data(k, p, 0);
      for (std::size_t m = 0; m < n_sc; ++m) {
        row[m] = (y.side == Side::MbsRx) ? y.data(k, p, m) : y.data(p, k, m);
      }
    }
  }
  return f;
}

double fused_bin_frequency(std::size_t n_prime, double scs_base_hz,
                           std::size_t n_bins) {
  if (n_prime >= n_bins) {
    throw std::out_of_range("fused bin index out of range");
  }
  return static_cast<double>(n_prime) * scs_base_hz;
}

}  // namespace bisense
