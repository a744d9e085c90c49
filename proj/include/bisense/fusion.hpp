#pragma once

#include <cstdint>
#include <vector>

#include "bisense/waveform.hpp"

namespace bisense {

// Which side(s) contributed data to a fused frequency bin.
enum class BinOccupancy : std::uint8_t {
  Empty = 0,
  MibsOnly = 1,  // MBS-transmitted echo captured at the MiBS
  MbsOnly = 2,   // MiBS-transmitted echo captured at the MBS
  Overlap = 3,
};

inline bool bin_occupied(BinOccupancy o) { return o != BinOccupancy::Empty; }

enum class FusionMode {
  ArrayScaled,  // overlap bins combined as (mibs + mbs) / (2 * N * N)
  Normalized,   // overlap bins combined as (mibs + mbs) / 2
};

// Symbol-level fused sensing cube on the base (MBS-numerology) frequency
// lattice. Axis convention matches the MbsRx tensor: dim0 steers the AoA at
// the MBS, dim1 the AoD at the MiBS; the MibsRx contribution is transposed
// into this orientation before filling. Empty bins hold exact zeros.
struct FusedTensor {
  ComplexTensor3 data;
  std::vector<BinOccupancy> occupancy;
  double scs_base_hz = 0.0;
  FusionMode mode = FusionMode::Normalized;

  std::size_t n_bins() const { return data.dim2(); }
  std::size_t n_occupied() const;
  std::size_t count(BinOccupancy o) const;
};

// Occupancy of fused bin n_prime when the MbsRx tensor holds n_mbs bins at q
// times the base spacing and the MibsRx tensor holds n_mibs bins at the base
// spacing.
BinOccupancy bin_occupancy(std::size_t n_prime, std::size_t q,
                           std::size_t n_mbs, std::size_t n_mibs);

// Fuses the two receive tensors onto the base lattice. The MbsRx bin n1 lands
// at n_prime = q * n1; the (transposed) MibsRx bin n2 lands at n_prime = n2;
// bins hit by both are combined per the fusion mode. Lattice depth is
// q * (n_mbs - 1) + 1 extended to cover all MibsRx bins. Throws on antenna
// shape mismatch, non-square arrays, wrong sides, or if the tensors' spacing
// ratio is not q.
FusedTensor fuse_symbol_level(const EchoTensor& y_mbs,
                              const EchoTensor& y_mibs, std::size_t q,
                              FusionMode mode = FusionMode::Normalized);

// Single-side view with the same axis convention as the fused cube, for
// running estimators non-cooperatively: MbsRx data is taken as-is, MibsRx
// data is transposed. All bins are occupied and keep the tensor's own
// spacing.
FusedTensor sensing_view(const EchoTensor& y);

// Absolute frequency offset of fused bin n_prime from the first subcarrier.
double fused_bin_frequency(std::size_t n_prime, double scs_base_hz,
                           std::size_t n_bins);

}  // namespace bisense
