#pragma once

#include <complex>
#include <cstddef>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace bisense {

using cd = std::complex<double>;

// Dense rank-3 complex tensor, row-major (i, j, k) with k fastest.
// Indexing is unchecked in release builds; dimensions are fixed at
// construction.
class ComplexTensor3 {
 public:
  ComplexTensor3() = default;
  ComplexTensor3(std::size_t d0, std::size_t d1, std::size_t d2)
      : d0_(d0), d1_(d1), d2_(d2), v_(d0 * d1 * d2) {}

  cd& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return v_[(i * d1_ + j) * d2_ + k];
  }
  const cd& operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return v_[(i * d1_ + j) * d2_ + k];
  }

  std::size_t dim0() const { return d0_; }
  std::size_t dim1() const { return d1_; }
  std::size_t dim2() const { return d2_; }
  std::size_t size() const { return v_.size(); }

  cd* data() { return v_.data(); }
  const cd* data() const { return v_.data(); }

  bool all_finite() const {
    for (const cd& z : v_) {
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    }
    return true;
  }

 private:
  std::size_t d0_ = 0, d1_ = 0, d2_ = 0;
  std::vector<cd> v_;
};

// Unit-modulus ramp z^n, z = exp(j*phase_step), n = 0..count-1. The running
// product is re-anchored with a direct evaluation every 64 steps so rounding
// drift stays below ~1e-14 for any practical length.
inline void phase_ramp(std::vector<cd>& out, double phase_step,
                       std::size_t count) {
  out.resize(count);
  const cd step = std::polar(1.0, phase_step);
  cd cur{1.0, 0.0};
  for (std::size_t n = 0; n < count; ++n) {
    if ((n & 63u) == 0) {
      cur = std::polar(1.0, phase_step * static_cast<double>(n));
    }
    out[n] = cur;
    cur *= step;
  }
}

// Per-transmit-antenna symbol plane, shape (n_tx, n_subcarriers).
struct SymbolGrid {
  std::size_t n_tx = 0;
  std::size_t n_sc = 0;
  std::vector<cd> x;

  SymbolGrid() = default;
  SymbolGrid(std::size_t tx, std::size_t sc) : n_tx(tx), n_sc(sc), x(tx * sc) {}

  cd& at(std::size_t p, std::size_t n) { return x[p * n_sc + n]; }
  const cd& at(std::size_t p, std::size_t n) const { return x[p * n_sc + n]; }
};

}  // namespace bisense
