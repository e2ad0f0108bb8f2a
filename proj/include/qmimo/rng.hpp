#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <random>

#include "qmimo/types.hpp"

namespace qmimo {

// Deterministic random number utilities.
//
// Monte-Carlo outputs must be a pure function of the master seed: repeated
// runs have to produce byte-identical CSV files. std::mt19937_64 is specified
// exactly by the standard, but the standard *distributions* are not, so the
// uniform/Gaussian transforms are implemented here (53-bit uniform,
// Box-Muller, rejection sampling) instead of through std::*_distribution.

// splitmix64 step; used both as a mixer and to derive child seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent child seed from a base seed and up to three stream
// keys. Used to split the master seed per (snr, bits, trial) cell and per
// (pair, purpose) substream so that sub-sweeps over a subset of cells draw
// the same randomness for the shared cells.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t k0,
                                 std::uint64_t k1 = 0, std::uint64_t k2 = 0) {
  std::uint64_t s = base;
  std::uint64_t out = splitmix64(s);
  s ^= k0;
  out ^= splitmix64(s);
  s ^= k1;
  out ^= splitmix64(s);
  s ^= k2;
  out ^= splitmix64(s);
  return out;
}

// Encodes a double into a seed key through its bit pattern (exact, no
// quantization of the key space).
inline std::uint64_t seed_key(double x) {
  std::uint64_t k;
  static_assert(sizeof(k) == sizeof(x));
  std::memcpy(&k, &x, sizeof(k));
  return k;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Uniform on (0, 1]; never returns 0 so log() is safe.
  double uniform() {
    return static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = eng_();
    } while (v >= limit);
    return v % n;
  }

  // Standard normal via Box-Muller; one spare value cached.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * kPi * u2);
  }

  // Circular complex Gaussian with total variance sigma2 (sigma2/2 per part).
  cxd c_gaussian(double sigma2) {
    const double s = std::sqrt(sigma2 / 2.0);
    const double re = gaussian();
    const double im = gaussian();
    return cxd(s * re, s * im);
  }

  // Unit-magnitude complex number with uniform phase.
  cxd unit_phase() {
    const double phi = 2.0 * kPi * uniform();
    return cxd(std::cos(phi), std::sin(phi));
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace qmimo
