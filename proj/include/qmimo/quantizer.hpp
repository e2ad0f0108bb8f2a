#pragma once

#include <cstdint>
#include <string>

#include "qmimo/types.hpp"

namespace qmimo {

// Mid-rise quantization and the sparse data-transmission-error channel.
//
// Each receiver quantizes real and imaginary parts independently with a
// b-level mid-rise quantizer of clipping range [-gamma, gamma]:
//
//   cell width   delta = 2 * gamma / b
//   cells        [-gamma + l*delta, -gamma + (l+1)*delta), l = 0..b-1,
//                with the top cell closed at gamma
//   output       -gamma + delta * (l + 1/2)
//   |x| > gamma  saturates to sign(x) * (gamma - gamma/b), the extreme cell
//
// The quantized codes then cross an unreliable link to the fusion center:
// each matrix entry is independently corrupted with probability p, in which
// case both its real and imaginary codes are replaced by uniformly random
// alphabet values. The corruption t~ = z_corrupted - z is sparse, which is
// what the recovery stage exploits.

struct QuantizerSpec {
  double gamma = 1.0;  // clipping range
  int levels = 16;     // cell count b (even, >= 2); bit width is log2(b)

  double delta() const { return 2.0 * gamma / levels; }
  // Bits needed to store one code: ceil(log2(levels)).
  int bits() const;
  // Throws std::invalid_argument unless gamma > 0 and levels is even >= 2.
  void validate() const;
};

struct DteChannelSpec {
  double corruption_prob = 0.01;  // per-entry corruption probability

  // Throws std::invalid_argument unless the probability lies in [0, 1).
  void validate() const;
};

// Cell index of x, saturation included (so always in [0, levels-1]).
int quantize_level(double x, const QuantizerSpec& spec);

// Reconstruction value of cell l: -gamma + delta * (l + 1/2).
double level_value(int level, const QuantizerSpec& spec);

// Scalar mid-rise quantizer; equals level_value(quantize_level(x)).
double quantize_real(double x, const QuantizerSpec& spec);

// Elementwise complex quantizer: parts quantized independently. Idempotent.
CMat quantize(const CMat& y, const QuantizerSpec& spec);

// Result of the transmission channel: corrupted matrix and the sparse
// corruption t~ = z - z_in (zero outside corrupted entries).
struct DteResult {
  CMat z;
  CMat t_tilde;
};

// Applies the data-transmission-error channel to a quantized matrix.
// Entries are visited in row-major order; a corrupted entry redraws both
// part codes uniformly over the alphabet. Deterministic in the seed.
// Precondition: entries of z_in lie in the quantizer alphabet per part.
DteResult apply_dte(const CMat& z_in, const QuantizerSpec& spec,
                    const DteChannelSpec& channel, std::uint64_t seed);

// Same channel realization applied to an *unquantized* matrix: with the seed
// fixed, the corrupted entry set and replacement codes are identical to
// apply_dte's, but survivors keep their exact (unquantized) values. Used by
// the no-quantization baseline so its trials pair with the quantized ones.
DteResult apply_dte_values(const CMat& y, const QuantizerSpec& spec,
                           const DteChannelSpec& channel, std::uint64_t seed);

// Total bits sent to the fusion center per coherent processing interval:
// 2 * m_t * m_r * l * q * bits (factor 2 for real and imaginary codes).
std::uint64_t bit_volume(int m_t, int m_r, int l, int q, int bits);

// Default clipping range: 3 standard deviations of one received part,
// sqrt((signal_power_per_sample + noise_var) / 2) with the per-complex-entry
// powers halved per part.
double auto_gamma(double signal_power_per_sample, double noise_var);

// Bit-packed matrix file, the wire format of the quantizer output.
// Layout: four little-endian 32-bit header fields
//   uint32 L, uint32 Q, uint32 bits, float32 gamma
// followed by the codes in row-major order, real code then imaginary code
// per entry, each `bits` wide, packed little-endian within bytes (the first
// code occupies the least significant bits of byte 0). Requires levels to be
// exactly 2^bits. Throws std::runtime_error on I/O failure and
// std::invalid_argument on malformed input.
void write_packed(const std::string& path, const CMat& z,
                  const QuantizerSpec& spec);

struct PackedMatrix {
  CMat z;
  QuantizerSpec spec;
};

PackedMatrix read_packed(const std::string& path);

}  // namespace qmimo
