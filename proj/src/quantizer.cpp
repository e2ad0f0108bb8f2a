#include "qmimo/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "qmimo/rng.hpp"

namespace qmimo {

int QuantizerSpec::bits() const {
  int b = 0;
  while ((1 << b) < levels) ++b;
  return b;
}

void QuantizerSpec::validate() const {
  if (!(gamma > 0.0)) {
    throw std::invalid_argument("quantizer: gamma must be positive");
  }
  if (levels < 2 || levels % 2 != 0) {
    throw std::invalid_argument("quantizer: levels must be even and >= 2");
  }
}

void DteChannelSpec::validate() const {
  if (!(corruption_prob >= 0.0 && corruption_prob < 1.0)) {
    throw std::invalid_argument("channel: corruption_prob must be in [0, 1)");
  }
}

int quantize_level(double x, const QuantizerSpec& spec) {
  if (x > spec.gamma) return spec.levels - 1;
  if (x < -spec.gamma) return 0;
  // floor((x + gamma) / delta); x == gamma lands one past the end and is
  // clamped into the closed top cell.
  const int l = static_cast<int>(std::floor((x + spec.gamma) / spec.delta()));
  return std::clamp(l, 0, spec.levels - 1);
}

double level_value(int level, const QuantizerSpec& spec) {
  return -spec.gamma + spec.delta() * (level + 0.5);
}

double quantize_real(double x, const QuantizerSpec& spec) {
  return level_value(quantize_level(x, spec), spec);
}

CMat quantize(const CMat& y, const QuantizerSpec& spec) {
  spec.validate();
  CMat z(y.rows(), y.cols());
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      z(i, j) = cxd(quantize_real(y(i, j).real(), spec),
                    quantize_real(y(i, j).imag(), spec));
    }
  }
  return z;
}

namespace {

// Shared channel loop: the draw sequence depends only on (seed, shape), so a
// quantized run and an unquantized baseline run with the same seed corrupt
// the same entries with the same replacement codes.
DteResult run_channel(const CMat& input, const QuantizerSpec& spec,
                      const DteChannelSpec& channel, std::uint64_t seed) {
  spec.validate();
  channel.validate();
  Rng rng(seed);
  DteResult out;
  out.z = input;
  out.t_tilde = CMat::Zero(input.rows(), input.cols());
  for (Eigen::Index i = 0; i < input.rows(); ++i) {
    for (Eigen::Index j = 0; j < input.cols(); ++j) {
      if (rng.uniform() > channel.corruption_prob) continue;
      const int re_level = static_cast<int>(rng.uniform_int(spec.levels));
      const int im_level = static_cast<int>(rng.uniform_int(spec.levels));
      const cxd replacement(level_value(re_level, spec),
                            level_value(im_level, spec));
      out.t_tilde(i, j) = replacement - input(i, j);
      out.z(i, j) = replacement;
    }
  }
  return out;
}

}  // namespace

DteResult apply_dte(const CMat& z_in, const QuantizerSpec& spec,
                    const DteChannelSpec& channel, std::uint64_t seed) {
  return run_channel(z_in, spec, channel, seed);
}

DteResult apply_dte_values(const CMat& y, const QuantizerSpec& spec,
                           const DteChannelSpec& channel, std::uint64_t seed) {
  return run_channel(y, spec, channel, seed);
}

std::uint64_t bit_volume(int m_t, int m_r, int l, int q, int bits) {
  if (m_t < 1 || m_r < 1 || l < 1 || q < 1 || bits < 1) {
    throw std::invalid_argument("bit_volume: all arguments must be >= 1");
  }
  return 2ULL * static_cast<std::uint64_t>(m_t) * m_r * l * q * bits;
}

double auto_gamma(double signal_power_per_sample, double noise_var) {
  if (signal_power_per_sample < 0.0 || noise_var < 0.0) {
    throw std::invalid_argument("auto_gamma: powers must be >= 0");
  }
  const double part_var = (signal_power_per_sample + noise_var) / 2.0;
  if (part_var <= 0.0) {
    throw std::invalid_argument("auto_gamma: zero received power");
  }
  return 3.0 * std::sqrt(part_var);
}

namespace {

void put_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
  buf.push_back(static_cast<unsigned char>(v & 0xff));
  buf.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  buf.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  buf.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

class BitWriter {
 public:
  explicit BitWriter(std::vector<unsigned char>& buf) : buf_(buf) {}

  // Appends `width` bits of code, least significant bits of the stream first.
  void put(std::uint32_t code, int width) {
    acc_ |= static_cast<std::uint64_t>(code) << used_;
    used_ += width;
    while (used_ >= 8) {
      buf_.push_back(static_cast<unsigned char>(acc_ & 0xff));
      acc_ >>= 8;
      used_ -= 8;
    }
  }

  void flush() {
    if (used_ > 0) {
      buf_.push_back(static_cast<unsigned char>(acc_ & 0xff));
      acc_ = 0;
      used_ = 0;
    }
  }

 private:
  std::vector<unsigned char>& buf_;
  std::uint64_t acc_ = 0;
  int used_ = 0;
};

class BitReader {
 public:
  BitReader(const unsigned char* data, std::size_t size)
      : data_(data), size_(size) {}

  std::uint32_t get(int width) {
    while (used_ < width) {
      if (pos_ >= size_) {
        throw std::invalid_argument("packed matrix: truncated payload");
      }
      acc_ |= static_cast<std::uint64_t>(data_[pos_++]) << used_;
      used_ += 8;
    }
    const std::uint32_t code =
        static_cast<std::uint32_t>(acc_ & ((1ULL << width) - 1));
    acc_ >>= width;
    used_ -= width;
    return code;
  }

 private:
  const unsigned char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::uint64_t acc_ = 0;
  int used_ = 0;
};

}  // namespace

void write_packed(const std::string& path, const CMat& z,
                  const QuantizerSpec& spec) {
  spec.validate();
  const int bits = spec.bits();
  if ((1 << bits) != spec.levels) {
    throw std::invalid_argument(
        "packed matrix: levels must be a power of two");
  }
  std::vector<unsigned char> buf;
  buf.reserve(16 + (2 * z.size() * bits + 7) / 8);
  put_u32(buf, static_cast<std::uint32_t>(z.rows()));
  put_u32(buf, static_cast<std::uint32_t>(z.cols()));
  put_u32(buf, static_cast<std::uint32_t>(bits));
  const float gamma_f = static_cast<float>(spec.gamma);
  std::uint32_t gamma_bits;
  std::memcpy(&gamma_bits, &gamma_f, sizeof(gamma_bits));
  put_u32(buf, gamma_bits);

  BitWriter writer(buf);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      writer.put(quantize_level(z(i, j).real(), spec), bits);
      writer.put(quantize_level(z(i, j).imag(), spec), bits);
    }
  }
  writer.flush();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

PackedMatrix read_packed(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < 16) {
    throw std::invalid_argument("packed matrix: header truncated");
  }
  const std::uint32_t rows = get_u32(buf.data());
  const std::uint32_t cols = get_u32(buf.data() + 4);
  const std::uint32_t bits = get_u32(buf.data() + 8);
  std::uint32_t gamma_bits = get_u32(buf.data() + 12);
  float gamma_f;
  std::memcpy(&gamma_f, &gamma_bits, sizeof(gamma_f));
  if (rows == 0 || cols == 0 || bits == 0 || bits > 24) {
    throw std::invalid_argument("packed matrix: malformed header");
  }
  if (!(gamma_f > 0.0f)) {
    throw std::invalid_argument("packed matrix: gamma must be positive");
  }

  PackedMatrix out;
  out.spec.gamma = static_cast<double>(gamma_f);
  out.spec.levels = 1 << bits;
  const std::size_t payload_bytes =
      (2ULL * rows * cols * bits + 7) / 8;
  if (buf.size() < 16 + payload_bytes) {
    throw std::invalid_argument("packed matrix: truncated payload");
  }
  BitReader reader(buf.data() + 16, buf.size() - 16);
  out.z.resize(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i) {
    for (std::uint32_t j = 0; j < cols; ++j) {
      const int re_level = static_cast<int>(reader.get(static_cast<int>(bits)));
      const int im_level = static_cast<int>(reader.get(static_cast<int>(bits)));
      out.z(i, j) = cxd(level_value(re_level, out.spec),
                        level_value(im_level, out.spec));
    }
  }
  return out;
}

}  // namespace qmimo
