#include "qmimo/scene.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qmimo {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void check(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("scene: " + what);
}

}  // namespace

void SceneConfig::validate() const {
  check(!tx_positions.empty(), "needs at least one transmitter");
  check(!rx_positions.empty(), "needs at least one receiver");
  check(b0 > 0.0, "b0 must be positive");
  check(f0 > 0.0, "f0 must be positive");
  check(delta_f >= b0, "delta_f must be >= b0 so carriers do not overlap");
  check(tp > 0.0, "tp must be positive");
  const double n_exact = tp / ts();
  const int n = waveform_len();
  check(std::abs(n_exact - n) < 1e-6, "tp must be an integer multiple of ts");
  check(is_power_of_two(n), "waveform length tp/ts must be a power of two");
  check(n >= num_tx() + 1, "waveform length must exceed the transmitter count");
  check(q_pulses >= 1, "q_pulses must be >= 1");
  check(tau_max > 0.0, "tau_max must be positive");
  check(t_pri > tp + tau_max, "t_pri must exceed tp + tau_max");
  check(noise_var >= 0.0, "noise_var must be >= 0");
  check(c > 0.0, "propagation speed must be positive");
}

double bistatic_delay(const SceneConfig& scene, const Vec2& p, int m, int n) {
  const Vec2& pt = scene.tx_positions.at(m);
  const Vec2& pr = scene.rx_positions.at(n);
  return ((p - pt).norm() + (p - pr).norm()) / scene.c;
}

double doppler_freq(const SceneConfig& scene, const Vec2& p, const Vec2& vel,
                    int m, int n) {
  const Vec2& pt = scene.tx_positions.at(m);
  const Vec2& pr = scene.rx_positions.at(n);
  const double dt = (p - pt).norm();
  const double dr = (p - pr).norm();
  if (dt == 0.0 || dr == 0.0) {
    throw std::domain_error("doppler_freq: target coincides with an antenna");
  }
  const double radial = vel.dot(p - pt) / dt + vel.dot(p - pr) / dr;
  return scene.carrier(m) / scene.c * radial;
}

RVec make_waveform(const SceneConfig& scene, int m) {
  const int n = scene.waveform_len();
  if (m < 0 || m >= scene.num_tx()) {
    throw std::invalid_argument("make_waveform: transmitter index out of range");
  }
  if (!is_power_of_two(n)) {
    throw std::invalid_argument(
        "make_waveform: waveform length tp/ts must be a power of two");
  }
  if (n < m + 2) {
    throw std::invalid_argument(
        "make_waveform: waveform length must be at least m + 2");
  }
  // Transmitter m gets row m + 1 of the order-n Hadamard matrix in Paley
  // (bit-reversed) row order. Natural-order entry (r, c) is
  // (-1)^popcount(r & c); bit-reversing the row index keeps the rows
  // mutually orthogonal, makes them distinct per transmitter, and never
  // selects the all-ones row because bitrev(m + 1) != 0.
  int log2n = 0;
  while ((1 << log2n) < n) ++log2n;
  const unsigned paley = static_cast<unsigned>(m) + 1;
  unsigned row = 0;
  for (int bit = 0; bit < log2n; ++bit) {
    if (paley & (1u << bit)) row |= 1u << (log2n - 1 - bit);
  }
  RVec s(n);
  for (int col = 0; col < n; ++col) {
    const int bits = __builtin_popcount(row & static_cast<unsigned>(col));
    s(col) = (bits & 1) ? -1.0 : 1.0;
  }
  return s;
}

TimMatrix build_tim(const SceneConfig& scene,
                    const std::vector<TargetState>& targets, int m, int n) {
  const int l_len = scene.data_len();
  const int n_len = scene.waveform_len();
  const int q = scene.q_pulses;
  const int k_num = static_cast<int>(targets.size());
  const RVec s = make_waveform(scene, m);
  const double ts = scene.ts();
  const double fm = scene.carrier(m);

  TimMatrix tim;
  tim.m = m;
  tim.n = n;
  tim.a = CMat::Zero(l_len, k_num);
  tim.b = CMat::Zero(k_num, q);
  tim.lambda = CVec::Zero(k_num);
  tim.l_shifts.resize(k_num);

  for (int k = 0; k < k_num; ++k) {
    const TargetState& tgt = targets[k];
    const double tau = bistatic_delay(scene, tgt.position, m, n);
    const int shift = static_cast<int>(std::floor(tau / ts));
    if (shift + n_len > l_len) {
      throw std::domain_error(
          "build_tim: delayed waveform overruns the data window (delay " +
          std::to_string(tau) + " s exceeds tau_max support)");
    }
    tim.l_shifts[k] = shift;
    for (int i = 0; i < n_len; ++i) tim.a(shift + i, k) = cxd(s(i), 0.0);

    const double f = doppler_freq(scene, tgt.position, tgt.velocity, m, n);
    for (int qi = 0; qi < q; ++qi) {
      const double phase = 2.0 * kPi * f * qi * scene.t_pri;
      tim.b(k, qi) = cxd(std::cos(phase), std::sin(phase));
    }

    const double carrier_phase = -2.0 * kPi * (fm + f) * tau;
    tim.lambda(k) = tgt.reflectivity_for(m, n) *
                    cxd(std::cos(carrier_phase), std::sin(carrier_phase));
  }

  tim.x = tim.a * tim.lambda.asDiagonal() * tim.b;
  return tim;
}

CMat add_noise(const CMat& x, double sigma2, std::uint64_t seed) {
  if (sigma2 < 0.0) throw std::invalid_argument("add_noise: sigma2 < 0");
  CMat y = x;
  if (sigma2 == 0.0) return y;
  Rng rng(seed);
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      y(i, j) += rng.c_gaussian(sigma2);
    }
  }
  return y;
}

void randomize_reflectivities(std::vector<TargetState>& targets,
                              const SceneConfig& scene, Rng& rng) {
  for (TargetState& tgt : targets) {
    tgt.reflectivity.resize(scene.num_tx(), scene.num_rx());
    for (int m = 0; m < scene.num_tx(); ++m) {
      for (int n = 0; n < scene.num_rx(); ++n) {
        tgt.reflectivity(m, n) = rng.unit_phase();
      }
    }
  }
}

void validate_targets(const SceneConfig& scene,
                      const std::vector<TargetState>& targets) {
  const double f_limit = 0.5 / scene.t_pri;
  const int l_len = scene.data_len();
  const int n_len = scene.waveform_len();
  for (std::size_t k = 0; k < targets.size(); ++k) {
    for (int m = 0; m < scene.num_tx(); ++m) {
      for (int n = 0; n < scene.num_rx(); ++n) {
        const double tau = bistatic_delay(scene, targets[k].position, m, n);
        if (tau > scene.tau_max) {
          throw std::invalid_argument("target " + std::to_string(k) +
                                      " delay exceeds tau_max on pair (" +
                                      std::to_string(m) + "," +
                                      std::to_string(n) + ")");
        }
        if (static_cast<int>(std::floor(tau / scene.ts())) + n_len > l_len) {
          throw std::invalid_argument("target " + std::to_string(k) +
                                      " waveform overruns the data window");
        }
        const double f =
            doppler_freq(scene, targets[k].position, targets[k].velocity, m, n);
        if (std::abs(f) >= f_limit) {
          throw std::invalid_argument("target " + std::to_string(k) +
                                      " Doppler aliases in slow time");
        }
      }
    }
  }
}

}  // namespace qmimo
