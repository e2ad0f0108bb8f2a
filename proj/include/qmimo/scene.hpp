#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "qmimo/rng.hpp"
#include "qmimo/types.hpp"

namespace qmimo {

// Discrete received-data model for a distributed FDMA MIMO radar.
//
// M_t transmitters and M_r receivers sit at fixed 2-D positions. Transmitter
// m emits a length-N binary waveform s_m on carrier f_m = f0 + m*delta_f
// (carriers spaced by at least the waveform bandwidth B0, so receivers
// separate transmitters by filtering). A target at position p with velocity
// vel produces, on pair (m, n):
//
//   bistatic delay    tau = (||p - p_t^m|| + ||p - p_r^n||) / c
//   Doppler frequency f   = (f_m / c) * (<vel, u_t> + <vel, u_r>)
//
// with u_t, u_r the unit vectors from transmitter/receiver to the target.
// Sampling at T_s = 1/B0 over Q pulses yields the L x Q target information
// matrix
//
//   X_mn = A_mn * diag(beta) * B_mn
//
// where column k of A_mn is s_m delayed by L_k = floor(tau_k / T_s) samples
// and zero-padded to L = floor((T_p + tau_max) / T_s), row k of B_mn is the
// slow-time phase progression exp(j 2 pi f_k q T_PRI), and
// beta_k = reflectivity_k * exp(-j 2 pi (f_m + f_k) tau_k). rank(X_mn) <= K
// by construction.

struct SceneConfig {
  std::vector<Vec2> tx_positions;  // transmitter coordinates [m]
  std::vector<Vec2> rx_positions;  // receiver coordinates [m]
  double f0 = 5e9;                 // first carrier [Hz]
  double delta_f = 50e6;           // carrier spacing [Hz], >= b0
  double b0 = 10e6;                // waveform bandwidth [Hz]; T_s = 1/b0
  double tp = 3.2e-6;              // pulse duration [s]; N = tp/ts, power of 2
  double t_pri = 5e-4;             // pulse repetition interval [s]
  int q_pulses = 64;               // slow-time samples Q
  double tau_max = 3.9e-6;         // maximum supported bistatic delay [s]
  double noise_var = 0.0;          // default per-entry complex noise variance
  double c = kSpeedOfLight;        // propagation speed [m/s]

  int num_tx() const { return static_cast<int>(tx_positions.size()); }
  int num_rx() const { return static_cast<int>(rx_positions.size()); }
  int num_pairs() const { return num_tx() * num_rx(); }
  double ts() const { return 1.0 / b0; }
  // Waveform length N = tp / ts, exact by construction of valid configs.
  int waveform_len() const { return static_cast<int>(std::lround(tp / ts())); }
  // Fast-time data length L = floor((tp + tau_max) / ts). The tiny epsilon
  // keeps exact-integer ratios from flooring down through rounding.
  int data_len() const {
    return static_cast<int>(std::floor((tp + tau_max) / ts() + 1e-9));
  }
  double carrier(int m) const { return f0 + m * delta_f; }
  int pair_index(int m, int n) const { return m * num_rx() + n; }

  // Throws std::invalid_argument when a structural invariant fails:
  // at least one tx and rx, delta_f >= b0, N a power of two >= 2,
  // t_pri > tp + tau_max, positive q_pulses / tau_max / b0.
  void validate() const;
};

struct TargetState {
  Vec2 position{0.0, 0.0};  // [m]
  Vec2 velocity{0.0, 0.0};  // [m/s]
  // Per-pair complex reflectivity beta~_mn (M_t x M_r). Unit magnitude with
  // random phase in Monte-Carlo runs; defaults to 1 when empty.
  CMat reflectivity;

  cxd reflectivity_for(int m, int n) const {
    if (reflectivity.size() == 0) return cxd(1.0, 0.0);
    return reflectivity(m, n);
  }
};

// One pair's target information matrix together with its factorization.
struct TimMatrix {
  CMat x;                    // L x Q data matrix
  CMat a;                    // L x K delayed-waveform columns
  CVec lambda;               // K scaled reflectivities (diagonal of Lambda)
  CMat b;                    // K x Q slow-time phase rows
  std::vector<int> l_shifts; // integer delays L_k = floor(tau_k / ts)
  int m = 0;                 // transmitter index
  int n = 0;                 // receiver index
};

// Bistatic delay tau_mn(p) in seconds. Total function of the geometry.
double bistatic_delay(const SceneConfig& scene, const Vec2& p, int m, int n);

// Bistatic Doppler shift f_mn(p, vel) in Hz. Throws std::domain_error when
// the target coincides with the transmitter or receiver position.
double doppler_freq(const SceneConfig& scene, const Vec2& p, const Vec2& vel,
                    int m, int n);

// Length-N +/-1 waveform of transmitter m: row (m+1) of the order-N
// Hadamard matrix in Paley (bit-reversed) row order, so the all-ones row is
// never assigned. Distinct transmitters get exactly orthogonal rows.
// Requires N >= m + 2.
RVec make_waveform(const SceneConfig& scene, int m);

// Builds the target information matrix for pair (m, n) from K target states.
// Throws std::domain_error when a delayed waveform overruns the data window
// (L_k + N > L, i.e. the target delay exceeds tau_max).
TimMatrix build_tim(const SceneConfig& scene,
                    const std::vector<TargetState>& targets, int m, int n);

// y = x + W with W i.i.d. circular complex Gaussian, variance sigma2 per
// entry (sigma2/2 per real part). Deterministic in the seed; entries are
// drawn in row-major order.
CMat add_noise(const CMat& x, double sigma2, std::uint64_t seed);

// Draws unit-magnitude uniform-phase reflectivities for every target and
// pair. One phase per (k, m, n), drawn in that nesting order.
void randomize_reflectivities(std::vector<TargetState>& targets,
                              const SceneConfig& scene, Rng& rng);

// Throws std::invalid_argument when a target violates the scene contract:
// delay above tau_max on some pair, delayed waveform overrunning the window,
// or |Doppler| >= 1/(2 t_pri) (would alias in slow time).
void validate_targets(const SceneConfig& scene,
                      const std::vector<TargetState>& targets);

}  // namespace qmimo
