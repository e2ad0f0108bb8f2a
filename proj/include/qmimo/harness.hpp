#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qmimo/estimator.hpp"
#include "qmimo/qrpca.hpp"
#include "qmimo/quantizer.hpp"
#include "qmimo/scene.hpp"

namespace qmimo {

// End-to-end experiment harness: scene synthesis, quantization and
// transmission, recovery, parameter estimation, Monte-Carlo sweeps over
// SNR and bit depth, and CSV/JSON export.
//
// Reproducibility contract: every random draw in a sweep is a pure function
// of the master seed. Each (snr, bits, trial) cell derives its own seed from
// the cell values (not loop indices), so re-running a subset of cells
// reproduces exactly the rows of the full sweep. Within a cell, reflectivity
// phases, per-pair noise, and per-pair corruption patterns use separate
// derived substreams, which keeps trials independent of execution order and
// lets the unquantized baseline consume the identical realizations.

// Substream labels under a cell seed.
inline constexpr std::uint64_t kPhaseStream = 1;
inline constexpr std::uint64_t kNoiseStream = 2;
inline constexpr std::uint64_t kDteStream = 3;

struct QuantizerConfig {
  int bits = 4;        // codes per real/imaginary part are 2^bits levels
  double gamma = 0.0;  // clipping range; <= 0 selects the three-sigma rule
                       // per pair: 3 * sqrt((signal_power + noise_var) / 2)

  void validate() const;
};

struct ChannelConfig {
  double corruption_prob = 0.01;

  void validate() const;
};

struct EstimatorConfig {
  SearchGrid grid;
  int zero_pad = 8;  // slow-time DFT zero padding factor

  void validate() const;
};

struct SweepPlan {
  std::vector<double> snr_db{0.0, 10.0, 20.0, 30.0};
  std::vector<int> bits{2, 4, 6};
  int trials = 50;
  std::uint64_t seed = 20260817ULL;  // master seed

  void validate() const;
};

struct ExperimentConfig {
  SceneConfig scene;
  std::vector<TargetState> targets;
  QuantizerConfig quantizer;
  ChannelConfig channel;
  QrpcaConfig solver;  // delta_q ignored; set per pair from the cell width
  EstimatorConfig estimator;
  SweepPlan sweep;
  std::string out_dir = ".";

  void validate() const;
};

// Relative Frobenius recovery error ||estimate - truth||_F / ||truth||_F.
// A zero truth returns 0 for a zero estimate and infinity otherwise.
double rel_err(const CMat& estimate, const CMat& truth);

// One Monte-Carlo result row. wall_time_s is kept out of the CSV export so
// that repeated runs stay byte-identical; it is aggregated into the run
// manifest instead.
struct SweepRecord {
  double snr_db = 0.0;
  int bits = 0;
  int trial = 0;  // -1 marks a per-cell mean row
  double rel_err_x = 0.0;       // ||X_hat - X||_F / ||X||_F, pairs stacked
  double rel_err_t = 0.0;       // same for the corruption matrix
  double position_error_m = 0.0;
  double velocity_error_mps = 0.0;
  double solver_iters = 0.0;  // max over pairs; fractional in mean rows
  double wall_time_s = 0.0;
  std::string status = "ok";  // ok | failed:<stage> | mean
};

// One localization trial at a fixed (snr, bits) cell.
struct LocateRecord {
  int trial = 0;  // -1 marks the median summary row
  double est_x_m = 0.0;
  double est_y_m = 0.0;
  double est_vx_mps = 0.0;
  double est_vy_mps = 0.0;
  double position_error_m = 0.0;
  double velocity_error_x_mps = 0.0;
  double velocity_error_y_mps = 0.0;
  double solver_iters = 0.0;
  double wall_time_s = 0.0;
};

// Per-pair synthesized observation for one trial.
struct PairObservation {
  int m = 0;
  int n = 0;
  CMat x_true;        // noiseless data matrix
  CMat y;             // x_true + receiver noise
  QuantizerSpec spec; // quantizer actually applied (resolved gamma)
  CMat z;             // quantized y after the transmission channel
  CMat t_true;        // injected corruption on the quantized codes
  CMat y_dte;         // y after the value-level channel (baseline input)
  CMat t_true_values; // injected corruption of the value-level channel
};

struct Simulation {
  std::vector<PairObservation> pairs;  // indexed by scene.pair_index(m, n)
  std::vector<TargetState> targets;    // with the trial's reflectivities
  double signal_power = 0.0;  // mean over pairs of ||X||_F^2 / (L*Q)
  double noise_var = 0.0;     // per-entry complex noise variance from the SNR
};

// Synthesizes one trial's observations for every pair: reflectivity phases,
// data matrices, noise at the requested SNR (mean per-sample signal power
// over pairs divided by the noise variance), quantization, and the
// transmission channel. Deterministic in (cfg.sweep.seed, snr_db, bits,
// trial).
Simulation simulate(const ExperimentConfig& cfg, double snr_db, int bits,
                    int trial);

// Full result of one trial, for callers that need more than the record.
struct TrialDetail {
  SweepRecord record;
  EstimationResult estimate;
  std::vector<QrpcaSolution> solutions;  // per pair
};

// Runs one end-to-end trial: simulate, recover per pair (quantized solver,
// or the unquantized baseline on the value-corrupted data when baseline is
// set), estimate positions and velocities, compute metrics. Relative errors
// stack all pairs into one Frobenius norm; when the injected corruption is
// exactly zero the t error falls back to the absolute norm of the estimate.
// With several targets, estimates are matched greedily to the nearest
// remaining truth and errors are averaged. solver_iters is the maximum over
// pairs. Module errors propagate tagged with the pair that raised them.
TrialDetail run_trial_detailed(const ExperimentConfig& cfg, double snr_db,
                               int bits, int trial, bool baseline = false);

SweepRecord run_trial(const ExperimentConfig& cfg, double snr_db, int bits,
                      int trial, bool baseline = false);

// Cartesian sweep over cfg.sweep (snr outer, bits inner, then trials). Rows
// arrive in deterministic order regardless of thread scheduling; each cell
// is followed by a mean row (trial = -1, means over its successful trials).
// A trial that throws is flagged in status with NaN metrics and the sweep
// continues. With baseline set, every cell is solved by the unquantized
// baseline on the identical realizations instead.
std::vector<SweepRecord> run_sweep(const ExperimentConfig& cfg,
                                   bool baseline = false);

// Localization experiment at the cell (sweep.snr_db[0], sweep.bits[0]) over
// sweep.trials trials, followed by a median summary row (trial = -1).
// Requires exactly one target.
std::vector<LocateRecord> run_locate(const ExperimentConfig& cfg);

// CSV export. Fixed column order, one header line, floats with 9 significant
// digits, '\n' line ends. Timing columns are deliberately absent.
std::string sweep_csv(const std::vector<SweepRecord>& rows);
std::string locate_csv(const std::vector<LocateRecord>& rows);
void write_text_file(const std::string& path, const std::string& content);

// Raw complex-matrix file: magic "QCM1", little-endian uint32 rows and cols,
// then row-major float64 (real, imag) pairs. Used to pass recovered matrices
// between CLI stages.
void write_cmat(const std::string& path, const CMat& x);
CMat read_cmat(const std::string& path);

// Default experiment configurations. Desk scale keeps the acceptance suite
// fast; paper scale selects the 3x10-antenna concentric-circle layout with
// Q = 128 pulses and N = 64 chips.
ExperimentConfig default_sweep_config(bool paper_scale = false);
ExperimentConfig default_locate_config(bool paper_scale = false);

}  // namespace qmimo
