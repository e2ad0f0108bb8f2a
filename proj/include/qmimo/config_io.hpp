#pragma once

#include <string>

#include "qmimo/harness.hpp"

namespace qmimo {

// JSON serialization of experiment configurations.
//
// Schema (all units SI): top-level keys `scene`, `targets`, `quantizer`,
// `channel`, `solver`, `estimator`, `sweep`, plus optional `out_dir`.
// Missing keys keep their defaults; unknown keys are rejected so typos
// surface as errors instead of silently ignored settings.
//
//   scene:     tx_positions_m [[x,y]...], rx_positions_m [[x,y]...],
//              first_carrier_hz, carrier_spacing_hz, bandwidth_hz,
//              pulse_duration_s, pri_s, pulses, max_delay_s
//   targets:   [{position_m: [x,y], velocity_mps: [vx,vy]}, ...]
//   quantizer: bits, gamma (0 selects the per-pair three-sigma rule)
//   channel:   corruption_prob
//   solver:    mu, lambda (0 selects the cell-width-scaled defaults),
//              step, max_iter, tol, backtracking
//   estimator: grid {x_min_m, y_min_m, step_m, nx, ny}, zero_pad
//   sweep:     snr_db [...], bits [...], trials, seed

std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);

ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& cfg, const std::string& path);

// Run manifest: config echo, code version, command, timing, row count.
// Written next to each CSV export; not covered by the byte-identical
// reproducibility contract (it carries wall-clock timings).
void write_manifest(const std::string& path, const ExperimentConfig& cfg,
                    const std::string& command, double elapsed_seconds,
                    std::size_t rows);

}  // namespace qmimo
