#include "qmimo/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <tuple>

#include "qmimo/parallel.hpp"
#include "qmimo/rng.hpp"

namespace qmimo {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// 9 significant digits, the serialization contract of every CSV export.
std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::string(buf);
}

double median(std::vector<double> v) {
  if (v.empty()) return kNan;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

void QuantizerConfig::validate() const {
  if (bits < 1 || bits > 24) {
    throw std::invalid_argument("quantizer: bits must lie in [1, 24]");
  }
}

void ChannelConfig::validate() const {
  if (!(corruption_prob >= 0.0 && corruption_prob < 1.0)) {
    throw std::invalid_argument("channel: corruption_prob must lie in [0, 1)");
  }
}

void EstimatorConfig::validate() const {
  grid.validate();
  if (zero_pad < 1) {
    throw std::invalid_argument("estimator: zero_pad must be >= 1");
  }
}

void SweepPlan::validate() const {
  if (trials < 1) throw std::invalid_argument("sweep: trials must be >= 1");
  if (snr_db.empty()) throw std::invalid_argument("sweep: snr_db list is empty");
  if (bits.empty()) throw std::invalid_argument("sweep: bits list is empty");
  for (int b : bits) {
    if (b < 1 || b > 24) {
      throw std::invalid_argument("sweep: bit depths must lie in [1, 24]");
    }
  }
}

void ExperimentConfig::validate() const {
  scene.validate();
  if (targets.empty()) {
    throw std::invalid_argument("config: at least one target required");
  }
  validate_targets(scene, targets);
  quantizer.validate();
  channel.validate();
  estimator.validate();
  sweep.validate();
  // delta_q is filled per pair at run time; validate the remaining solver
  // fields with a placeholder cell width.
  QrpcaConfig s = solver;
  s.delta_q = 1.0;
  s.validate();
  // The bistatic delay is convex in the candidate position, so checking the
  // four grid corners bounds every grid point.
  const double x_max = estimator.grid.x_min + (estimator.grid.nx - 1) * estimator.grid.step;
  const double y_max = estimator.grid.y_min + (estimator.grid.ny - 1) * estimator.grid.step;
  const Vec2 corners[4] = {{estimator.grid.x_min, estimator.grid.y_min},
                           {estimator.grid.x_min, y_max},
                           {x_max, estimator.grid.y_min},
                           {x_max, y_max}};
  for (int m = 0; m < scene.num_tx(); ++m) {
    for (int n = 0; n < scene.num_rx(); ++n) {
      for (const Vec2& p : corners) {
        const double tau = bistatic_delay(scene, p, m, n);
        const int shift = static_cast<int>(std::floor(tau / scene.ts()));
        if (tau > scene.tau_max ||
            shift + scene.waveform_len() > scene.data_len()) {
          throw std::invalid_argument(
              "config: search grid corner exceeds the data window; raise "
              "max_delay_s or shrink the grid");
        }
      }
    }
  }
}

double rel_err(const CMat& estimate, const CMat& truth) {
  const double num = (estimate - truth).norm();
  const double den = truth.norm();
  if (den > 0.0) return num / den;
  return num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

Simulation simulate(const ExperimentConfig& cfg, double snr_db, int bits,
                    int trial) {
  if (bits < 1 || bits > 24) {
    throw std::invalid_argument("simulate: bits must lie in [1, 24]");
  }
  const SceneConfig& scene = cfg.scene;
  // Bit depth stays out of the seed: every bit depth (and the unquantized
  // baseline) then sees identical phases, noise, and corruption pattern at a
  // given (snr, trial), turning bit-depth comparisons into paired trials.
  const std::uint64_t cell = derive_seed(cfg.sweep.seed, seed_key(snr_db),
                                         static_cast<std::uint64_t>(trial));

  Simulation sim;
  sim.targets = cfg.targets;
  Rng phase_rng(derive_seed(cell, kPhaseStream));
  randomize_reflectivities(sim.targets, scene, phase_rng);

  const int pairs = scene.num_pairs();
  const double samples = static_cast<double>(scene.data_len()) * scene.q_pulses;
  sim.pairs.resize(static_cast<std::size_t>(pairs));

  double power_sum = 0.0;
  for (int m = 0; m < scene.num_tx(); ++m) {
    for (int n = 0; n < scene.num_rx(); ++n) {
      PairObservation& po = sim.pairs[static_cast<std::size_t>(scene.pair_index(m, n))];
      po.m = m;
      po.n = n;
      po.x_true = build_tim(scene, sim.targets, m, n).x;
      power_sum += po.x_true.squaredNorm();
    }
  }
  sim.signal_power = power_sum / (pairs * samples);
  sim.noise_var = sim.signal_power * std::pow(10.0, -snr_db / 10.0);

  const DteChannelSpec dte{cfg.channel.corruption_prob};
  for (std::size_t pi = 0; pi < sim.pairs.size(); ++pi) {
    PairObservation& po = sim.pairs[pi];
    po.y = add_noise(po.x_true, sim.noise_var,
                     derive_seed(cell, kNoiseStream, pi));

    QuantizerSpec spec;
    spec.levels = 1 << bits;
    spec.gamma = cfg.quantizer.gamma > 0.0
                     ? cfg.quantizer.gamma
                     : auto_gamma(po.x_true.squaredNorm() / samples,
                                  sim.noise_var);
    spec.validate();
    po.spec = spec;

    // The value-level channel consumes the identical draw sequence, so the
    // baseline sees the same corrupted entry set and replacement codes.
    const std::uint64_t dte_seed = derive_seed(cell, kDteStream, pi);
    DteResult rq = apply_dte(quantize(po.y, spec), spec, dte, dte_seed);
    po.z = std::move(rq.z);
    po.t_true = std::move(rq.t_tilde);
    DteResult rv = apply_dte_values(po.y, spec, dte, dte_seed);
    po.y_dte = std::move(rv.z);
    po.t_true_values = std::move(rv.t_tilde);
  }
  return sim;
}

TrialDetail run_trial_detailed(const ExperimentConfig& cfg, double snr_db,
                               int bits, int trial, bool baseline) {
  const auto t0 = std::chrono::steady_clock::now();
  const SceneConfig& scene = cfg.scene;
  const Simulation sim = simulate(cfg, snr_db, bits, trial);
  const int pairs = scene.num_pairs();

  TrialDetail out;
  out.solutions.resize(static_cast<std::size_t>(pairs));
  parallel_for(pairs, [&](int pi) {
    const PairObservation& po = sim.pairs[static_cast<std::size_t>(pi)];
    try {
      QrpcaConfig scfg = cfg.solver;
      scfg.delta_q = po.spec.delta();
      // Regularization follows the total per-sample perturbation scale
      // sqrt(delta^2 + 2 sigma_n^2): quantization box width plus receiver
      // noise, with the noise weight calibrated on desk-scale sweeps. With
      // no noise this is exactly the solver's own default pair
      // (mu = delta sqrt(dim), lambda = delta); the noise term keeps fine
      // quantizers from under-shrinking at low SNR. Both solver arms use
      // the same scale so quantized-vs-baseline stays a paired comparison.
      const double scale = std::sqrt(scfg.delta_q * scfg.delta_q +
                                     2.0 * sim.noise_var);
      if (cfg.solver.mu <= 0.0) {
        const double dim = static_cast<double>(
            std::max(scene.data_len(), scene.q_pulses));
        scfg.mu = scale * std::sqrt(dim);
      }
      if (cfg.solver.lambda <= 0.0) scfg.lambda = scale;
      out.solutions[static_cast<std::size_t>(pi)] =
          baseline ? rpca_baseline(po.y_dte, scfg) : apg_qrpca(po.z, scfg);
    } catch (const std::exception& e) {
      throw std::runtime_error("solve pair (m=" + std::to_string(po.m) +
                               ", n=" + std::to_string(po.n) + "): " + e.what());
    }
  });

  double num_x = 0.0, den_x = 0.0, num_t = 0.0, den_t = 0.0, abs_t = 0.0;
  std::vector<CMat> x_hats(static_cast<std::size_t>(pairs));
  for (std::size_t pi = 0; pi < x_hats.size(); ++pi) {
    const PairObservation& po = sim.pairs[pi];
    const QrpcaSolution& sol = out.solutions[pi];
    num_x += (sol.x_hat - po.x_true).squaredNorm();
    den_x += po.x_true.squaredNorm();
    const CMat& t_truth = baseline ? po.t_true_values : po.t_true;
    num_t += (sol.t_hat - t_truth).squaredNorm();
    den_t += t_truth.squaredNorm();
    abs_t += sol.t_hat.squaredNorm();
    x_hats[pi] = sol.x_hat;
  }

  const int k = static_cast<int>(sim.targets.size());
  try {
    out.estimate = estimate_all(x_hats, scene, cfg.estimator.grid, k,
                                cfg.estimator.zero_pad);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("estimate: ") + e.what());
  }

  // Greedy match of estimates (extraction order) to nearest remaining truth.
  std::vector<bool> used(sim.targets.size(), false);
  double pos_err = 0.0, vel_err = 0.0;
  for (int t = 0; t < k; ++t) {
    int best = -1;
    double best_d = 0.0;
    for (std::size_t j = 0; j < sim.targets.size(); ++j) {
      if (used[j]) continue;
      const double d = (out.estimate.positions[static_cast<std::size_t>(t)] -
                        sim.targets[j].position)
                           .norm();
      if (best < 0 || d < best_d) {
        best = static_cast<int>(j);
        best_d = d;
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    pos_err += best_d;
    vel_err += (out.estimate.velocities[static_cast<std::size_t>(t)] -
                sim.targets[static_cast<std::size_t>(best)].velocity)
                   .norm();
  }

  SweepRecord& r = out.record;
  r.snr_db = snr_db;
  r.bits = bits;
  r.trial = trial;
  r.rel_err_x = den_x > 0.0 ? std::sqrt(num_x / den_x) : std::sqrt(num_x);
  r.rel_err_t = den_t > 0.0 ? std::sqrt(num_t / den_t) : std::sqrt(abs_t);
  r.position_error_m = pos_err / k;
  r.velocity_error_mps = vel_err / k;
  int iters = 0;
  for (const QrpcaSolution& sol : out.solutions) {
    iters = std::max(iters, sol.iterations);
  }
  r.solver_iters = iters;
  r.wall_time_s = elapsed_s(t0);
  return out;
}

SweepRecord run_trial(const ExperimentConfig& cfg, double snr_db, int bits,
                      int trial, bool baseline) {
  return run_trial_detailed(cfg, snr_db, bits, trial, baseline).record;
}

std::vector<SweepRecord> run_sweep(const ExperimentConfig& cfg, bool baseline) {
  cfg.validate();
  struct Job {
    double snr;
    int bits;
    int trial;
  };
  std::vector<Job> jobs;
  for (double snr : cfg.sweep.snr_db) {
    for (int b : cfg.sweep.bits) {
      for (int t = 0; t < cfg.sweep.trials; ++t) jobs.push_back({snr, b, t});
    }
  }

  std::vector<SweepRecord> data(jobs.size());
  parallel_for(static_cast<int>(jobs.size()), [&](int i) {
    const Job& job = jobs[static_cast<std::size_t>(i)];
    try {
      data[static_cast<std::size_t>(i)] =
          run_trial(cfg, job.snr, job.bits, job.trial, baseline);
    } catch (const std::exception& e) {
      SweepRecord r;
      r.snr_db = job.snr;
      r.bits = job.bits;
      r.trial = job.trial;
      r.rel_err_x = r.rel_err_t = kNan;
      r.position_error_m = r.velocity_error_mps = kNan;
      r.solver_iters = kNan;
      r.status = "failed";
      data[static_cast<std::size_t>(i)] = std::move(r);
      std::fprintf(stderr, "trial failed (snr=%g, bits=%d, trial=%d): %s\n",
                   job.snr, job.bits, job.trial, e.what());
    }
  });

  // Interleave a mean row after each cell, means over the successful trials.
  std::vector<SweepRecord> rows;
  rows.reserve(data.size() + cfg.sweep.snr_db.size() * cfg.sweep.bits.size());
  std::size_t at = 0;
  for (double snr : cfg.sweep.snr_db) {
    for (int b : cfg.sweep.bits) {
      SweepRecord mean;
      mean.snr_db = snr;
      mean.bits = b;
      mean.trial = -1;
      mean.status = "mean";
      double sx = 0, st = 0, sp = 0, sv = 0, si = 0, sw = 0;
      int ok = 0;
      for (int t = 0; t < cfg.sweep.trials; ++t) {
        const SweepRecord& r = data[at++];
        rows.push_back(r);
        if (r.status != "ok") continue;
        ++ok;
        sx += r.rel_err_x;
        st += r.rel_err_t;
        sp += r.position_error_m;
        sv += r.velocity_error_mps;
        si += r.solver_iters;
        sw += r.wall_time_s;
      }
      if (ok > 0) {
        mean.rel_err_x = sx / ok;
        mean.rel_err_t = st / ok;
        mean.position_error_m = sp / ok;
        mean.velocity_error_mps = sv / ok;
        mean.solver_iters = si / ok;
        mean.wall_time_s = sw / ok;
      } else {
        mean.rel_err_x = mean.rel_err_t = kNan;
        mean.position_error_m = mean.velocity_error_mps = kNan;
        mean.solver_iters = kNan;
      }
      rows.push_back(std::move(mean));
    }
  }
  return rows;
}

std::vector<LocateRecord> run_locate(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.targets.size() != 1) {
    throw std::invalid_argument("locate: exactly one target required");
  }
  const double snr = cfg.sweep.snr_db.front();
  const int bits = cfg.sweep.bits.front();
  const Vec2 true_v = cfg.targets.front().velocity;

  std::vector<LocateRecord> rows(static_cast<std::size_t>(cfg.sweep.trials));
  parallel_for(cfg.sweep.trials, [&](int t) {
    const TrialDetail d = run_trial_detailed(cfg, snr, bits, t, false);
    LocateRecord& r = rows[static_cast<std::size_t>(t)];
    r.trial = t;
    r.est_x_m = d.estimate.positions[0](0);
    r.est_y_m = d.estimate.positions[0](1);
    r.est_vx_mps = d.estimate.velocities[0](0);
    r.est_vy_mps = d.estimate.velocities[0](1);
    r.position_error_m = d.record.position_error_m;
    r.velocity_error_x_mps = d.estimate.velocities[0](0) - true_v(0);
    r.velocity_error_y_mps = d.estimate.velocities[0](1) - true_v(1);
    r.solver_iters = d.record.solver_iters;
    r.wall_time_s = d.record.wall_time_s;
  });

  LocateRecord med;
  med.trial = -1;
  auto col = [&](auto get) {
    std::vector<double> v;
    v.reserve(rows.size());
    for (const LocateRecord& r : rows) v.push_back(get(r));
    return median(std::move(v));
  };
  med.est_x_m = col([](const LocateRecord& r) { return r.est_x_m; });
  med.est_y_m = col([](const LocateRecord& r) { return r.est_y_m; });
  med.est_vx_mps = col([](const LocateRecord& r) { return r.est_vx_mps; });
  med.est_vy_mps = col([](const LocateRecord& r) { return r.est_vy_mps; });
  med.position_error_m =
      col([](const LocateRecord& r) { return r.position_error_m; });
  med.velocity_error_x_mps =
      col([](const LocateRecord& r) { return r.velocity_error_x_mps; });
  med.velocity_error_y_mps =
      col([](const LocateRecord& r) { return r.velocity_error_y_mps; });
  med.solver_iters = col([](const LocateRecord& r) { return r.solver_iters; });
  med.wall_time_s = col([](const LocateRecord& r) { return r.wall_time_s; });
  rows.push_back(std::move(med));
  return rows;
}

std::string sweep_csv(const std::vector<SweepRecord>& rows) {
  std::string s =
      "snr_db,bits,trial,rel_err_x,rel_err_t,position_error_m,"
      "velocity_error_mps,solver_iters,status\n";
  for (const SweepRecord& r : rows) {
    s += fmt(r.snr_db) + ',' + std::to_string(r.bits) + ',' +
         std::to_string(r.trial) + ',' + fmt(r.rel_err_x) + ',' +
         fmt(r.rel_err_t) + ',' + fmt(r.position_error_m) + ',' +
         fmt(r.velocity_error_mps) + ',' + fmt(r.solver_iters) + ',' +
         r.status + '\n';
  }
  return s;
}

std::string locate_csv(const std::vector<LocateRecord>& rows) {
  std::string s =
      "trial,est_x_m,est_y_m,est_vx_mps,est_vy_mps,position_error_m,"
      "velocity_error_x_mps,velocity_error_y_mps,solver_iters\n";
  for (const LocateRecord& r : rows) {
    s += std::to_string(r.trial) + ',' + fmt(r.est_x_m) + ',' +
         fmt(r.est_y_m) + ',' + fmt(r.est_vx_mps) + ',' + fmt(r.est_vy_mps) +
         ',' + fmt(r.position_error_m) + ',' + fmt(r.velocity_error_x_mps) +
         ',' + fmt(r.velocity_error_y_mps) + ',' + fmt(r.solver_iters) + '\n';
  }
  return s;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_cmat(const std::string& path, const CMat& x) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write("QCM1", 4);
  const std::uint32_t dims[2] = {static_cast<std::uint32_t>(x.rows()),
                                 static_cast<std::uint32_t>(x.cols())};
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double parts[2] = {x(i, j).real(), x(i, j).imag()};
      out.write(reinterpret_cast<const char*>(parts), sizeof parts);
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

CMat read_cmat(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  char magic[4];
  std::uint32_t dims[2];
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(dims), sizeof dims);
  if (!in || std::string(magic, 4) != "QCM1") {
    throw std::invalid_argument("not a complex-matrix file: " + path);
  }
  CMat x(dims[0], dims[1]);
  for (std::uint32_t i = 0; i < dims[0]; ++i) {
    for (std::uint32_t j = 0; j < dims[1]; ++j) {
      double parts[2];
      in.read(reinterpret_cast<char*>(parts), sizeof parts);
      x(i, j) = cxd(parts[0], parts[1]);
    }
  }
  if (!in) throw std::invalid_argument("truncated complex-matrix file: " + path);
  return x;
}

namespace {

std::vector<Vec2> circle_layout(double radius, int count, double phase_deg) {
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double a = (phase_deg + 360.0 * i / count) * kPi / 180.0;
    out.emplace_back(radius * std::cos(a), radius * std::sin(a));
  }
  return out;
}

}  // namespace

ExperimentConfig default_sweep_config(bool paper_scale) {
  ExperimentConfig cfg;
  if (!paper_scale) {
    // Compact layout chosen so that every search-grid point has a unique
    // integer-delay signature across the six pairs.
    cfg.scene.tx_positions = {{-108.75338918204062, 300.95298692888827},
                              {-65.03412213702354, -313.32182011131414}};
    cfg.scene.rx_positions = {{253.78381184398975, 56.51351029563116},
                              {-194.34312187202292, 172.71580987574947},
                              {-192.39567934691374, -174.88253934752765}};
    cfg.scene.tp = 3.2e-6;
    cfg.scene.q_pulses = 64;
    cfg.scene.tau_max = 3.9e-6;
  } else {
    cfg.scene.tx_positions = circle_layout(5000.0, 3, 0.0);
    cfg.scene.rx_positions = circle_layout(3000.0, 10, 15.0);
    cfg.scene.tp = 6.4e-6;
    cfg.scene.q_pulses = 128;
    cfg.scene.tau_max = 4.0e-5;
  }
  TargetState t;
  t.position = Vec2(50.0, 30.0);
  t.velocity = Vec2(10.0, 10.0);
  cfg.targets = {t};
  cfg.estimator.grid.x_min = -200.0;
  cfg.estimator.grid.y_min = -200.0;
  cfg.estimator.grid.step = 10.0;
  cfg.estimator.grid.nx = 40;
  cfg.estimator.grid.ny = 40;
  return cfg;
}

ExperimentConfig default_locate_config(bool paper_scale) {
  ExperimentConfig cfg;
  if (!paper_scale) {
    cfg.scene.tx_positions = {{892.46961387924, 116.1808430948939},
                              {73.11843410823498, 897.0249130283728}};
    cfg.scene.rx_positions = {{-382.33277860315513, 586.3630670545263},
                              {-611.6702623336339, 340.3813892925161},
                              {642.6270086297757, -277.543740299698}};
    cfg.scene.tp = 3.2e-6;
    cfg.scene.q_pulses = 64;
    cfg.scene.tau_max = 1.18e-5;
  } else {
    cfg.scene.tx_positions = circle_layout(5000.0, 3, 0.0);
    cfg.scene.rx_positions = circle_layout(3000.0, 10, 15.0);
    cfg.scene.tp = 6.4e-6;
    cfg.scene.q_pulses = 128;
    cfg.scene.tau_max = 4.0e-5;
  }
  TargetState t;
  t.position = Vec2(1100.0, 1100.0);
  t.velocity = Vec2(10.0, 10.0);
  cfg.targets = {t};
  cfg.estimator.grid.x_min = 900.0;
  cfg.estimator.grid.y_min = 900.0;
  cfg.estimator.grid.step = 10.0;
  cfg.estimator.grid.nx = 40;
  cfg.estimator.grid.ny = 40;
  cfg.quantizer.bits = 4;
  cfg.sweep.snr_db = {20.0};
  cfg.sweep.bits = {4};
  cfg.sweep.trials = 20;
  return cfg;
}

}  // namespace qmimo
