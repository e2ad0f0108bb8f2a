// Command-line driver for the quantized distributed-MIMO pipeline.
//
// Subcommands:
//   simulate  synthesize one trial and emit bit-packed observations per pair
//   solve     recover (X^, T^) from stored bit-packed observations
//   estimate  positions/velocities from stored recovered matrices
//   sweep     Monte-Carlo SNR x bit-depth sweep to CSV (+ run manifest)
//   locate    repeated single-target localization to CSV (+ run manifest)
//   print-config  emit a default configuration as JSON
//
// Every subcommand accepts --config/--seed/--out/--paper-scale; defaults are
// the built-in desk-scale scenes.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qmimo/config_io.hpp"
#include "qmimo/harness.hpp"
#include "qmimo/rng.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qmimo;

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool paper_scale = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "Configuration JSON path");
  cmd->add_option("--out", opts.out_dir, "Output directory");
  cmd->add_option("--seed", opts.seed, "Master seed override")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
  cmd->add_flag("--paper-scale", opts.paper_scale,
                "Use the full-scale default scene (3x10 antennas, Q=128)");
}

ExperimentConfig resolve_config(const CommonOpts& opts, bool locate_default) {
  ExperimentConfig cfg = opts.config_path.empty()
                             ? (locate_default
                                    ? default_locate_config(opts.paper_scale)
                                    : default_sweep_config(opts.paper_scale))
                             : load_config(opts.config_path);
  if (opts.seed_set) cfg.sweep.seed = opts.seed;
  if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
  fs::create_directories(cfg.out_dir);
  return cfg;
}

double run_seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

int cmd_simulate(const CommonOpts& opts, int trial, bool dump_truth) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = resolve_config(opts, /*locate_default=*/false);
  cfg.validate();
  const double snr = cfg.sweep.snr_db.front();
  const int bits = cfg.quantizer.bits;
  const Simulation sim = simulate(cfg, snr, bits, trial);

  json manifest;
  manifest["snr_db"] = snr;
  manifest["bits"] = bits;
  manifest["trial"] = trial;
  manifest["noise_var"] = sim.noise_var;
  manifest["signal_power"] = sim.signal_power;
  manifest["pairs"] = json::array();
  for (const PairObservation& po : sim.pairs) {
    const std::string stem =
        "z_m" + std::to_string(po.m) + "_n" + std::to_string(po.n);
    const std::string packed = (fs::path(cfg.out_dir) / (stem + ".qbm")).string();
    write_packed(packed, po.z, po.spec);
    json entry = {{"m", po.m},         {"n", po.n},
                  {"file", stem + ".qbm"}, {"gamma", po.spec.gamma},
                  {"levels", po.spec.levels}};
    if (dump_truth) {
      write_cmat((fs::path(cfg.out_dir) / (stem + ".x_true.cmat")).string(),
                 po.x_true);
      write_cmat((fs::path(cfg.out_dir) / (stem + ".t_true.cmat")).string(),
                 po.t_true);
      entry["x_true"] = stem + ".x_true.cmat";
      entry["t_true"] = stem + ".t_true.cmat";
    }
    manifest["pairs"].push_back(entry);
  }
  manifest["bit_volume"] =
      bit_volume(cfg.scene.num_tx(), cfg.scene.num_rx(), cfg.scene.data_len(),
                 cfg.scene.q_pulses, bits);
  if (dump_truth) {
    json targets = json::array();
    for (const TargetState& t : sim.targets) {
      targets.push_back({{"position_m", {t.position(0), t.position(1)}},
                         {"velocity_mps", {t.velocity(0), t.velocity(1)}}});
    }
    manifest["targets"] = targets;
  }
  manifest["elapsed_s"] = run_seconds(t0);
  write_text_file((fs::path(cfg.out_dir) / "sim_manifest.json").string(),
                  manifest.dump(2) + "\n");
  std::printf("wrote %zu observation files to %s\n", sim.pairs.size(),
              cfg.out_dir.c_str());
  return 0;
}

int cmd_solve(const CommonOpts& opts, const std::vector<std::string>& inputs,
              bool trace) {
  const ExperimentConfig cfg = resolve_config(opts, /*locate_default=*/false);
  for (const std::string& path : inputs) {
    const PackedMatrix pm = read_packed(path);
    QrpcaConfig scfg = cfg.solver;
    scfg.delta_q = pm.spec.delta();
    const QrpcaSolution sol = apg_qrpca(pm.z, scfg);

    const fs::path in(path);
    const fs::path dir = in.parent_path().empty() ? fs::path(cfg.out_dir)
                                                  : in.parent_path();
    const std::string stem = in.stem().string();
    write_cmat((dir / (stem + ".x_hat.cmat")).string(), sol.x_hat);
    write_cmat((dir / (stem + ".t_hat.cmat")).string(), sol.t_hat);
    if (trace) {
      std::string csv = "iter,objective\n";
      for (std::size_t i = 0; i < sol.objective_trace.size(); ++i) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%zu,%.9g\n", i,
                      sol.objective_trace[i]);
        csv += buf;
      }
      write_text_file((dir / (stem + ".trace.csv")).string(), csv);
    }
    std::printf("%s: %d iterations, %s\n", path.c_str(), sol.iterations,
                sol.converged ? "converged" : "iteration cap");
  }
  return 0;
}

int cmd_estimate(const CommonOpts& opts, const std::vector<std::string>& inputs,
                 bool maps) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = resolve_config(opts, /*locate_default=*/false);
  cfg.validate();
  const SceneConfig& scene = cfg.scene;
  if (static_cast<int>(inputs.size()) != scene.num_pairs()) {
    throw std::invalid_argument(
        "estimate: expected one recovered matrix per pair, in pair-major "
        "order (m outer, n inner)");
  }
  std::vector<CMat> x_hats;
  x_hats.reserve(inputs.size());
  for (const std::string& path : inputs) x_hats.push_back(read_cmat(path));

  const int k = static_cast<int>(cfg.targets.size());
  EstimationResult est = estimate_all(x_hats, scene, cfg.estimator.grid, k,
                                      cfg.estimator.zero_pad);

  json out;
  out["num_targets"] = k;
  out["positions_m"] = json::array();
  out["velocities_mps"] = json::array();
  for (int t = 0; t < k; ++t) {
    out["positions_m"].push_back(
        {est.positions[static_cast<std::size_t>(t)](0),
         est.positions[static_cast<std::size_t>(t)](1)});
    out["velocities_mps"].push_back(
        {est.velocities[static_cast<std::size_t>(t)](0),
         est.velocities[static_cast<std::size_t>(t)](1)});
  }
  out["doppler_hz"] = json::array();
  for (int pi = 0; pi < scene.num_pairs(); ++pi) {
    json row = json::array();
    for (int t = 0; t < k; ++t) row.push_back(est.doppler(pi, t));
    out["doppler_hz"].push_back(row);
  }
  out["elapsed_s"] = run_seconds(t0);
  write_text_file((fs::path(cfg.out_dir) / "estimate.json").string(),
                  out.dump(2) + "\n");

  if (maps) {
    // Residual surface as an ny x nx CSV grid (row-major in y).
    std::string csv;
    for (int iy = 0; iy < cfg.estimator.grid.ny; ++iy) {
      for (int ix = 0; ix < cfg.estimator.grid.nx; ++ix) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.9g",
                      est.residual_map(iy * cfg.estimator.grid.nx + ix));
        csv += buf;
        csv += (ix + 1 == cfg.estimator.grid.nx) ? '\n' : ',';
      }
    }
    write_text_file((fs::path(cfg.out_dir) / "residual_map.csv").string(), csv);

    // Doppler spectra per pair and target.
    for (int m = 0; m < scene.num_tx(); ++m) {
      for (int n = 0; n < scene.num_rx(); ++n) {
        const int pi = scene.pair_index(m, n);
        const CMat xi = recover_xi(x_hats[static_cast<std::size_t>(pi)],
                                   est.positions, scene, m, n);
        for (int t = 0; t < k; ++t) {
          const RVec spec = doppler_spectrum(xi.row(t).transpose(),
                                             cfg.estimator.zero_pad);
          std::string csv2 = "bin,freq_hz,magnitude\n";
          const int p = static_cast<int>(spec.size());
          for (int i = 0; i < p; ++i) {
            const int si = i <= p / 2 ? i : i - p;
            char buf[96];
            std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g\n", i,
                          si / (p * scene.t_pri), spec(i));
            csv2 += buf;
          }
          const std::string name = "doppler_m" + std::to_string(m) + "_n" +
                                   std::to_string(n) + "_k" +
                                   std::to_string(t) + ".csv";
          write_text_file((fs::path(cfg.out_dir) / name).string(), csv2);
        }
      }
    }
  }
  std::printf("wrote %s\n",
              (fs::path(cfg.out_dir) / "estimate.json").string().c_str());
  return 0;
}

int cmd_sweep(const CommonOpts& opts, bool baseline) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = resolve_config(opts, /*locate_default=*/false);
  const std::vector<SweepRecord> rows = run_sweep(cfg, baseline);
  const std::string name = baseline ? "sweep_baseline" : "sweep";
  const std::string csv_path = (fs::path(cfg.out_dir) / (name + ".csv")).string();
  write_text_file(csv_path, sweep_csv(rows));
  write_manifest((fs::path(cfg.out_dir) / (name + "_manifest.json")).string(),
                 cfg, baseline ? "sweep --baseline" : "sweep",
                 run_seconds(t0), rows.size());
  std::printf("wrote %s (%zu rows)\n", csv_path.c_str(), rows.size());
  return 0;
}

int cmd_locate(const CommonOpts& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = resolve_config(opts, /*locate_default=*/true);
  const std::vector<LocateRecord> rows = run_locate(cfg);
  const std::string csv_path = (fs::path(cfg.out_dir) / "locate.csv").string();
  write_text_file(csv_path, locate_csv(rows));
  write_manifest((fs::path(cfg.out_dir) / "locate_manifest.json").string(),
                 cfg, "locate", run_seconds(t0), rows.size());
  std::printf("wrote %s (%zu rows)\n", csv_path.c_str(), rows.size());
  return 0;
}

int cmd_print_config(const CommonOpts& opts, bool locate) {
  const ExperimentConfig cfg = opts.config_path.empty()
                                   ? (locate ? default_locate_config(opts.paper_scale)
                                             : default_sweep_config(opts.paper_scale))
                                   : load_config(opts.config_path);
  std::fputs(config_to_json(cfg).c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-bit quantized distributed MIMO radar toolkit"};
  app.require_subcommand(1);

  CommonOpts sim_opts, solve_opts, est_opts, sweep_opts, locate_opts, print_opts;
  int sim_trial = 0;
  bool sim_dump_truth = false;
  std::vector<std::string> solve_inputs, est_inputs;
  bool solve_trace = false, est_maps = false, sweep_baseline = false,
       print_locate = false;

  CLI::App* sim = app.add_subcommand(
      "simulate", "Synthesize quantized observations for one trial");
  add_common(sim, sim_opts);
  sim->add_option("--trial", sim_trial, "Trial index (default 0)");
  sim->add_flag("--dump-truth", sim_dump_truth,
                "Also write ground-truth matrices and target states");

  CLI::App* solve = app.add_subcommand(
      "solve", "Recover low-rank and sparse parts from packed observations");
  add_common(solve, solve_opts);
  solve->add_option("inputs", solve_inputs, "Bit-packed observation files")
      ->required()
      ->check(CLI::ExistingFile);
  solve->add_flag("--trace", solve_trace, "Write per-iteration objective CSVs");

  CLI::App* est = app.add_subcommand(
      "estimate", "Estimate positions and velocities from recovered matrices");
  add_common(est, est_opts);
  est->add_option("inputs", est_inputs,
                  "Recovered matrices, one per pair (m outer, n inner)")
      ->required()
      ->check(CLI::ExistingFile);
  est->add_flag("--maps", est_maps,
                "Also write the residual surface and Doppler spectra");

  CLI::App* sweep =
      app.add_subcommand("sweep", "Monte-Carlo sweep over SNR and bit depth");
  add_common(sweep, sweep_opts);
  sweep->add_flag("--baseline", sweep_baseline,
                  "Solve the unquantized baseline on identical realizations");

  CLI::App* locate =
      app.add_subcommand("locate", "Repeated single-target localization");
  add_common(locate, locate_opts);

  CLI::App* print = app.add_subcommand(
      "print-config", "Print the effective configuration as JSON");
  add_common(print, print_opts);
  print->add_flag("--locate", print_locate,
                  "Print the localization default instead of the sweep default");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(sim_opts, sim_trial, sim_dump_truth);
    if (solve->parsed()) return cmd_solve(solve_opts, solve_inputs, solve_trace);
    if (est->parsed()) return cmd_estimate(est_opts, est_inputs, est_maps);
    if (sweep->parsed()) return cmd_sweep(sweep_opts, sweep_baseline);
    if (locate->parsed()) return cmd_locate(locate_opts);
    if (print->parsed()) return cmd_print_config(print_opts, print_locate);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
