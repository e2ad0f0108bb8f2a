// Python bindings for the quantized distributed-MIMO toolkit. The surface
// mirrors the C++ headers one-to-one; matrices cross the boundary as numpy
// arrays via Eigen.

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qmimo/config_io.hpp"
#include "qmimo/estimator.hpp"
#include "qmimo/harness.hpp"
#include "qmimo/qrpca.hpp"
#include "qmimo/quantizer.hpp"
#include "qmimo/rng.hpp"
#include "qmimo/scene.hpp"

namespace py = pybind11;
using namespace qmimo;

PYBIND11_MODULE(_qmimo, m) {
  m.doc() = "Low-bit quantized distributed MIMO radar toolkit";
  m.attr("__version__") = kVersion;
  m.attr("SPEED_OF_LIGHT") = kSpeedOfLight;

  // scene
  py::class_<SceneConfig>(m, "SceneConfig")
      .def(py::init<>())
      .def_readwrite("tx_positions", &SceneConfig::tx_positions)
      .def_readwrite("rx_positions", &SceneConfig::rx_positions)
      .def_readwrite("f0", &SceneConfig::f0)
      .def_readwrite("delta_f", &SceneConfig::delta_f)
      .def_readwrite("b0", &SceneConfig::b0)
      .def_readwrite("tp", &SceneConfig::tp)
      .def_readwrite("t_pri", &SceneConfig::t_pri)
      .def_readwrite("q_pulses", &SceneConfig::q_pulses)
      .def_readwrite("tau_max", &SceneConfig::tau_max)
      .def_readwrite("noise_var", &SceneConfig::noise_var)
      .def_readwrite("c", &SceneConfig::c)
      .def("num_tx", &SceneConfig::num_tx)
      .def("num_rx", &SceneConfig::num_rx)
      .def("num_pairs", &SceneConfig::num_pairs)
      .def("ts", &SceneConfig::ts)
      .def("waveform_len", &SceneConfig::waveform_len)
      .def("data_len", &SceneConfig::data_len)
      .def("carrier", &SceneConfig::carrier, py::arg("m"))
      .def("pair_index", &SceneConfig::pair_index, py::arg("m"), py::arg("n"))
      .def("validate", &SceneConfig::validate);

  py::class_<TargetState>(m, "TargetState")
      .def(py::init<>())
      .def_readwrite("position", &TargetState::position)
      .def_readwrite("velocity", &TargetState::velocity)
      .def_readwrite("reflectivity", &TargetState::reflectivity)
      .def("reflectivity_for", &TargetState::reflectivity_for, py::arg("m"),
           py::arg("n"));

  py::class_<TimMatrix>(m, "TimMatrix")
      .def_readonly("x", &TimMatrix::x)
      .def_readonly("a", &TimMatrix::a)
      .def_readonly("lambda_", &TimMatrix::lambda)
      .def_readonly("b", &TimMatrix::b)
      .def_readonly("l_shifts", &TimMatrix::l_shifts)
      .def_readonly("m", &TimMatrix::m)
      .def_readonly("n", &TimMatrix::n);

  m.def("bistatic_delay", &bistatic_delay, py::arg("scene"), py::arg("p"),
        py::arg("m"), py::arg("n"));
  m.def("doppler_freq", &doppler_freq, py::arg("scene"), py::arg("p"),
        py::arg("vel"), py::arg("m"), py::arg("n"));
  m.def("make_waveform", &make_waveform, py::arg("scene"), py::arg("m"));
  m.def("build_tim", &build_tim, py::arg("scene"), py::arg("targets"),
        py::arg("m"), py::arg("n"));
  m.def("add_noise", &add_noise, py::arg("x"), py::arg("sigma2"),
        py::arg("seed"));

  // quantizer and channel
  py::class_<QuantizerSpec>(m, "QuantizerSpec")
      .def(py::init<>())
      .def_readwrite("gamma", &QuantizerSpec::gamma)
      .def_readwrite("levels", &QuantizerSpec::levels)
      .def("delta", &QuantizerSpec::delta)
      .def("bits", &QuantizerSpec::bits)
      .def("validate", &QuantizerSpec::validate);

  py::class_<DteChannelSpec>(m, "DteChannelSpec")
      .def(py::init<>())
      .def_readwrite("corruption_prob", &DteChannelSpec::corruption_prob)
      .def("validate", &DteChannelSpec::validate);

  m.def("quantize_level", &quantize_level, py::arg("x"), py::arg("spec"));
  m.def("level_value", &level_value, py::arg("level"), py::arg("spec"));
  m.def("quantize_real", &quantize_real, py::arg("x"), py::arg("spec"));
  m.def("quantize", &quantize, py::arg("y"), py::arg("spec"));
  m.def(
      "apply_dte",
      [](const CMat& z, const QuantizerSpec& spec, const DteChannelSpec& ch,
         std::uint64_t seed) {
        DteResult r = apply_dte(z, spec, ch, seed);
        return py::make_tuple(r.z, r.t_tilde);
      },
      py::arg("z"), py::arg("spec"), py::arg("channel"), py::arg("seed"));
  m.def(
      "apply_dte_values",
      [](const CMat& y, const QuantizerSpec& spec, const DteChannelSpec& ch,
         std::uint64_t seed) {
        DteResult r = apply_dte_values(y, spec, ch, seed);
        return py::make_tuple(r.z, r.t_tilde);
      },
      py::arg("y"), py::arg("spec"), py::arg("channel"), py::arg("seed"));
  m.def("bit_volume", &bit_volume, py::arg("m_t"), py::arg("m_r"),
        py::arg("l"), py::arg("q"), py::arg("bits"));
  m.def("auto_gamma", &auto_gamma, py::arg("signal_power_per_sample"),
        py::arg("noise_var"));
  m.def("write_packed", &write_packed, py::arg("path"), py::arg("z"),
        py::arg("spec"));
  m.def(
      "read_packed",
      [](const std::string& path) {
        PackedMatrix pm = read_packed(path);
        return py::make_tuple(pm.z, pm.spec);
      },
      py::arg("path"));

  // solver
  py::class_<QrpcaConfig>(m, "QrpcaConfig")
      .def(py::init<>())
      .def_readwrite("delta_q", &QrpcaConfig::delta_q)
      .def_readwrite("mu", &QrpcaConfig::mu)
      .def_readwrite("lambda_", &QrpcaConfig::lambda)
      .def_readwrite("step", &QrpcaConfig::step)
      .def_readwrite("max_iter", &QrpcaConfig::max_iter)
      .def_readwrite("tol", &QrpcaConfig::tol)
      .def_readwrite("backtracking", &QrpcaConfig::backtracking)
      .def("validate", &QrpcaConfig::validate);

  py::class_<QrpcaSolution>(m, "QrpcaSolution")
      .def_readonly("x_hat", &QrpcaSolution::x_hat)
      .def_readonly("t_hat", &QrpcaSolution::t_hat)
      .def_readonly("iterations", &QrpcaSolution::iterations)
      .def_readonly("converged", &QrpcaSolution::converged)
      .def_readonly("objective_trace", &QrpcaSolution::objective_trace);

  m.def("similarity", &similarity, py::arg("z"), py::arg("v"),
        py::arg("delta_q"));
  m.def("grad_similarity", &grad_similarity, py::arg("z"), py::arg("v"),
        py::arg("delta_q"));
  m.def("svt", &svt, py::arg("x"), py::arg("eps"));
  m.def("soft_threshold", &soft_threshold, py::arg("t"), py::arg("eps"));
  m.def("momentum_next", &momentum_next, py::arg("zeta_prev"));
  m.def("nuclear_norm", &nuclear_norm, py::arg("x"));
  m.def("l1_norm_parts", &l1_norm_parts, py::arg("x"));
  m.def("numerical_rank", &numerical_rank, py::arg("x"),
        py::arg("rel_tol") = 1e-9);
  m.def("apg_qrpca", &apg_qrpca, py::arg("z"), py::arg("cfg"));
  m.def("rpca_baseline", &rpca_baseline, py::arg("y"), py::arg("cfg"));

  // estimator
  py::class_<SearchGrid>(m, "SearchGrid")
      .def(py::init<>())
      .def_readwrite("x_min", &SearchGrid::x_min)
      .def_readwrite("y_min", &SearchGrid::y_min)
      .def_readwrite("step", &SearchGrid::step)
      .def_readwrite("nx", &SearchGrid::nx)
      .def_readwrite("ny", &SearchGrid::ny)
      .def("size", &SearchGrid::size)
      .def("point", &SearchGrid::point, py::arg("index"))
      .def("validate", &SearchGrid::validate);

  py::class_<EstimationResult>(m, "EstimationResult")
      .def_readonly("positions", &EstimationResult::positions)
      .def_readonly("velocities", &EstimationResult::velocities)
      .def_readonly("doppler", &EstimationResult::doppler)
      .def_readonly("residual_map", &EstimationResult::residual_map)
      .def_readonly("num_targets", &EstimationResult::num_targets);

  m.def("projection_residual", &projection_residual, py::arg("x_hat"),
        py::arg("candidates"), py::arg("scene"), py::arg("m"), py::arg("n"));
  m.def(
      "estimate_position",
      [](const std::vector<CMat>& x_hats, const SceneConfig& scene,
         const SearchGrid& grid, int k) {
        RVec map;
        std::vector<Vec2> pos = estimate_position(x_hats, scene, grid, k, &map);
        return py::make_tuple(pos, map);
      },
      py::arg("x_hats"), py::arg("scene"), py::arg("grid"), py::arg("k"));
  m.def("recover_xi", &recover_xi, py::arg("x_hat"), py::arg("positions"),
        py::arg("scene"), py::arg("m"), py::arg("n"));
  m.def("doppler_spectrum", &doppler_spectrum, py::arg("xi_row"),
        py::arg("zero_pad") = 8);
  m.def("estimate_doppler", &estimate_doppler, py::arg("xi_row"),
        py::arg("t_pri"), py::arg("zero_pad") = 8);
  m.def("estimate_velocity", &estimate_velocity, py::arg("dopplers"),
        py::arg("theta_p"), py::arg("scene"));
  m.def("estimate_all", &estimate_all, py::arg("x_hats"), py::arg("scene"),
        py::arg("grid"), py::arg("k"), py::arg("zero_pad") = 8);

  // harness
  py::class_<QuantizerConfig>(m, "QuantizerConfig")
      .def(py::init<>())
      .def_readwrite("bits", &QuantizerConfig::bits)
      .def_readwrite("gamma", &QuantizerConfig::gamma);

  py::class_<ChannelConfig>(m, "ChannelConfig")
      .def(py::init<>())
      .def_readwrite("corruption_prob", &ChannelConfig::corruption_prob);

  py::class_<EstimatorConfig>(m, "EstimatorConfig")
      .def(py::init<>())
      .def_readwrite("grid", &EstimatorConfig::grid)
      .def_readwrite("zero_pad", &EstimatorConfig::zero_pad);

  py::class_<SweepPlan>(m, "SweepPlan")
      .def(py::init<>())
      .def_readwrite("snr_db", &SweepPlan::snr_db)
      .def_readwrite("bits", &SweepPlan::bits)
      .def_readwrite("trials", &SweepPlan::trials)
      .def_readwrite("seed", &SweepPlan::seed);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_readwrite("scene", &ExperimentConfig::scene)
      .def_readwrite("targets", &ExperimentConfig::targets)
      .def_readwrite("quantizer", &ExperimentConfig::quantizer)
      .def_readwrite("channel", &ExperimentConfig::channel)
      .def_readwrite("solver", &ExperimentConfig::solver)
      .def_readwrite("estimator", &ExperimentConfig::estimator)
      .def_readwrite("sweep", &ExperimentConfig::sweep)
      .def_readwrite("out_dir", &ExperimentConfig::out_dir)
      .def("validate", &ExperimentConfig::validate);

  py::class_<SweepRecord>(m, "SweepRecord")
      .def_readonly("snr_db", &SweepRecord::snr_db)
      .def_readonly("bits", &SweepRecord::bits)
      .def_readonly("trial", &SweepRecord::trial)
      .def_readonly("rel_err_x", &SweepRecord::rel_err_x)
      .def_readonly("rel_err_t", &SweepRecord::rel_err_t)
      .def_readonly("position_error_m", &SweepRecord::position_error_m)
      .def_readonly("velocity_error_mps", &SweepRecord::velocity_error_mps)
      .def_readonly("solver_iters", &SweepRecord::solver_iters)
      .def_readonly("wall_time_s", &SweepRecord::wall_time_s)
      .def_readonly("status", &SweepRecord::status);

  py::class_<LocateRecord>(m, "LocateRecord")
      .def_readonly("trial", &LocateRecord::trial)
      .def_readonly("est_x_m", &LocateRecord::est_x_m)
      .def_readonly("est_y_m", &LocateRecord::est_y_m)
      .def_readonly("est_vx_mps", &LocateRecord::est_vx_mps)
      .def_readonly("est_vy_mps", &LocateRecord::est_vy_mps)
      .def_readonly("position_error_m", &LocateRecord::position_error_m)
      .def_readonly("velocity_error_x_mps", &LocateRecord::velocity_error_x_mps)
      .def_readonly("velocity_error_y_mps", &LocateRecord::velocity_error_y_mps)
      .def_readonly("solver_iters", &LocateRecord::solver_iters)
      .def_readonly("wall_time_s", &LocateRecord::wall_time_s);

  py::class_<PairObservation>(m, "PairObservation")
      .def_readonly("m", &PairObservation::m)
      .def_readonly("n", &PairObservation::n)
      .def_readonly("x_true", &PairObservation::x_true)
      .def_readonly("y", &PairObservation::y)
      .def_readonly("spec", &PairObservation::spec)
      .def_readonly("z", &PairObservation::z)
      .def_readonly("t_true", &PairObservation::t_true)
      .def_readonly("y_dte", &PairObservation::y_dte)
      .def_readonly("t_true_values", &PairObservation::t_true_values);

  py::class_<Simulation>(m, "Simulation")
      .def_readonly("pairs", &Simulation::pairs)
      .def_readonly("targets", &Simulation::targets)
      .def_readonly("signal_power", &Simulation::signal_power)
      .def_readonly("noise_var", &Simulation::noise_var);

  py::class_<TrialDetail>(m, "TrialDetail")
      .def_readonly("record", &TrialDetail::record)
      .def_readonly("estimate", &TrialDetail::estimate)
      .def_readonly("solutions", &TrialDetail::solutions);

  m.def("rel_err", &rel_err, py::arg("estimate"), py::arg("truth"));
  m.def("simulate", &simulate, py::arg("cfg"), py::arg("snr_db"),
        py::arg("bits"), py::arg("trial"));
  m.def("run_trial", &run_trial, py::arg("cfg"), py::arg("snr_db"),
        py::arg("bits"), py::arg("trial"), py::arg("baseline") = false);
  m.def("run_trial_detailed", &run_trial_detailed, py::arg("cfg"),
        py::arg("snr_db"), py::arg("bits"), py::arg("trial"),
        py::arg("baseline") = false);
  m.def("run_sweep", &run_sweep, py::arg("cfg"), py::arg("baseline") = false,
        py::call_guard<py::gil_scoped_release>());
  m.def("run_locate", &run_locate, py::arg("cfg"),
        py::call_guard<py::gil_scoped_release>());
  m.def("sweep_csv", &sweep_csv, py::arg("rows"));
  m.def("locate_csv", &locate_csv, py::arg("rows"));
  m.def("write_cmat", &write_cmat, py::arg("path"), py::arg("x"));
  m.def("read_cmat", &read_cmat, py::arg("path"));
  m.def("default_sweep_config", &default_sweep_config,
        py::arg("paper_scale") = false);
  m.def("default_locate_config", &default_locate_config,
        py::arg("paper_scale") = false);
  m.def("config_to_json", &config_to_json, py::arg("cfg"));
  m.def("config_from_json", &config_from_json, py::arg("text"));
  m.def("load_config", &load_config, py::arg("path"));
  m.def("save_config", &save_config, py::arg("cfg"), py::arg("path"));

  // deterministic rng, exposed for cross-language reproducibility tests
  py::class_<Rng>(m, "Rng")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("uniform", &Rng::uniform)
      .def("uniform_int", &Rng::uniform_int, py::arg("n"))
      .def("gaussian", &Rng::gaussian)
      .def("c_gaussian", &Rng::c_gaussian, py::arg("sigma2"))
      .def("unit_phase", &Rng::unit_phase);
  m.def("derive_seed", &derive_seed, py::arg("base"), py::arg("k0"),
        py::arg("k1") = 0, py::arg("k2") = 0);
  m.def("seed_key", &seed_key, py::arg("x"));
}
