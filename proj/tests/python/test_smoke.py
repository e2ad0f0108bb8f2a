"""Smoke tests for the python bindings: every major operation is reachable
and returns sane values. Tight numerical claims live in the C++ suites."""

import json
import math
import os
import tempfile

import numpy as np
import pytest

import qmimo


def fixture_scene():
    """One transmitter, two receivers, 50 MHz bandwidth scene whose search
    grid separates targets uniquely (same fixture as the C++ estimator
    suite)."""
    s = qmimo.SceneConfig()
    s.tx_positions = [np.array([-400.0, 300.0])]
    s.rx_positions = [np.array([350.0, 400.0]), np.array([0.0, -500.0])]
    s.f0 = 5e9
    s.delta_f = 50e6
    s.b0 = 5e7
    s.tp = 3.2e-7
    s.t_pri = 5e-4
    s.q_pulses = 16
    s.tau_max = 4.2e-6
    s.validate()
    return s


def test_version():
    assert qmimo.__version__ == "0.1.0"


def test_quantizer_hand_values():
    spec = qmimo.QuantizerSpec()
    spec.gamma = 1.0
    spec.levels = 4
    assert qmimo.quantize_real(0.3, spec) == 0.25
    assert qmimo.quantize_real(1.5, spec) == 0.75  # saturation
    assert qmimo.quantize_real(-0.9, spec) == -0.75
    assert qmimo.quantize_real(0.0, spec) == 0.25

    z = qmimo.quantize(np.zeros((2, 3), dtype=complex), spec)
    assert z.shape == (2, 3)
    assert np.all(z == 0.25 + 0.25j)

    assert qmimo.auto_gamma(1.0, 0.0) == pytest.approx(
        2.1213203435596424, abs=1e-15
    )


def test_quantizer_idempotence_and_packed_roundtrip():
    rng = np.random.default_rng(3)
    spec = qmimo.QuantizerSpec()
    spec.gamma = 1.5  # float32-exact, as the packed header stores gamma
    spec.levels = 16
    y = 2.5 * (rng.standard_normal((9, 5)) + 1j * rng.standard_normal((9, 5)))
    z = qmimo.quantize(y, spec)
    assert np.array_equal(qmimo.quantize(z, spec), z)

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "obs.qbm")
        qmimo.write_packed(path, z, spec)
        z2, spec2 = qmimo.read_packed(path)
        assert np.array_equal(z2, z)
        assert spec2.gamma == spec.gamma
        assert spec2.levels == spec.levels


def test_bit_volume():
    assert qmimo.bit_volume(3, 10, 128, 128, 4) == 3932160
    assert qmimo.bit_volume(3, 10, 128, 128, 14) * 2 == qmimo.bit_volume(
        3, 10, 128, 128, 4
    ) * 7


def test_dte_channel():
    rng = np.random.default_rng(11)
    spec = qmimo.QuantizerSpec()
    spec.gamma = 2.0
    spec.levels = 16
    z = qmimo.quantize(
        rng.standard_normal((32, 32)) + 1j * rng.standard_normal((32, 32)),
        spec,
    )
    ch = qmimo.DteChannelSpec()
    ch.corruption_prob = 0.05
    z2, t_tilde = qmimo.apply_dte(z, spec, ch, 42)
    changed = np.count_nonzero(t_tilde)
    assert z2.shape == z.shape
    assert np.array_equal(z2 - z, t_tilde)
    assert 0 < changed < z.size  # sparse but nonempty at this size

    # identical seed reproduces the channel, a new seed redraws it
    z3, t3 = qmimo.apply_dte(z, spec, ch, 42)
    assert np.array_equal(z3, z2)
    z4, t4 = qmimo.apply_dte(z, spec, ch, 43)
    assert not np.array_equal(z4, z2)


def test_scene_factorization_and_delay():
    s = fixture_scene()
    t = qmimo.TargetState()
    t.position = np.array([50.0, 30.0])
    t.velocity = np.array([10.0, 10.0])
    tim = qmimo.build_tim(s, [t], 0, 0)
    assert tim.x.shape == (s.data_len(), s.q_pulses)
    assert qmimo.numerical_rank(tim.x) == 1
    rebuilt = tim.a @ np.diag(tim.lambda_) @ tim.b
    assert np.linalg.norm(tim.x - rebuilt) <= 1e-12 * np.linalg.norm(tim.x)

    tau = qmimo.bistatic_delay(s, np.array([50.0, 30.0]), 0, 0)
    d_tx = math.hypot(50.0 - (-400.0), 30.0 - 300.0)
    d_rx = math.hypot(50.0 - 350.0, 30.0 - 400.0)
    assert tau == pytest.approx((d_tx + d_rx) / qmimo.SPEED_OF_LIGHT, rel=1e-15)


def test_solver_on_quantized_rank_one():
    rng = np.random.default_rng(5)
    u = np.exp(2j * np.pi * rng.random(12))
    v = np.exp(2j * np.pi * rng.random(12))
    x0 = np.outer(u, v)
    spec = qmimo.QuantizerSpec()
    spec.levels = 64
    spec.gamma = qmimo.auto_gamma(np.mean(np.abs(x0) ** 2), 0.0)
    z = qmimo.quantize(x0, spec)

    cfg = qmimo.QrpcaConfig()
    cfg.delta_q = spec.delta()
    cfg.mu = 0.01 * spec.delta()
    cfg.lambda_ = 0.0025 * spec.delta()
    sol = qmimo.apg_qrpca(z, cfg)
    assert sol.x_hat.shape == z.shape
    assert sol.t_hat.shape == z.shape
    assert sol.iterations <= cfg.max_iter
    assert len(sol.objective_trace) == sol.iterations + 1
    assert qmimo.similarity(z, sol.x_hat + sol.t_hat, spec.delta()) <= 1e-3
    assert qmimo.rel_err(sol.x_hat, x0) < 0.1
    # the dominant singular value carries the planted rank-1 structure
    s = np.linalg.svd(sol.x_hat, compute_uv=False)
    assert s[0] > 20.0 * s[1]


def test_estimation_chain_noiseless():
    s = fixture_scene()
    t = qmimo.TargetState()
    t.position = np.array([50.0, 30.0])
    t.velocity = np.array([10.0, 10.0])
    g = qmimo.SearchGrid()
    g.x_min = 0.0
    g.y_min = 0.0
    g.step = 10.0
    g.nx = 11
    g.ny = 7
    x_hats = [qmimo.build_tim(s, [t], 0, n).x for n in range(2)]
    est = qmimo.estimate_all(x_hats, s, g, 1)
    assert est.num_targets == 1
    assert np.array_equal(est.positions[0], np.array([50.0, 30.0]))
    assert np.linalg.norm(est.velocities[0] - np.array([10.0, 10.0])) < 0.01


def test_doppler_estimate():
    t_pri = 5e-4
    q = 64
    f = 123.456
    row = np.exp(2j * np.pi * f * np.arange(q) * t_pri)
    est = qmimo.estimate_doppler(row, t_pri, 8)
    assert abs(est - f) < 1.0 / (8 * q * t_pri)
    spec = qmimo.doppler_spectrum(row, 8)
    assert spec.shape == (8 * q,)
    with pytest.raises(Exception):
        qmimo.estimate_doppler(np.zeros(q, dtype=complex), t_pri)


def test_rel_err_contract():
    x = np.array([[1.0 + 2j, -3.0], [0.5j, 4.0 - 4j]])
    assert qmimo.rel_err(x, x) == 0.0
    assert qmimo.rel_err(np.zeros_like(x), x) == 1.0
    assert qmimo.rel_err(np.zeros_like(x), np.zeros_like(x)) == 0.0
    assert math.isinf(qmimo.rel_err(x, np.zeros_like(x)))


def test_config_json_roundtrip_and_rejection():
    cfg = qmimo.default_sweep_config()
    text = qmimo.config_to_json(cfg)
    back = qmimo.config_from_json(text)
    assert qmimo.config_to_json(back) == text

    doc = json.loads(text)
    doc["unexpected"] = 1
    with pytest.raises(Exception):
        qmimo.config_from_json(json.dumps(doc))

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "cfg.json")
        qmimo.save_config(cfg, path)
        again = qmimo.load_config(path)
        assert qmimo.config_to_json(again) == text


def test_run_trial_and_sweep_records():
    cfg = qmimo.default_sweep_config()
    cfg.scene.tx_positions = [np.array([-250.0, -60.0])]
    cfg.scene.rx_positions = [np.array([260.0, 10.0]), np.array([40.0, -270.0])]
    cfg.scene.tp = 1.6e-6
    cfg.scene.q_pulses = 16
    cfg.scene.tau_max = 2.6e-6
    cfg.estimator.grid.x_min = 0.0
    cfg.estimator.grid.y_min = 0.0
    cfg.estimator.grid.nx = 11
    cfg.estimator.grid.ny = 7
    cfg.sweep.snr_db = [20.0]
    cfg.sweep.bits = [4]
    cfg.sweep.trials = 2
    cfg.validate()

    rec = qmimo.run_trial(cfg, 20.0, 4, 0)
    assert rec.status == "ok"
    assert rec.rel_err_x > 0.0
    rec2 = qmimo.run_trial(cfg, 20.0, 4, 0)
    assert rec2.rel_err_x == rec.rel_err_x  # same cell, same seed

    rows = qmimo.run_sweep(cfg)
    assert len(rows) == 3  # two trials plus the mean row
    assert rows[-1].trial == -1
    assert rows[-1].status == "mean"
    csv = qmimo.sweep_csv(rows)
    assert csv.splitlines()[0] == (
        "snr_db,bits,trial,rel_err_x,rel_err_t,position_error_m,"
        "velocity_error_mps,solver_iters,status"
    )
    assert len(csv.splitlines()) == 4


def test_cmat_roundtrip():
    rng = np.random.default_rng(9)
    x = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "x.cmat")
        qmimo.write_cmat(path, x)
        assert np.array_equal(qmimo.read_cmat(path), x)
