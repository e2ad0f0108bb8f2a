"""End-to-end exercises of the command-line interface: the
simulate/solve/estimate chain, sweep determinism, and error exits.

The binary path comes from the QMIMO_CLI environment variable (set by the
test runner); tests are skipped when it is absent."""

import json
import os
import subprocess

import pytest

CLI = os.environ.get("QMIMO_CLI", "")

pytestmark = pytest.mark.skipif(
    not (CLI and os.path.exists(CLI)),
    reason="QMIMO_CLI does not point at the built binary",
)


def run(*args, check=True):
    proc = subprocess.run(
        [CLI, *args], capture_output=True, text=True, timeout=600
    )
    if check:
        assert proc.returncode == 0, proc.stderr + proc.stdout
    return proc


@pytest.fixture(scope="module")
def small_config(tmp_path_factory):
    """A reduced single-transmitter scene that keeps solver runs fast."""
    doc = json.loads(run("print-config").stdout)
    doc["scene"]["tx_positions_m"] = [[-250.0, -60.0]]
    doc["scene"]["rx_positions_m"] = [[260.0, 10.0], [40.0, -270.0]]
    doc["scene"]["pulse_duration_s"] = 1.6e-6
    doc["scene"]["pulses"] = 16
    doc["scene"]["max_delay_s"] = 2.6e-6
    doc["estimator"]["grid"] = {
        "x_min_m": 0.0,
        "y_min_m": 0.0,
        "step_m": 10.0,
        "nx": 11,
        "ny": 7,
    }
    doc["sweep"]["snr_db"] = [20.0]
    doc["sweep"]["bits"] = [4]
    doc["sweep"]["trials"] = 3
    path = tmp_path_factory.mktemp("cfg") / "small.json"
    path.write_text(json.dumps(doc, indent=2))
    return str(path)


def test_print_config_defaults_parse():
    sweep = json.loads(run("print-config").stdout)
    locate = json.loads(run("print-config", "--locate").stdout)
    for doc in (sweep, locate):
        for key in ("scene", "targets", "quantizer", "channel", "solver",
                    "estimator", "sweep"):
            assert key in doc
    assert sweep["targets"] != locate["targets"]


def test_simulate_solve_estimate_chain(small_config, tmp_path):
    out = tmp_path / "chain"
    run("simulate", "--config", small_config, "--out", str(out),
        "--dump-truth")
    manifest = json.loads((out / "sim_manifest.json").read_text())
    assert len(manifest["pairs"]) == 2
    packed = [str(out / p["file"]) for p in manifest["pairs"]]
    for p in packed:
        assert os.path.exists(p)

    run("solve", "--config", small_config, *packed)
    x_hats = [p.replace(".qbm", ".x_hat.cmat") for p in packed]
    for p in x_hats:
        assert os.path.exists(p)
        assert os.path.exists(p.replace(".x_hat", ".t_hat"))

    run("estimate", "--config", small_config, "--out", str(out), *x_hats)
    est = json.loads((out / "estimate.json").read_text())
    assert len(est["positions_m"]) == 1
    assert len(est["velocities_mps"]) == 1
    assert len(est["doppler_hz"]) == 2  # one row per pair
    x, y = est["positions_m"][0]
    assert 0.0 <= x <= 100.0 and 0.0 <= y <= 60.0  # inside the search grid


def test_estimate_maps_outputs(small_config, tmp_path):
    out = tmp_path / "maps"
    run("simulate", "--config", small_config, "--out", str(out))
    manifest = json.loads((out / "sim_manifest.json").read_text())
    packed = [str(out / p["file"]) for p in manifest["pairs"]]
    run("solve", "--config", small_config, *packed)
    x_hats = [p.replace(".qbm", ".x_hat.cmat") for p in packed]
    run("estimate", "--config", small_config, "--out", str(out), "--maps",
        *x_hats)
    surface = (out / "residual_map.csv").read_text().strip().splitlines()
    assert len(surface) == 7  # ny rows
    assert all(len(line.split(",")) == 11 for line in surface)  # nx columns
    assert (out / "doppler_m0_n0_k0.csv").exists()


def test_sweep_determinism_and_seed_override(small_config, tmp_path):
    a, b, c = (tmp_path / s for s in ("a", "b", "c"))
    run("sweep", "--config", small_config, "--out", str(a))
    run("sweep", "--config", small_config, "--out", str(b))
    csv_a = (a / "sweep.csv").read_bytes()
    assert csv_a == (b / "sweep.csv").read_bytes()
    assert len(csv_a.splitlines()) == 5  # header + 3 trials + mean

    run("sweep", "--config", small_config, "--seed", "12345", "--out", str(c))
    assert csv_a != (c / "sweep.csv").read_bytes()


def test_locate_outputs(small_config, tmp_path):
    out = tmp_path / "loc"
    run("locate", "--config", small_config, "--out", str(out))
    lines = (out / "locate.csv").read_text().splitlines()
    assert lines[0].startswith("trial,est_x_m,est_y_m")
    assert len(lines) == 5  # header + 3 trials + median
    assert (out / "locate_manifest.json").exists()


def test_error_exits():
    assert run("bogus-subcommand", check=False).returncode != 0
    assert run("solve", check=False).returncode != 0  # missing inputs
    proc = run("sweep", "--config", "/nonexistent/cfg.json", check=False)
    assert proc.returncode != 0
    assert "cannot open config" in proc.stderr + proc.stdout
