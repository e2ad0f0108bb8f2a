"""Cross-checks against an independent generic convex solver (cvxpy).

Complex nuclear norms are expressed through the real embedding
E(X) = [[Re X, -Im X], [Im X, Re X]], for which ||E(X)||_* = 2 ||X||_* and
||E(X)||_F^2 = 2 ||X||_F^2."""

import numpy as np
import pytest

import qmimo

cp = pytest.importorskip("cvxpy")


def embed(x):
    return np.block([[x.real, -x.imag], [x.imag, x.real]])


def embed_var(x):
    return cp.bmat([[cp.real(x), -cp.imag(x)], [cp.imag(x), cp.real(x)]])


def l1_parts(x):
    return cp.sum(cp.abs(cp.real(x))) + cp.sum(cp.abs(cp.imag(x)))


def test_svt_matches_convex_program():
    rng = np.random.default_rng(7)
    x = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    eps = 0.7
    w = cp.Variable((4, 4), complex=True)
    # eps ||W||_* + 0.5 ||W - X||_F^2 in embedded form
    objective = cp.Minimize(
        eps * 0.5 * cp.normNuc(embed_var(w))
        + 0.25 * cp.sum_squares(embed_var(w) - embed(x))
    )
    cp.Problem(objective).solve()
    assert np.linalg.norm(w.value - qmimo.svt(x, eps)) <= 1e-4


def test_soft_threshold_matches_convex_program():
    rng = np.random.default_rng(8)
    x = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
    eps = 0.4
    t = cp.Variable((5, 3), complex=True)
    objective = cp.Minimize(
        eps * l1_parts(t)
        + 0.5 * cp.sum_squares(cp.real(t) - x.real)
        + 0.5 * cp.sum_squares(cp.imag(t) - x.imag)
    )
    cp.Problem(objective).solve()
    assert np.linalg.norm(t.value - qmimo.soft_threshold(x, eps)) <= 1e-6


def test_full_objective_matches_convex_program():
    """The accelerated solver and cvxpy must agree on the optimum of the
    complete quantized-recovery objective on a small instance."""
    rng = np.random.default_rng(9)
    n = 6
    x0 = np.outer(
        np.exp(2j * np.pi * rng.random(n)), np.exp(2j * np.pi * rng.random(n))
    )
    spec = qmimo.QuantizerSpec()
    spec.levels = 16
    spec.gamma = qmimo.auto_gamma(float(np.mean(np.abs(x0) ** 2)), 0.0)
    z = qmimo.quantize(x0, spec)
    d = spec.delta()
    mu, lam = 0.05 * d, 0.02 * d

    cfg = qmimo.QrpcaConfig()
    cfg.delta_q = d
    cfg.mu = mu
    cfg.lambda_ = lam
    cfg.max_iter = 4000
    cfg.tol = 1e-12
    sol = qmimo.apg_qrpca(z, cfg)
    obj_apg = sol.objective_trace[-1]

    x = cp.Variable((n, n), complex=True)
    t = cp.Variable((n, n), complex=True)
    h = d / 2

    def hinge_sq(dev):
        return cp.sum_squares(cp.pos(dev - h)) + cp.sum_squares(
            cp.pos(-dev - h)
        )

    dr = cp.real(x + t) - z.real
    di = cp.imag(x + t) - z.imag
    objective = cp.Minimize(
        0.5 * (hinge_sq(dr) + hinge_sq(di))
        + mu * 0.5 * cp.normNuc(embed_var(x))
        + lam * l1_parts(t)
    )
    problem = cp.Problem(objective)
    problem.solve()

    assert obj_apg == pytest.approx(problem.value, abs=1e-4)
    assert (
        np.linalg.norm(sol.x_hat - x.value) / np.linalg.norm(x.value) <= 1e-2
    )
