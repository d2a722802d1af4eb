import time

import numpy as np
import pytest

from smac_rl.numcore import NonFiniteError, dense_solve, make_rng
from smac_rl.optim import AdamState, adam_step, cg_npg_step, sgd_step, smac_step

from conftest import rel_err


def test_sgd_cases():
    th = np.array([0.5, -1.0])
    np.testing.assert_array_equal(sgd_step(th, np.zeros(2), 0.1), th)
    np.testing.assert_array_equal(sgd_step(np.zeros(2), [1.0, 2.0], 1.0), [1.0, 2.0])
    g = np.array([0.3, -0.7])
    np.testing.assert_allclose(sgd_step(sgd_step(th, g, 0.05), g, 0.05), sgd_step(th, g, 0.1), rtol=1e-15)
    with pytest.raises(NonFiniteError):
        sgd_step(th, [np.nan, 0.0], 0.1)


def test_adam_first_step_closed_form():
    th, st = adam_step(AdamState.zeros(1), np.zeros(1), np.ones(1), 0.01)
    assert th[0] == pytest.approx(0.01 / (1 + 1e-8), rel=1e-15)
    assert st.t == 1


def test_adam_zero_gradient_no_move():
    th, _ = adam_step(AdamState.zeros(3), np.ones(3), np.zeros(3), 0.1)
    np.testing.assert_array_equal(th, np.ones(3))


def test_adam_constant_gradient_step_converges_to_alpha_sign():
    st = AdamState.zeros(3)
    th = np.zeros(3)
    g = np.array([2.0, -0.5, 1e-3])
    alpha = 1e-3
    for _ in range(10_000):
        new, st = adam_step(st, th, g, alpha)
        step, th = new - th, new
    np.testing.assert_allclose(step, alpha * np.sign(g), atol=1e-3 * alpha)
    assert np.all(st.v >= 0) and st.t == 10_000


def test_adam_descent_orientation():
    th, _ = adam_step(AdamState.zeros(1), np.zeros(1), np.ones(1), 0.1, ascent=False)
    assert th[0] < 0


def test_smac_zero_scores_is_scaled_sgd():
    rng = make_rng(0)
    th = rng.standard_normal(5)
    g = rng.standard_normal(5)
    new, rep = smac_step(th, np.zeros((3, 5)), g, 0.2, 0.5)
    np.testing.assert_allclose(new, sgd_step(th, g, 0.2 / 0.5), rtol=1e-15)
    assert rep.extra["denom"] == pytest.approx(0.25)


def test_smac_worked_case():
    new, rep = smac_step(np.zeros(2), np.array([[1.0, 0.0]]), np.array([1.0, 1.0]), 0.1, 2.0)
    np.testing.assert_allclose(new, 0.1 * np.array([1 / 3, 1 / 2]), rtol=1e-14)
    assert rep.extra["denom"] == pytest.approx(6.0)


def test_all_steps_are_ascent_directions():
    rng = make_rng(1)
    for _ in range(200):
        d = int(rng.integers(2, 30))
        th = rng.standard_normal(d)
        g = rng.standard_normal(d)
        S = rng.standard_normal((int(rng.integers(1, 10)), d))
        for new in (sgd_step(th, g, 0.1),
                    smac_step(th, S, g, 0.1, 0.1)[0],
                    cg_npg_step(th, S, g, 0.1, 1e-2, 10)[0],
                    adam_step(AdamState.zeros(d), th, g, 0.1)[0]):
            assert (new - th) @ g > 0


def test_smac_direction_matches_dense():
    rng = make_rng(2)
    S = rng.standard_normal((7, 12))
    g = rng.standard_normal(12)
    new, _ = smac_step(np.zeros(12), S, g, 1.0, 0.1)
    lbar = S.mean(0)
    assert rel_err(new, dense_solve(0.1 * np.eye(12) + np.outer(lbar, lbar), g)) < 1e-10


def test_cg_empty_scores_identity():
    g = np.array([1.0, -2.0, 3.0])
    new, rep = cg_npg_step(np.zeros(3), np.zeros((0, 3)), g, 1.0, cg_damping=1.0)
    np.testing.assert_allclose(new, g)


def test_cg_matches_smac_for_single_score():
    rng = make_rng(3)
    for lam in (0.01, 0.1, 1.0):
        l = rng.standard_normal(200)
        g = rng.standard_normal(200)
        a, _ = smac_step(np.zeros(200), l[None, :], g, 1.0, lam)
        b, rep = cg_npg_step(np.zeros(200), l[None, :], g, 1.0, lam, 10, 1e-10)
        assert rel_err(b, a) < 1e-6
        assert rep.extra["cg_iters"] <= 2


def test_cg_residual_contract():
    rng = make_rng(4)
    S = rng.standard_normal((50, 80))
    g = rng.standard_normal(80)
    _, rep = cg_npg_step(np.zeros(80), S, g, 1.0, 1e-3, max_iters=4, tol=1e-10)
    assert rep.extra["cg_iters"] == 4 or rep.extra["cg_residual"] <= 1e-10 * np.linalg.norm(g)


def test_determinism():
    rng = make_rng(5)
    th, g, S = rng.standard_normal(40), rng.standard_normal(40), rng.standard_normal((6, 40))
    for fn in (lambda: smac_step(th, S, g, 0.1, 0.1)[0], lambda: cg_npg_step(th, S, g, 0.1)[0],
               lambda: sgd_step(th, g, 0.1), lambda: adam_step(AdamState.zeros(40), th, g, 0.1)[0]):
        np.testing.assert_array_equal(fn(), fn())


def test_smac_step_time_linear_in_dim():
    rng = make_rng(6)

    def timed(d, reps=200):
        th, g, l = rng.standard_normal(d), rng.standard_normal(d), rng.standard_normal(d)
        best = float("inf")
        for _ in range(5):
            t0 = time.perf_counter()
            for _ in range(reps):
                smac_step(th, l, g, 0.1, 0.1)
            best = min(best, time.perf_counter() - t0)
        return best

    assert timed(16 * 4096) / timed(4096) <= 48
