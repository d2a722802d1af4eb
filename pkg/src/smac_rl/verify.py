"""Fast self-checks of the numerical core against independent oracles.

Each check returns ``(name, ok, detail)``; :func:`run_all` runs them in order.
They are cheap enough to run on every install (a few seconds).
"""

from __future__ import annotations

import numpy as np

from .advantage import RolloutBatch, compute_gae, gae_bruteforce_oracle
from .fisher import FisherPrecond, FvpBatch, cg_solve, dense_sm_oracle, empirical_fvp, sm_inverse_apply
from .net import Mlp, MlpSpec
from .numcore import finite_diff_grad, make_rng
from .optim import cg_npg_step, smac_step
from .policy import CategoricalPolicy, GaussianPolicy

__all__ = ["CHECKS", "run_all"]


def _rel(a, b) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def check_sherman_morrison(trials: int = 200, seed: int = 0):
    rng = make_rng(seed)
    worst = 0.0
    for i in range(trials):
        d = (2, 8, 64, 128)[i % 4]
        lam = (0.01, 0.1, 1.0, 10.0)[(i // 4) % 4]
        p = FisherPrecond.from_direction(lam, rng.standard_normal(d))
        g = rng.standard_normal(d)
        worst = max(worst, _rel(sm_inverse_apply(p, g), dense_sm_oracle(p, g)))
    return "sherman-morrison vs dense solve", worst <= 1e-10, f"max rel err {worst:.2e}"


def check_score_gradients(nets: int = 10, seed: int = 1):
    rng = make_rng(seed)
    worst = 0.0
    for i in range(nets):
        s = rng.standard_normal(3)
        if i % 2:
            pol = GaussianPolicy.init(3, 2, rng, hidden=(6,))
            pol.log_std = rng.uniform(-0.5, 0.5, size=2)
            a = rng.standard_normal(2)
        else:
            pol = CategoricalPolicy.init(3, 3, rng, hidden=(6,))
            a = int(rng.integers(3))
        theta = pol.get_params()

        def f(th):
            pol.set_params(th)
            return pol.log_prob_of(s, a)

        fd = finite_diff_grad(f, theta)
        pol.set_params(theta)
        worst = max(worst, _rel(pol.grad_log_prob(s, a), fd))
    return "score vectors vs finite differences", worst <= 1e-4, f"max rel err {worst:.2e}"


def check_critic_gradient(seed: int = 2):
    rng = make_rng(seed)
    net = Mlp.init(MlpSpec(4, 1, (8, 8)), rng)
    X = rng.standard_normal((16, 4))
    R = rng.standard_normal(16)
    theta = net.get_params()

    def loss(th):
        net.set_params(th)
        return float(np.mean((net.forward(X)[:, 0] - R) ** 2))

    fd = finite_diff_grad(loss, theta)
    net.set_params(theta)
    resid = net.forward(X)[:, 0] - R
    err = _rel(net.backward(X, (2.0 / 16) * resid[:, None]), fd)
    return "critic MSE gradient vs finite differences", err <= 1e-4, f"rel err {err:.2e}"


def check_gae(batches: int = 100, seed: int = 3):
    rng = make_rng(seed)
    worst = 0.0
    for _ in range(batches):
        T = int(rng.integers(1, 129))
        b = RolloutBatch(np.zeros((T, 1)), np.zeros(T, dtype=int), rng.standard_normal(T),
                         rng.random(T) < 0.1, rng.standard_normal(T + 1), np.zeros(T))
        gamma, lam = float(rng.uniform(0.8, 1.0)), float(rng.uniform(0.0, 1.0))
        diff = compute_gae(b, gamma, lam).advantages - gae_bruteforce_oracle(b, gamma, lam).advantages
        worst = max(worst, float(np.max(np.abs(diff))))
    return "GAE recursion vs double sum", worst <= 1e-12, f"max abs err {worst:.2e}"


def check_cg_rank_one(seed: int = 4):
    rng = make_rng(seed)
    worst, iters = 0.0, 0
    for lam in (0.01, 0.1, 1.0, 10.0):
        l = rng.standard_normal(256)
        g = rng.standard_normal(256)
        a, _ = smac_step(np.zeros(256), l[None, :], g, 1.0, lam)
        b, rep = cg_npg_step(np.zeros(256), l[None, :], g, 1.0, lam, 10, 1e-10)
        worst = max(worst, _rel(b, a))
        iters = max(iters, rep.extra["cg_iters"])
    ok = worst <= 1e-6 and iters <= 2
    return "CG on one score vs Sherman-Morrison", ok, f"rel err {worst:.2e}, {iters} iterations"


def check_fvp(seed: int = 5):
    rng = make_rng(seed)
    S = rng.standard_normal((20, 30))
    v = rng.standard_normal(30)
    b = FvpBatch(S, 0.1)
    err = _rel(empirical_fvp(b, v), (S.T @ S / 20 + 0.1 * np.eye(30)) @ v)
    res = cg_solve(lambda x: empirical_fvp(b, x), v, 200, 1e-12)
    err2 = _rel(empirical_fvp(b, res.x), v)
    return "Fisher-vector product and CG solve", err <= 1e-12 and err2 <= 1e-8, \
        f"fvp err {err:.2e}, solve residual {err2:.2e}"


CHECKS = (check_sherman_morrison, check_score_gradients, check_critic_gradient, check_gae,
          check_cg_rank_one, check_fvp)


def run_all():
    return [check() for check in CHECKS]
