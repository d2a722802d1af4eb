"""Actor update rules: SGD, Adam, the Sherman-Morrison step and CG natural gradient.

Every step function takes the current flat parameters and a gradient of the
objective being *maximised* and returns new parameters; Adam can also run in
descent mode for the critic loss.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import fisher
from .numcore import DimensionError, NonFiniteError, as_vector

__all__ = [
    "AdamState",
    "UpdateReport",
    "sgd_step",
    "adam_step",
    "smac_step",
    "cg_npg_step",
    "OPTIMIZER_IDS",
]

OPTIMIZER_IDS = ("smac", "sgd", "adam", "cg")


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, dim: int, **kw) -> "AdamState":
        return cls(np.zeros(dim), np.zeros(dim), 0, **kw)

    def to_dict(self) -> dict:
        return {"m": self.m.tolist(), "v": self.v.tolist(), "t": self.t,
                "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps}

    @classmethod
    def from_dict(cls, d: dict) -> "AdamState":
        return cls(np.asarray(d["m"], dtype=np.float64), np.asarray(d["v"], dtype=np.float64),
                   int(d["t"]), d["beta1"], d["beta2"], d["eps"])


@dataclass
class UpdateReport:
    direction_norm: float
    dot_with_grad: float
    wall_time: float
    extra: dict = field(default_factory=dict)


def _prep(theta, g):
    theta = as_vector(theta, "theta")
    g = as_vector(g, "g")
    if theta.shape != g.shape:
        raise DimensionError(f"theta has dim {theta.size}, g has dim {g.size}")
    if not np.all(np.isfinite(g)):
        raise NonFiniteError("gradient contains non-finite entries")
    return theta, g


def _report(direction, g, t0, **extra) -> UpdateReport:
    return UpdateReport(float(np.sqrt(direction @ direction)), float(direction @ g),
                        time.perf_counter() - t0, extra)


def sgd_step(theta, g, eta: float) -> np.ndarray:
    if not eta > 0:
        raise ValueError("eta must be positive")
    theta, g = _prep(theta, g)
    return theta + eta * g


def adam_step(state: AdamState, theta, g, alpha: float, ascent: bool = True):
    """One bias-corrected Adam step; returns ``(theta', state')``."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    theta, g = _prep(theta, g)
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * g
    v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    step = alpha * m_hat / (np.sqrt(v_hat) + state.eps)
    new_theta = theta + step if ascent else theta - step
    return new_theta, replace(state, m=m, v=v, t=t)


def smac_step(theta, scores, g, eta: float, lam: float):
    """``theta + eta * (lam*I + lbar lbar^T)^{-1} g``.

    ``scores`` is either an ``(N, d)`` array of per-sample scores or a single
    ``(d,)`` vector, taken to be the already-averaged ``lbar``.
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    t0 = time.perf_counter()
    theta, g = _prep(theta, g)
    lbar = fisher.batch_mean_score(scores)
    p = fisher.FisherPrecond.from_direction(lam, lbar)
    direction = fisher.smac_direction(lam, lbar, g)
    report = _report(direction, g, t0, denom=p.denominator, score_sq_norm=p.sq_norm)
    return theta + eta * direction, report


def cg_npg_step(theta, scores, g, eta: float, cg_damping: float = 1e-2,
                max_iters: int = 10, tol: float = 1e-10):
    """``theta + eta * x`` with ``x`` the CG solution of ``(F_hat + damping*I) x = g``.

    An empty ``scores`` array leaves only the damping term.
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    t0 = time.perf_counter()
    theta, g = _prep(theta, g)
    s = np.asarray(scores, dtype=np.float64)
    if s.size == 0:
        if cg_damping <= 0:
            raise ValueError("empty score batch needs positive damping")
        op = lambda v: cg_damping * v  # noqa: E731
    else:
        batch = fisher.FvpBatch(s, cg_damping)
        if batch.dim != g.size:
            raise DimensionError("scores and g disagree in dimension")
        op = lambda v: fisher.empirical_fvp(batch, v)  # noqa: E731
    res = fisher.cg_solve(op, g, max_iters=max_iters, tol=tol)
    report = _report(res.x, g, t0, cg_iters=res.iterations, cg_residual=res.residual_norm)
    return theta + eta * res.x, report
