"""Damped empirical-Fisher preconditioning.

The main routine, :func:`sm_inverse_apply`, applies ``(lam*I + l l^T)^{-1}``
to a vector in closed form::

    x = g / lam - l * (l . g) / (lam**2 + lam * (l . l))

which needs two inner products and two scaled vector adds, and never
touches a ``d x d`` array.  :func:`dense_sm_oracle` builds the matrix
explicitly and is only meant for tests.  The conjugate-gradient pieces back
the AC-CG baseline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .numcore import DimensionError, NonFiniteError, as_vector, dense_solve

__all__ = [
    "FisherPrecond",
    "FvpBatch",
    "CgResult",
    "sm_inverse_apply",
    "sm_denominator",
    "dense_fisher",
    "dense_sm_oracle",
    "batch_mean_score",
    "smac_direction",
    "empirical_fvp",
    "cg_solve",
    "assumption_diagnostics",
    "DENSE_ORACLE_MAX_DIM",
]

DENSE_ORACLE_MAX_DIM = 128


@dataclass(frozen=True)
class FisherPrecond:
    """Implicit ``lam*I + direction direction^T``."""

    lam: float
    direction: np.ndarray
    sq_norm: float

    @classmethod
    def from_direction(cls, lam: float, direction) -> "FisherPrecond":
        if not lam > 0:
            raise ValueError(f"damping must be positive, got {lam}")
        direction = as_vector(direction, "direction")
        return cls(float(lam), direction, float(direction @ direction))

    @property
    def dim(self) -> int:
        return self.direction.size

    @property
    def denominator(self) -> float:
        return sm_denominator(self.lam, self.sq_norm)


@dataclass(frozen=True)
class FvpBatch:
    """``N`` score vectors as rows of ``scores``; implicit ``mean(l l^T) + damping*I``."""

    scores: np.ndarray
    damping: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=np.float64)
        if s.ndim == 1:
            s = s[None, :]
        if s.ndim != 2:
            raise DimensionError("scores must be an (N, d) array")
        if self.damping < 0:
            raise ValueError("damping must be >= 0")
        object.__setattr__(self, "scores", s)

    @property
    def n(self) -> int:
        return self.scores.shape[0]

    @property
    def dim(self) -> int:
        return self.scores.shape[1]


def sm_denominator(lam: float, sq_norm: float) -> float:
    den = lam * lam + lam * sq_norm
    # lam > 0 makes this strictly positive; a failure means corrupted inputs.
    assert den > 0.0, f"Sherman-Morrison denominator {den} is not positive"
    return den


def sm_inverse_apply(p: FisherPrecond, g) -> np.ndarray:
    g = as_vector(g, "g")
    if g.shape != p.direction.shape:
        raise DimensionError(f"g has dim {g.size}, preconditioner has dim {p.dim}")
    coeff = float(p.direction @ g) / p.denominator
    out = g / p.lam
    out -= coeff * p.direction
    return out


def dense_fisher(p: FisherPrecond) -> np.ndarray:
    if p.dim > DENSE_ORACLE_MAX_DIM:
        raise ValueError(f"dense oracle limited to d <= {DENSE_ORACLE_MAX_DIM}, got {p.dim}")
    return p.lam * np.eye(p.dim) + np.outer(p.direction, p.direction)


def dense_sm_oracle(p: FisherPrecond, g) -> np.ndarray:
    """Solve ``(lam*I + l l^T) x = g`` with explicit Gaussian elimination."""
    return dense_solve(dense_fisher(p), as_vector(g, "g"))


def batch_mean_score(scores) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim == 1:
        s = s[None, :]
    if s.ndim != 2 or s.shape[0] == 0:
        raise ValueError("need at least one score vector of uniform dimension")
    return s.mean(axis=0)


def smac_direction(lam: float, scores, g) -> np.ndarray:
    """Update direction ``(lam*I + lbar lbar^T)^{-1} g`` with ``lbar`` the mean score.

    A zero gradient yields a zero direction.
    """
    g = as_vector(g, "g")
    p = FisherPrecond.from_direction(lam, batch_mean_score(scores))
    if not np.any(g):
        if g.shape != p.direction.shape:
            raise DimensionError("g and scores disagree in dimension")
        return np.zeros_like(g)
    return sm_inverse_apply(p, g)


def empirical_fvp(b: FvpBatch, v) -> np.ndarray:
    """``(1/N) sum_i l_i (l_i . v) + damping * v`` without forming the matrix."""
    v = as_vector(v, "v")
    if v.size != b.dim:
        raise DimensionError(f"v has dim {v.size}, batch has dim {b.dim}")
    proj = b.scores @ v
    out = b.scores.T @ proj
    out /= b.n
    if b.damping:
        out += b.damping * v
    return out


@dataclass(frozen=True)
class CgResult:
    x: np.ndarray
    iterations: int
    residual_norm: float
    converged: bool


def cg_solve(fvp: Callable[[np.ndarray], np.ndarray], g, max_iters: int = 10,
             tol: float = 1e-10) -> CgResult:
    """Conjugate gradient for ``fvp(x) = g`` with ``fvp`` symmetric positive definite.

    Stops once ``|r| <= tol * |g|``.  The residual is tracked by the usual
    recurrence.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    g = as_vector(g, "g")
    x = np.zeros_like(g)
    g_norm = float(np.sqrt(g @ g))
    if g_norm == 0.0:
        return CgResult(x, 0, 0.0, True)
    r = g.copy()
    p = r.copy()
    rr = float(r @ r)
    target = tol * g_norm
    it = 0
    while it < max_iters and np.sqrt(rr) > target:
        Ap = fvp(p)
        pAp = float(p @ Ap)
        if not np.isfinite(pAp) or pAp <= 0.0:
            raise NonFiniteError(f"CG curvature p.Ap = {pAp} at iteration {it}")
        alpha = rr / pAp
        x += alpha * p
        r -= alpha * Ap
        rr_new = float(r @ r)
        if not np.isfinite(rr_new):
            raise NonFiniteError("CG residual became non-finite")
        p *= rr_new / rr
        p += r
        rr = rr_new
        it += 1
    res = float(np.sqrt(rr))
    return CgResult(x, it, res, res <= target)


def assumption_diagnostics(b: FvpBatch = None, *, sq_norms=None) -> dict:
    """Empirical stand-ins for the bounded-score and Fisher-spectrum assumptions.

    Returns ``G_hat`` (largest score norm), ``trace`` (mean squared score
    norm, i.e. the trace of the empirical Fisher) and ``mu_hat`` (smallest
    eigenvalue of the undamped empirical Fisher, ``None`` when ``d > 128``).
    Passing only ``sq_norms`` skips the eigenvalue and never needs the scores.
    """
    if b is not None:
        sq = np.einsum("nd,nd->n", b.scores, b.scores)
        dim = b.dim
    else:
        sq = np.asarray(sq_norms, dtype=np.float64)
        dim = None
    if sq.size == 0:
        raise ValueError("need at least one score")
    out = {
        "G_hat": float(np.sqrt(sq.max())),
        "trace": float(sq.mean()),
        "mu_hat": None,
    }
    if b is not None and dim <= DENSE_ORACLE_MAX_DIM:
        F = b.scores.T @ b.scores / b.n
        # F is PSD by construction; a tiny negative eigenvalue is rounding
        out["mu_hat"] = max(float(np.linalg.eigvalsh(F)[0]), 0.0)
    return out
