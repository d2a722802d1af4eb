"""Vector arithmetic, seeded random streams and finite differences.

Parameter vectors are plain 1-D ``float64`` numpy arrays.  The helpers here
validate shapes instead of broadcasting, and refuse to return non-finite
values, so downstream code can assume clean inputs.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

__all__ = [
    "DimensionError",
    "NonFiniteError",
    "as_vector",
    "dot",
    "axpy",
    "make_rng",
    "gaussian_sample",
    "finite_diff_grad",
    "kahan_dot",
    "dense_solve",
]


class DimensionError(ValueError):
    """Raised when two operands disagree in shape."""


class NonFiniteError(FloatingPointError):
    """Raised when a NaN or Inf shows up where a finite value is required."""


def as_vector(x, name: str = "x") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {arr.shape}")
    return arr


def _check_same(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")


def _check_finite(x: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise NonFiniteError(f"{what} contains non-finite entries")
    return x


def dot(a, b) -> float:
    a = as_vector(a, "a")
    b = as_vector(b, "b")
    _check_same(a, b)
    return float(a @ b)


def axpy(alpha: float, x, y) -> np.ndarray:
    """Return ``y + alpha * x`` as a new array."""
    x = as_vector(x, "x")
    y = as_vector(y, "y")
    _check_same(x, y)
    with np.errstate(over="ignore", invalid="ignore"):
        out = y + alpha * x
    return _check_finite(out, "axpy result")


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator (Philox); same seed gives the same stream everywhere."""
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


def gaussian_sample(rng: np.random.Generator, n: int) -> np.ndarray:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return rng.standard_normal(n)


def finite_diff_grad(f: Callable[[np.ndarray], float], x, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function, one coordinate at a time."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = as_vector(x).copy()
    grad = np.empty_like(x)
    for i in range(x.size):
        orig = x[i]
        x[i] = orig + h
        fp = f(x)
        x[i] = orig - h
        fm = f(x)
        x[i] = orig
        if not (math.isfinite(fp) and math.isfinite(fm)):
            raise NonFiniteError(f"f is not finite near coordinate {i}")
        grad[i] = (fp - fm) / (2.0 * h)
    return grad


def kahan_dot(a, b) -> float:
    """Compensated-summation dot product; slow, used as an accuracy oracle."""
    a = as_vector(a, "a")
    b = as_vector(b, "b")
    _check_same(a, b)
    total = 0.0
    comp = 0.0
    for ai, bi in zip(a.tolist(), b.tolist()):
        y = ai * bi - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def dense_solve(A, b) -> np.ndarray:
    """Solve ``A x = b`` by Gaussian elimination with partial pivoting.

    Written out by hand so that it stays independent of the LAPACK path it is
    used to check.  Intended for small systems only.
    """
    A = np.array(A, dtype=np.float64)
    x = as_vector(b, "b").copy()
    n = A.shape[0]
    if A.shape != (n, n) or x.size != n:
        raise DimensionError(f"need square A matching b, got {A.shape} and {x.shape}")
    for k in range(n):
        p = k + int(np.argmax(np.abs(A[k:, k])))
        if A[p, k] == 0.0:
            raise np.linalg.LinAlgError("singular matrix")
        if p != k:
            A[[k, p]] = A[[p, k]]
            x[[k, p]] = x[[p, k]]
        factors = A[k + 1:, k] / A[k, k]
        A[k + 1:, k:] -= np.outer(factors, A[k, k:])
        x[k + 1:] -= factors * x[k]
    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - A[k, k + 1:] @ x[k + 1:]) / A[k, k]
    return x
