"""Fixed-topology tanh MLP with hand-written reverse mode.

All weights live in one flat ``float64`` buffer, ordered layer by layer as
``W`` (row-major, shape ``(fan_in, fan_out)``) followed by ``b``.  Gradients
come back in the same order, which is what the Fisher preconditioners need.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .numcore import DimensionError, as_vector

__all__ = ["MlpSpec", "Mlp"]


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int
    output_dim: int
    hidden: tuple[int, ...] = (64, 64)
    activation: str = "tanh"

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        widths = (self.input_dim, *self.hidden, self.output_dim)
        if any(w < 1 for w in widths):
            raise ValueError(f"all layer widths must be >= 1, got {widths}")
        if self.activation != "tanh":
            raise ValueError(f"unsupported activation {self.activation!r}")

    @property
    def widths(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden, self.output_dim)

    @property
    def n_params(self) -> int:
        w = self.widths
        return sum(a * b + b for a, b in zip(w[:-1], w[1:]))


@dataclass
class Mlp:
    spec: MlpSpec
    params: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.params = as_vector(self.params, "params").copy()
        if self.params.size != self.spec.n_params:
            raise DimensionError(
                f"spec needs {self.spec.n_params} params, got {self.params.size}")
        self._bind_views()

    def _bind_views(self):
        self._layers = []
        off = 0
        w = self.spec.widths
        for fan_in, fan_out in zip(w[:-1], w[1:]):
            W = self.params[off:off + fan_in * fan_out].reshape(fan_in, fan_out)
            off += fan_in * fan_out
            b = self.params[off:off + fan_out]
            off += fan_out
            self._layers.append((W, b))

    @classmethod
    def init(cls, spec: MlpSpec, rng: np.random.Generator) -> "Mlp":
        """Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases zero."""
        chunks = []
        w = spec.widths
        for fan_in, fan_out in zip(w[:-1], w[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            chunks.append(rng.uniform(-bound, bound, size=fan_in * fan_out))
            chunks.append(np.zeros(fan_out))
        return cls(spec, np.concatenate(chunks))

    @property
    def dim(self) -> int:
        return self.params.size

    @property
    def layers(self):
        return self._layers

    def get_params(self) -> np.ndarray:
        return self.params.copy()

    def set_params(self, theta) -> None:
        theta = as_vector(theta, "theta")
        if theta.size != self.params.size:
            raise DimensionError(f"expected {self.params.size} params, got {theta.size}")
        self.params[:] = theta

    # -- forward ---------------------------------------------------------

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.spec.input_dim or x.ndim not in (1, 2):
            raise DimensionError(
                f"input must have trailing dim {self.spec.input_dim}, got {x.shape}")
        return x

    def forward(self, x) -> np.ndarray:
        """Evaluate on one input ``(input_dim,)`` or a batch ``(N, input_dim)``."""
        h = self._check_input(x)
        for W, b in self._layers[:-1]:
            h = np.tanh(h @ W + b)
        W, b = self._layers[-1]
        return h @ W + b

    def _forward_cache(self, X: np.ndarray):
        acts = [X]
        h = X
        last = len(self._layers) - 1
        for i, (W, b) in enumerate(self._layers):
            h = h @ W + b
            if i < last:
                h = np.tanh(h)
            acts.append(h)
        return acts

    # -- reverse mode ----------------------------------------------------

    def _deltas(self, acts, upstream):
        """Yield (layer index, layer input, delta at layer output), last layer first."""
        delta = upstream
        for i in range(len(self._layers) - 1, -1, -1):
            yield i, acts[i], delta
            if i > 0:
                W = self._layers[i][0]
                delta = (delta @ W.T) * (1.0 - acts[i] ** 2)

    def _as_batch(self, x, upstream):
        x = self._check_input(x)
        single = x.ndim == 1
        X = x[None, :] if single else x
        U = np.asarray(upstream, dtype=np.float64)
        if single:
            U = U[None, :] if U.ndim == 1 else U
        if U.shape != (X.shape[0], self.spec.output_dim):
            raise DimensionError(
                f"upstream must have shape {(X.shape[0], self.spec.output_dim)}, got {U.shape}")
        return X, U

    def backward(self, x, upstream) -> np.ndarray:
        """Flat gradient of ``sum_n upstream[n] . forward(x[n])`` with respect to params."""
        X, U = self._as_batch(x, upstream)
        acts = self._forward_cache(X)
        grad = np.empty_like(self.params)
        offsets = self._offsets()
        for i, a_in, delta in self._deltas(acts, U):
            off, n_w, n_b = offsets[i]
            grad[off:off + n_w] = (a_in.T @ delta).ravel()
            grad[off + n_w:off + n_w + n_b] = delta.sum(axis=0)
        return grad

    def per_sample_grads(self, X, upstream) -> np.ndarray:
        """Row ``n`` is the gradient of ``upstream[n] . forward(X[n])``; shape ``(N, d)``."""
        X, U = self._as_batch(X, upstream)
        acts = self._forward_cache(X)
        out = np.empty((X.shape[0], self.params.size))
        offsets = self._offsets()
        for i, a_in, delta in self._deltas(acts, U):
            off, n_w, n_b = offsets[i]
            out[:, off:off + n_w] = np.einsum("ni,nj->nij", a_in, delta).reshape(X.shape[0], n_w)
            out[:, off + n_w:off + n_w + n_b] = delta
        return out

    def per_sample_sq_norms(self, X, upstream) -> np.ndarray:
        """Squared norms of the rows of :meth:`per_sample_grads` without forming them.

        Each weight block is an outer product, so its squared Frobenius norm
        factors as ``|a_in|^2 * |delta|^2``.
        """
        X, U = self._as_batch(X, upstream)
        acts = self._forward_cache(X)
        total = np.zeros(X.shape[0])
        for _, a_in, delta in self._deltas(acts, U):
            d2 = np.einsum("nj,nj->n", delta, delta)
            total += d2 * (np.einsum("ni,ni->n", a_in, a_in) + 1.0)
        return total

    def _offsets(self):
        offs = []
        off = 0
        for W, b in self._layers:
            offs.append((off, W.size, b.size))
            off += W.size + b.size
        return offs

    # -- checkpointing ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "spec": {
                "input_dim": self.spec.input_dim,
                "output_dim": self.spec.output_dim,
                "hidden": list(self.spec.hidden),
                "activation": self.spec.activation,
            },
            "params": self.params.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Mlp":
        return cls(MlpSpec(**d["spec"]), np.asarray(d["params"], dtype=np.float64))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Mlp":
        return cls.from_dict(json.loads(text))
