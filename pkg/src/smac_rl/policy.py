"""Stochastic policy heads on top of :class:`~smac_rl.net.Mlp`.

Both heads expose the same surface: flat parameters, sampling, exact
log-probabilities, and score vectors ``grad_theta log pi(a|s)`` either one at
a time or for a whole batch.  The batch helpers are what the trainer uses;
the single-sample ones are the reference path the tests compare against.
"""

from __future__ import annotations

import math

import numpy as np

from .net import Mlp, MlpSpec
from .numcore import DimensionError, NonFiniteError, as_vector

__all__ = ["CategoricalPolicy", "GaussianPolicy", "LOG_STD_MIN", "LOG_STD_MAX"]

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    m = np.max(logits, axis=-1, keepdims=True)
    z = logits - m
    return z - np.log(np.sum(np.exp(z), axis=-1, keepdims=True))


class CategoricalPolicy:
    """Softmax over one logit per discrete action."""

    discrete = True

    def __init__(self, net: Mlp):
        self.net = net
        self.n_actions = net.spec.output_dim

    @classmethod
    def init(cls, obs_dim: int, n_actions: int, rng, hidden=(64, 64)) -> "CategoricalPolicy":
        return cls(Mlp.init(MlpSpec(obs_dim, n_actions, tuple(hidden)), rng))

    @property
    def dim(self) -> int:
        return self.net.dim

    def get_params(self) -> np.ndarray:
        return self.net.get_params()

    def set_params(self, theta) -> None:
        self.net.set_params(theta)

    def _logits(self, s) -> np.ndarray:
        logits = self.net.forward(s)
        if not np.all(np.isfinite(logits)):
            raise NonFiniteError("policy logits are not finite")
        return logits

    def probs(self, s) -> np.ndarray:
        return np.exp(_log_softmax(self._logits(s)))

    def _check_action(self, a) -> int:
        a_int = int(a)
        if a_int != a or not 0 <= a_int < self.n_actions:
            raise ValueError(f"action {a!r} outside 0..{self.n_actions - 1}")
        return a_int

    def sample(self, s, rng: np.random.Generator):
        # called once per environment step, so stay in plain floats
        logits = self.net.forward(s).tolist()
        m = max(logits)
        if not math.isfinite(m) or not all(math.isfinite(v) for v in logits):
            raise NonFiniteError("policy logits are not finite")
        weights = [math.exp(v - m) for v in logits]
        total = math.fsum(weights)
        u = rng.random() * total
        acc = 0.0
        a = self.n_actions - 1
        for i, w in enumerate(weights):
            acc += w
            if u < acc:
                a = i
                break
        return a, logits[a] - m - math.log(total)

    def log_prob_of(self, s, a) -> float:
        a = self._check_action(a)
        return float(_log_softmax(self._logits(s))[a])

    def grad_log_prob(self, s, a) -> np.ndarray:
        a = self._check_action(a)
        s = as_vector(s, "s")
        up = -np.exp(_log_softmax(self._logits(s)))
        up[a] += 1.0
        return self.net.backward(s, up)

    # -- batch forms -------------------------------------------------------

    def _batch_upstream(self, S, A):
        S = np.asarray(S, dtype=np.float64)
        A = np.asarray(A)
        if A.ndim != 1 or A.shape[0] != S.shape[0]:
            raise DimensionError("need one integer action per state")
        if np.any((A < 0) | (A >= self.n_actions)):
            raise ValueError("action index out of range")
        logp = _log_softmax(self._logits(S))
        up = -np.exp(logp)
        idx = np.arange(S.shape[0])
        up[idx, A.astype(np.intp)] += 1.0
        return S, up, logp[idx, A.astype(np.intp)]

    def log_probs(self, S, A) -> np.ndarray:
        return self._batch_upstream(S, A)[2]

    def weighted_score_sum(self, S, A, weights) -> np.ndarray:
        """``sum_n weights[n] * score_n`` via one batched backward pass."""
        S, up, _ = self._batch_upstream(S, A)
        return self.net.backward(S, up * np.asarray(weights, dtype=np.float64)[:, None])

    def scores(self, S, A) -> np.ndarray:
        S, up, _ = self._batch_upstream(S, A)
        return self.net.per_sample_grads(S, up)

    def score_sq_norms(self, S, A) -> np.ndarray:
        S, up, _ = self._batch_upstream(S, A)
        return self.net.per_sample_sq_norms(S, up)

    def to_dict(self) -> dict:
        return {"kind": "categorical", "net": self.net.to_dict()}


class GaussianPolicy:
    """Diagonal Gaussian with a state-independent learned ``log_std``.

    The flat parameter vector is the net parameters followed by ``log_std``.
    ``log_std`` is projected into ``[LOG_STD_MIN, LOG_STD_MAX]`` whenever it
    is set.
    """

    discrete = False

    def __init__(self, net: Mlp, log_std=None):
        self.net = net
        self.act_dim = net.spec.output_dim
        if log_std is None:
            log_std = np.zeros(self.act_dim)
        self.log_std = np.clip(as_vector(log_std, "log_std"), LOG_STD_MIN, LOG_STD_MAX)
        if self.log_std.size != self.act_dim:
            raise DimensionError("log_std must have one entry per action dimension")

    @classmethod
    def init(cls, obs_dim: int, act_dim: int, rng, hidden=(64, 64)) -> "GaussianPolicy":
        return cls(Mlp.init(MlpSpec(obs_dim, act_dim, tuple(hidden)), rng))

    @property
    def dim(self) -> int:
        return self.net.dim + self.act_dim

    def get_params(self) -> np.ndarray:
        return np.concatenate([self.net.params, self.log_std])

    def set_params(self, theta) -> None:
        theta = as_vector(theta, "theta")
        if theta.size != self.dim:
            raise DimensionError(f"expected {self.dim} params, got {theta.size}")
        self.net.set_params(theta[:self.net.dim])
        self.log_std = np.clip(theta[self.net.dim:], LOG_STD_MIN, LOG_STD_MAX)

    def mean(self, s) -> np.ndarray:
        mu = self.net.forward(s)
        if not np.all(np.isfinite(mu)):
            raise NonFiniteError("policy mean is not finite")
        return mu

    def _check_action(self, a) -> np.ndarray:
        a = np.atleast_1d(np.asarray(a, dtype=np.float64))
        if a.shape != (self.act_dim,):
            raise DimensionError(f"action must have shape ({self.act_dim},), got {a.shape}")
        return a

    def sample(self, s, rng: np.random.Generator):
        mu = self.mean(s)
        std = np.exp(self.log_std)
        eps = rng.standard_normal(self.act_dim)
        a = mu + std * eps
        logp = float(np.sum(-0.5 * eps ** 2 - self.log_std) - self.act_dim * _HALF_LOG_2PI)
        return a, logp

    def log_prob_of(self, s, a) -> float:
        a = self._check_action(a)
        z = (a - self.mean(s)) * np.exp(-self.log_std)
        return float(np.sum(-0.5 * z ** 2 - self.log_std) - self.act_dim * _HALF_LOG_2PI)

    def grad_log_prob(self, s, a) -> np.ndarray:
        a = self._check_action(a)
        s = as_vector(s, "s")
        inv_std = np.exp(-self.log_std)
        z = (a - self.mean(s)) * inv_std
        g_net = self.net.backward(s, z * inv_std)
        return np.concatenate([g_net, z ** 2 - 1.0])

    # -- batch forms -------------------------------------------------------

    def _batch(self, S, A):
        S = np.asarray(S, dtype=np.float64)
        A = np.asarray(A, dtype=np.float64).reshape(S.shape[0], self.act_dim)
        inv_std = np.exp(-self.log_std)
        z = (A - self.mean(S)) * inv_std
        return S, z, z * inv_std

    def log_probs(self, S, A) -> np.ndarray:
        _, z, _ = self._batch(S, A)
        return np.sum(-0.5 * z ** 2 - self.log_std, axis=1) - self.act_dim * _HALF_LOG_2PI

    def weighted_score_sum(self, S, A, weights) -> np.ndarray:
        S, z, up = self._batch(S, A)
        w = np.asarray(weights, dtype=np.float64)[:, None]
        return np.concatenate([self.net.backward(S, up * w), np.sum((z ** 2 - 1.0) * w, axis=0)])

    def scores(self, S, A) -> np.ndarray:
        S, z, up = self._batch(S, A)
        return np.hstack([self.net.per_sample_grads(S, up), z ** 2 - 1.0])

    def score_sq_norms(self, S, A) -> np.ndarray:
        S, z, up = self._batch(S, A)
        return self.net.per_sample_sq_norms(S, up) + np.sum((z ** 2 - 1.0) ** 2, axis=1)

    def to_dict(self) -> dict:
        return {"kind": "gaussian", "net": self.net.to_dict(), "log_std": self.log_std.tolist()}
