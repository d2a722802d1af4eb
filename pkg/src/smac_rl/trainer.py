"""Actor-critic training loop.

Each iteration collects ``T`` environment steps with the current stochastic
policy, computes GAE advantages from the critic, takes one actor step with
the configured optimizer, then fits the critic to the GAE returns with
``critic_epochs`` passes of minibatch Adam.
"""

from __future__ import annotations

import csv
import json
import math
import time
import traceback
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import fisher, optim
from .advantage import GaeOutput, RolloutBatch, compute_gae
from .curves import N_BINS, SMOOTHING, bin_curve, ewm_smooth
from .envs import ENV_IDS, make_env
from .net import Mlp, MlpSpec
from .numcore import NonFiniteError, make_rng
from .policy import CategoricalPolicy, GaussianPolicy

__all__ = [
    "AgentConfig",
    "IterationLog",
    "RunRecord",
    "RolloutCarry",
    "PAPER_HPARAMS",
    "DEFAULT_TIMESTEPS",
    "paper_config",
    "make_agent",
    "collect_rollout",
    "critic_update",
    "actor_update",
    "train",
    "LOG_COLUMNS",
]

# (eta, lambda) per env and optimizer; critic alpha=1e-3, T=1000, gamma=0.99,
# lambda_gae=0.9 everywhere.
PAPER_HPARAMS = {
    "acrobot": {"smac": 5e-2, "adam": 6e-4, "sgd": 2e-1, "cg": 6e-1},
    "cartpole": {"smac": 5e-3, "adam": 7e-5, "sgd": 7e-3, "cg": 8e-2},
    "pendulum": {"smac": 6e-3, "adam": 7e-4, "sgd": 5e-2, "cg": 3e-2},
}
DEFAULT_TIMESTEPS = {"cartpole": 300_000, "acrobot": 300_000, "pendulum": 2_000_000}

LOG_COLUMNS = ("iteration", "timestep", "mean_return", "mean_logprob", "critic_loss",
               "dir_norm", "denom", "wall_ms")


@dataclass
class AgentConfig:
    env_id: str = "cartpole"
    optimizer_id: str = "smac"
    eta: float = 5e-3
    alpha: float = 1e-3
    T: int = 1000
    gamma: float = 0.99
    lambda_gae: float = 0.9
    lam: float = 0.1
    total_timesteps: int = 300_000
    seed: int = 0
    batch_mode: str = "batch_mean"
    actor_batch: int | None = None
    hidden: tuple = (64, 64)
    critic_epochs: int = 5
    critic_minibatch: int | None = 100
    cg_damping: float = 1e-2
    cg_max_iters: int = 10
    cg_tol: float = 1e-10
    diagnostics: bool = True
    checkpoint_every: int = 0
    out_dir: str | None = None

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)

    def validate(self) -> "AgentConfig":
        problems = []
        if self.env_id not in ENV_IDS:
            problems.append(f"unknown env_id {self.env_id!r}")
        if self.optimizer_id not in optim.OPTIMIZER_IDS:
            problems.append(f"unknown optimizer_id {self.optimizer_id!r}")
        for name in ("eta", "alpha", "lam"):
            if not getattr(self, name) > 0:
                problems.append(f"{name} must be > 0")
        if not 0 < self.gamma <= 1:
            problems.append("gamma must lie in (0, 1]")
        if not 0 < self.lambda_gae <= 1:
            problems.append("lambda_gae must lie in (0, 1]")
        if self.T < 1:
            problems.append("T must be >= 1")
        elif self.total_timesteps < self.T or self.total_timesteps % self.T:
            problems.append("total_timesteps must be a positive multiple of T")
        if self.batch_mode not in ("batch_mean", "per_sample"):
            problems.append(f"unknown batch_mode {self.batch_mode!r}")
        if self.critic_epochs < 1:
            problems.append("critic_epochs must be >= 1")
        if self.critic_minibatch is not None and self.critic_minibatch < 1:
            problems.append("critic_minibatch must be >= 1")
        if self.actor_batch is not None and (self.actor_batch < 1 or self.T % self.actor_batch):
            problems.append("actor_batch must divide T")
        if problems:
            raise ValueError("invalid config: " + "; ".join(problems))
        return self

    @property
    def smac_batch(self) -> int:
        """Samples averaged into each Sherman-Morrison step."""
        if self.batch_mode == "per_sample":
            return 1
        return self.actor_batch or self.T

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AgentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


def paper_config(env_id: str, optimizer_id: str = "smac", seed: int = 0, **overrides) -> AgentConfig:
    """Config with the published classic-control hyperparameters."""
    if env_id not in PAPER_HPARAMS or optimizer_id not in PAPER_HPARAMS[env_id]:
        raise ValueError(f"invalid config: no preset for env {env_id!r} with optimizer "
                         f"{optimizer_id!r}")
    cfg = AgentConfig(
        env_id=env_id,
        optimizer_id=optimizer_id,
        eta=PAPER_HPARAMS[env_id][optimizer_id],
        total_timesteps=DEFAULT_TIMESTEPS[env_id],
        seed=seed,
    )
    for k, v in overrides.items():
        if not hasattr(cfg, k):
            raise ValueError(f"unknown config field {k!r}")
        setattr(cfg, k, v)
    cfg.__post_init__()
    return cfg


@dataclass
class IterationLog:
    iteration: int
    timestep: int
    mean_return: float
    mean_logprob: float
    critic_loss: float
    dir_norm: float
    denom: float
    wall_ms: float
    dot_with_grad: float = math.nan
    n_episodes: int = 0
    G_hat: float = math.nan
    trace: float = math.nan
    mu_hat: float = math.nan
    cg_iters: int = 0
    cg_residual: float = math.nan
    n_actor_updates: int = 1


@dataclass
class RunRecord:
    config: dict
    logs: list = field(default_factory=list)
    episodes: list = field(default_factory=list)
    status: str = "ok"
    error: str | None = None
    wall_time: float = 0.0
    actor_time: float = 0.0
    actor_params: np.ndarray | None = field(default=None, repr=False)

    @property
    def total(self) -> int:
        return int(self.config["total_timesteps"])

    def binned_returns(self, n_bins: int = N_BINS):
        if not self.episodes:
            return np.arange(n_bins) + 0.5, np.full(n_bins, np.nan)
        return bin_curve([(t, r) for t, r, _ in self.episodes], n_bins, self.total)

    def binned_logprobs(self, n_bins: int = N_BINS):
        pts = [(lg.timestep, lg.mean_logprob) for lg in self.logs]
        return bin_curve(pts, n_bins, self.total)

    def smoothed_returns(self, n_bins: int = N_BINS, factor: float = SMOOTHING) -> np.ndarray:
        _, means = self.binned_returns(n_bins)
        return ewm_smooth(means, factor)

    def final_return(self) -> float:
        """Last bin of the binned, smoothed return curve."""
        return float(self.smoothed_returns()[-1])

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "status": self.status,
            "error": self.error,
            "wall_time": self.wall_time,
            "actor_time": self.actor_time,
            "episodes": [list(e) for e in self.episodes],
            "logs": [asdict(lg) for lg in self.logs],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        return cls(
            config=d["config"],
            logs=[IterationLog(**lg) for lg in d["logs"]],
            episodes=[tuple(e) for e in d["episodes"]],
            status=d["status"],
            error=d.get("error"),
            wall_time=d.get("wall_time", 0.0),
            actor_time=d.get("actor_time", 0.0),
        )


# -- agent construction -------------------------------------------------------


def make_agent(env, rng, hidden=(64, 64)):
    """Separate actor and critic networks sized for ``env``."""
    if env.discrete:
        actor = CategoricalPolicy.init(env.obs_dim, env.n_actions, rng, hidden)
    else:
        actor = GaussianPolicy.init(env.obs_dim, env.act_dim, rng, hidden)
    critic = Mlp.init(MlpSpec(env.obs_dim, 1, tuple(hidden)), rng)
    return actor, critic


@dataclass
class RolloutCarry:
    """Environment state that survives between rollouts."""

    obs: np.ndarray
    ep_return: float = 0.0
    ep_len: int = 0


def _env_action(env, a):
    if env.discrete:
        return a
    return np.clip(a, -env.max_torque, env.max_torque)


def collect_rollout(policy, critic: Mlp, env, rng, T: int, gamma: float = 0.99,
                    carry: RolloutCarry | None = None):
    """Run ``T`` steps, resetting the environment whenever an episode ends.

    Returns ``(batch, carry)``; pass ``carry`` back in to continue the same
    episode in the next call.  Values are evaluated in one batched critic
    pass after the environment loop.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if carry is None:
        carry = RolloutCarry(env.reset(rng))
    states = np.empty((T, env.obs_dim))
    actions = np.empty(T, dtype=np.int64) if env.discrete else np.empty((T, env.act_dim))
    rewards = np.empty(T)
    dones = np.zeros(T, dtype=bool)
    log_probs = np.empty(T)
    trunc_idx, trunc_obs = [], []
    episodes = []
    obs = carry.obs
    for t in range(T):
        states[t] = obs
        a, lp = policy.sample(obs, rng)
        actions[t] = a
        log_probs[t] = lp
        res = env.step(_env_action(env, a))
        rewards[t] = res.reward
        carry.ep_return += res.reward
        carry.ep_len += 1
        if res.terminated or res.truncated:
            dones[t] = True
            if res.truncated:
                trunc_idx.append(t)
                trunc_obs.append(res.observation)
            episodes.append((t, carry.ep_return, carry.ep_len))
            carry.ep_return = 0.0
            carry.ep_len = 0
            obs = env.reset(rng)
        else:
            obs = res.observation
    carry.obs = obs
    values = critic.forward(np.vstack([states, obs[None, :]]))[:, 0]
    bootstrap = np.zeros(T)
    if trunc_idx:
        bootstrap[trunc_idx] = critic.forward(np.vstack(trunc_obs))[:, 0]
    batch = RolloutBatch(states, actions, rewards, dones, values, log_probs,
                         bootstrap=bootstrap, episodes=episodes)
    return batch, carry


def critic_update(critic: Mlp, batch: RolloutBatch, gae: GaeOutput, adam: optim.AdamState,
                  alpha: float, epochs: int = 1, minibatch: int | None = None, rng=None):
    """Adam descent on ``mean((R_t - V(s_t))^2)``; returns ``(adam', loss_before)``.

    With the defaults this is a single full-batch step.  ``epochs`` passes
    over the batch are split into minibatches of ``minibatch`` samples,
    shuffled with ``rng`` when one is given.  ``critic`` is updated in place.
    """
    S = batch.states
    R = gae.returns
    n = len(R)
    resid = critic.forward(S)[:, 0] - R
    loss = float(np.mean(resid ** 2))
    if not math.isfinite(loss):
        raise NonFiniteError("critic loss is not finite")
    mb = n if not minibatch else min(int(minibatch), n)
    for epoch in range(epochs):
        order = rng.permutation(n) if rng is not None and mb < n else np.arange(n)
        for start in range(0, n, mb):
            idx = order[start:start + mb]
            Sb = S[idx]
            r = critic.forward(Sb)[:, 0] - R[idx] if (epoch or start) else resid[idx]
            grad = critic.backward(Sb, (2.0 / len(idx)) * r[:, None])
            new_params, adam = optim.adam_step(adam, critic.params, grad, alpha, ascent=False)
            critic.set_params(new_params)
    return adam, loss


def actor_update(cfg: AgentConfig, policy, batch: RolloutBatch, gae: GaeOutput,
                 adam: optim.AdamState | None):
    """Apply one actor update; returns ``(adam', report, n_updates)``.

    The policy gradient is the batch mean of ``A_t * score_t``.
    """
    S, A, adv = batch.states, batch.actions, gae.advantages
    n = len(batch)
    theta = policy.get_params()
    g = policy.weighted_score_sum(S, A, adv / n)
    opt = cfg.optimizer_id
    n_updates = 1
    if opt == "sgd":
        t0 = time.perf_counter()
        theta = optim.sgd_step(theta, g, cfg.eta)
        report = optim._report(g, g, t0)
    elif opt == "adam":
        t0 = time.perf_counter()
        new_theta, adam = optim.adam_step(adam, theta, g, cfg.eta, ascent=True)
        report = optim._report((new_theta - theta) / cfg.eta, g, t0)
        theta = new_theta
    elif opt == "cg":
        scores = policy.scores(S, A)
        theta, report = optim.cg_npg_step(theta, scores, g, cfg.eta, cfg.cg_damping,
                                          cfg.cg_max_iters, cfg.cg_tol)
    elif cfg.smac_batch >= n:
        lbar = policy.weighted_score_sum(S, A, np.full(n, 1.0 / n))
        theta, report = optim.smac_step(theta, lbar, g, cfg.eta, cfg.lam)
    else:
        # one Sherman-Morrison step per chunk of B stored transitions, with the
        # scores frozen at rollout time
        B = cfg.smac_batch
        scores = policy.scores(S, A)
        t0 = time.perf_counter()
        denoms = []
        for start in range(0, n, B):
            L = scores[start:start + B]
            a = adv[start:start + B]
            if B == 1:
                lbar, g_b = L[0], L[0] * a[0]
            else:
                lbar, g_b = L.mean(axis=0), (a / len(a)) @ L
            theta, rep = optim.smac_step(theta, lbar, g_b, cfg.eta, cfg.lam)
            denoms.append(rep.extra["denom"])
        report = optim.UpdateReport(rep.direction_norm, rep.dot_with_grad,
                                    time.perf_counter() - t0, {"denom": float(np.mean(denoms))})
        n_updates = len(denoms)
    policy.set_params(theta)
    return adam, report, n_updates


def _write_checkpoint(path: Path, policy, critic, critic_adam, actor_adam, iteration):
    payload = {
        "iteration": iteration,
        "actor": policy.to_dict(),
        "critic": critic.to_dict(),
        "critic_adam": critic_adam.to_dict(),
        "actor_adam": actor_adam.to_dict() if actor_adam is not None else None,
    }
    path.write_text(json.dumps(payload))


def train(config: AgentConfig, log_path=None) -> RunRecord:
    """Run the full training loop; errors produce a record with ``status='failed'``."""
    config.validate()
    record = RunRecord(config=config.to_dict())
    t_start = time.perf_counter()
    csv_fh = None
    try:
        rng = make_rng(config.seed)
        env = make_env(config.env_id)
        policy, critic = make_agent(env, rng, config.hidden)
        critic_adam = optim.AdamState.zeros(critic.dim)
        actor_adam = optim.AdamState.zeros(policy.dim) if config.optimizer_id == "adam" else None
        out_dir = Path(config.out_dir) if config.out_dir else None
        if log_path is not None:
            csv_fh = open(log_path, "w", newline="")
            writer = csv.writer(csv_fh)
            writer.writerow(LOG_COLUMNS)
        carry = None
        n_iters = config.total_timesteps // config.T
        for it in range(n_iters):
            batch, carry = collect_rollout(policy, critic, env, rng, config.T, config.gamma, carry)
            gae = compute_gae(batch, config.gamma, config.lambda_gae)
            t0 = time.perf_counter()
            actor_adam, report, n_updates = actor_update(config, policy, batch, gae, actor_adam)
            actor_ms = (time.perf_counter() - t0) * 1e3
            record.actor_time += actor_ms / 1e3
            critic_adam, loss = critic_update(critic, batch, gae, critic_adam, config.alpha,
                                              config.critic_epochs, config.critic_minibatch, rng)
            theta = policy.get_params()
            if not np.all(np.isfinite(theta)):
                raise NonFiniteError(f"actor parameters diverged at iteration {it}")
            timestep = (it + 1) * config.T
            ep_base = it * config.T
            for t, ret, length in batch.episodes:
                record.episodes.append((ep_base + t + 1, ret, length))
            log = IterationLog(
                iteration=it,
                timestep=timestep,
                mean_return=(float(np.mean([e[1] for e in batch.episodes]))
                             if batch.episodes else math.nan),
                mean_logprob=float(np.mean(batch.log_probs)),
                critic_loss=loss,
                dir_norm=report.direction_norm,
                denom=report.extra.get("denom", math.nan),
                wall_ms=actor_ms,
                dot_with_grad=report.dot_with_grad,
                n_episodes=len(batch.episodes),
                cg_iters=report.extra.get("cg_iters", 0),
                cg_residual=report.extra.get("cg_residual", math.nan),
                n_actor_updates=n_updates,
            )
            if config.diagnostics:
                diag = fisher.assumption_diagnostics(
                    sq_norms=policy.score_sq_norms(batch.states, batch.actions))
                log.G_hat, log.trace = diag["G_hat"], diag["trace"]
            record.logs.append(log)
            if csv_fh is not None:
                writer.writerow([getattr(log, c) for c in LOG_COLUMNS])
            if out_dir is not None and config.checkpoint_every and (it + 1) % config.checkpoint_every == 0:
                out_dir.mkdir(parents=True, exist_ok=True)
                _write_checkpoint(out_dir / f"checkpoint_{it + 1:06d}.json",
                                  policy, critic, critic_adam, actor_adam, it + 1)
        record.actor_params = policy.get_params()
    except Exception as exc:  # noqa: BLE001 - a failed run is reported, not raised
        record.status = "failed"
        record.error = f"{type(exc).__name__}: {exc}\n{traceback.format_exc()}"
    finally:
        if csv_fh is not None:
            csv_fh.close()
    record.wall_time = time.perf_counter() - t_start
    return record
