"""Cartpole, Acrobot and Pendulum written out in plain Python.

Dynamics, constants, rewards and termination rules follow the standard
classic-control definitions; the only change is a 1000-step time limit on
every task.  Each environment owns no random state: ``reset`` takes the
generator explicitly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "StepResult",
    "CartPole",
    "Acrobot",
    "Pendulum",
    "make_env",
    "ENV_IDS",
    "MAX_EPISODE_STEPS",
    "write_trajectory_csv",
]

MAX_EPISODE_STEPS = 1000


@dataclass(frozen=True)
class StepResult:
    observation: np.ndarray
    reward: float
    terminated: bool
    truncated: bool

    @property
    def done(self) -> bool:
        return self.terminated or self.truncated


class _Env:
    obs_dim: int
    discrete: bool
    n_actions: int = 0
    act_dim: int = 0
    obs_low: np.ndarray
    obs_high: np.ndarray

    def __init__(self, max_steps: int = MAX_EPISODE_STEPS):
        self.max_steps = max_steps
        self.step_count = 0
        self.state = None

    def _tick(self, obs, reward, terminated) -> StepResult:
        self.step_count += 1
        truncated = (not terminated) and self.step_count >= self.max_steps
        return StepResult(obs, reward, terminated, truncated)

    def _require_reset(self):
        if self.state is None:
            raise RuntimeError("call reset() before step()")


class CartPole(_Env):
    obs_dim = 4
    discrete = True
    n_actions = 2

    gravity = 9.8
    masscart = 1.0
    masspole = 0.1
    total_mass = masspole + masscart
    length = 0.5
    polemass_length = masspole * length
    force_mag = 10.0
    tau = 0.02
    theta_threshold = 12 * 2 * math.pi / 360
    x_threshold = 2.4

    obs_low = np.array([-2 * x_threshold, -np.inf, -2 * theta_threshold, -np.inf])
    obs_high = -obs_low

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        self.state = tuple(rng.uniform(-0.05, 0.05, size=4).tolist())
        self.step_count = 0
        return np.array(self.state)

    def set_state(self, x, x_dot, theta, theta_dot):
        self.state = (float(x), float(x_dot), float(theta), float(theta_dot))
        self.step_count = 0

    def step(self, action) -> StepResult:
        self._require_reset()
        if action not in (0, 1):
            raise ValueError(f"cartpole action must be 0 or 1, got {action!r}")
        x, x_dot, theta, theta_dot = self.state
        force = self.force_mag if action == 1 else -self.force_mag
        cos_t = math.cos(theta)
        sin_t = math.sin(theta)
        temp = (force + self.polemass_length * theta_dot ** 2 * sin_t) / self.total_mass
        theta_acc = (self.gravity * sin_t - cos_t * temp) / (
            self.length * (4.0 / 3.0 - self.masspole * cos_t ** 2 / self.total_mass))
        x_acc = temp - self.polemass_length * theta_acc * cos_t / self.total_mass
        x = x + self.tau * x_dot
        x_dot = x_dot + self.tau * x_acc
        theta = theta + self.tau * theta_dot
        theta_dot = theta_dot + self.tau * theta_acc
        self.state = (x, x_dot, theta, theta_dot)
        terminated = (x < -self.x_threshold or x > self.x_threshold
                      or theta < -self.theta_threshold or theta > self.theta_threshold)
        return self._tick(np.array(self.state), 1.0, terminated)


def _wrap(x: float, lo: float, hi: float) -> float:
    diff = hi - lo
    while x > hi:
        x -= diff
    while x < lo:
        x += diff
    return x


class Acrobot(_Env):
    obs_dim = 6
    discrete = True
    n_actions = 3

    dt = 0.2
    link_length_1 = 1.0
    link_mass_1 = 1.0
    link_mass_2 = 1.0
    link_com_pos_1 = 0.5
    link_com_pos_2 = 0.5
    link_moi = 1.0
    max_vel_1 = 4 * math.pi
    max_vel_2 = 9 * math.pi
    torques = (-1.0, 0.0, 1.0)
    g = 9.8

    obs_low = np.array([-1.0, -1.0, -1.0, -1.0, -max_vel_1, -max_vel_2])
    obs_high = -obs_low

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        self.state = tuple(rng.uniform(-0.1, 0.1, size=4).tolist())
        self.step_count = 0
        return self._obs()

    def _obs(self) -> np.ndarray:
        t1, t2, d1, d2 = self.state
        return np.array([math.cos(t1), math.sin(t1), math.cos(t2), math.sin(t2), d1, d2])

    def _dsdt(self, s, a):
        m1, m2 = self.link_mass_1, self.link_mass_2
        l1 = self.link_length_1
        lc1, lc2 = self.link_com_pos_1, self.link_com_pos_2
        I1 = I2 = self.link_moi
        g = self.g
        theta1, theta2, dtheta1, dtheta2 = s
        cos2 = math.cos(theta2)
        sin2 = math.sin(theta2)
        d1 = m1 * lc1 ** 2 + m2 * (l1 ** 2 + lc2 ** 2 + 2 * l1 * lc2 * cos2) + I1 + I2
        d2 = m2 * (lc2 ** 2 + l1 * lc2 * cos2) + I2
        phi2 = m2 * lc2 * g * math.cos(theta1 + theta2 - math.pi / 2.0)
        phi1 = (-m2 * l1 * lc2 * dtheta2 ** 2 * sin2
                - 2 * m2 * l1 * lc2 * dtheta2 * dtheta1 * sin2
                + (m1 * lc1 + m2 * l1) * g * math.cos(theta1 - math.pi / 2.0)
                + phi2)
        ddtheta2 = (a + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1 ** 2 * sin2 - phi2) / (
            m2 * lc2 ** 2 + I2 - d2 ** 2 / d1)
        ddtheta1 = -(d2 * ddtheta2 + phi1) / d1
        return (dtheta1, dtheta2, ddtheta1, ddtheta2)

    def _rk4(self, s, a):
        h = self.dt
        k1 = self._dsdt(s, a)
        k2 = self._dsdt(tuple(si + 0.5 * h * ki for si, ki in zip(s, k1)), a)
        k3 = self._dsdt(tuple(si + 0.5 * h * ki for si, ki in zip(s, k2)), a)
        k4 = self._dsdt(tuple(si + h * ki for si, ki in zip(s, k3)), a)
        return tuple(si + h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
                     for si, a1, a2, a3, a4 in zip(s, k1, k2, k3, k4))

    def step(self, action) -> StepResult:
        self._require_reset()
        if action not in (0, 1, 2):
            raise ValueError(f"acrobot action must be 0, 1 or 2, got {action!r}")
        t1, t2, d1, d2 = self._rk4(self.state, self.torques[int(action)])
        t1 = _wrap(t1, -math.pi, math.pi)
        t2 = _wrap(t2, -math.pi, math.pi)
        d1 = min(max(d1, -self.max_vel_1), self.max_vel_1)
        d2 = min(max(d2, -self.max_vel_2), self.max_vel_2)
        self.state = (t1, t2, d1, d2)
        terminated = -math.cos(t1) - math.cos(t2 + t1) > 1.0
        return self._tick(self._obs(), 0.0 if terminated else -1.0, terminated)


class Pendulum(_Env):
    obs_dim = 3
    discrete = False
    act_dim = 1

    max_speed = 8.0
    max_torque = 2.0
    dt = 0.05
    g = 10.0
    m = 1.0
    l = 1.0

    obs_low = np.array([-1.0, -1.0, -max_speed])
    obs_high = -obs_low

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        th = float(rng.uniform(-math.pi, math.pi))
        thdot = float(rng.uniform(-1.0, 1.0))
        self.state = (th, thdot)
        self.step_count = 0
        return self._obs()

    def set_state(self, th, thdot):
        self.state = (float(th), float(thdot))
        self.step_count = 0

    def _obs(self) -> np.ndarray:
        th, thdot = self.state
        return np.array([math.cos(th), math.sin(th), thdot])

    def energy(self) -> float:
        """Mechanical energy of the rod (uniform, pivot at one end)."""
        th, thdot = self.state
        inertia = self.m * self.l ** 2 / 3.0
        return 0.5 * inertia * thdot ** 2 + self.m * self.g * 0.5 * self.l * math.cos(th)

    def step(self, action) -> StepResult:
        self._require_reset()
        u = float(np.asarray(action, dtype=np.float64).reshape(-1)[0])
        if not (-self.max_torque <= u <= self.max_torque):
            raise ValueError(f"pendulum torque must lie in [-2, 2], got {u}")
        th, thdot = self.state
        th_norm = ((th + math.pi) % (2 * math.pi)) - math.pi
        cost = th_norm ** 2 + 0.1 * thdot ** 2 + 0.001 * u ** 2
        new_thdot = thdot + (3 * self.g / (2 * self.l) * math.sin(th)
                             + 3.0 / (self.m * self.l ** 2) * u) * self.dt
        new_thdot = min(max(new_thdot, -self.max_speed), self.max_speed)
        new_th = th + new_thdot * self.dt
        self.state = (new_th, new_thdot)
        return self._tick(self._obs(), -cost, False)


ENV_IDS = {"cartpole": CartPole, "acrobot": Acrobot, "pendulum": Pendulum}


def make_env(env_id: str, max_steps: int = MAX_EPISODE_STEPS):
    try:
        cls = ENV_IDS[env_id.lower()]
    except KeyError:
        raise ValueError(f"unknown env id {env_id!r}; choose from {sorted(ENV_IDS)}") from None
    return cls(max_steps=max_steps)


def write_trajectory_csv(path, observations, actions, rewards, dones) -> None:
    """Rows of ``t, obs_0..obs_k, action, reward, done``."""
    observations = np.asarray(observations, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        k = observations.shape[1]
        w.writerow(["t", *[f"obs_{i}" for i in range(k)], "action", "reward", "done"])
        for t, (o, a, r, d) in enumerate(zip(observations, actions, rewards, dones)):
            a_val = np.asarray(a).reshape(-1)
            a_out = a_val[0].item() if a_val.size == 1 else " ".join(map(str, a_val.tolist()))
            w.writerow([t, *o.tolist(), a_out, float(r), int(bool(d))])
