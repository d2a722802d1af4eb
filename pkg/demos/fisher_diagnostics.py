"""Curvature statistics of real score vectors.

Collects one rollout with a small Cartpole actor, then reports the largest
score norm, the Fisher trace per dimension and the smallest eigenvalue of
the empirical Fisher (the actor is small enough for a dense check).
"""

from smac_rl.advantage import compute_gae
from smac_rl.envs import make_env
from smac_rl.fisher import FvpBatch, assumption_diagnostics
from smac_rl.numcore import make_rng
from smac_rl.trainer import collect_rollout, make_agent

env = make_env("cartpole")
rng = make_rng(3)
policy, critic = make_agent(env, rng, hidden=(8,))
batch, _ = collect_rollout(policy, critic, env, rng, T=1000)
scores = policy.scores(batch.states, batch.actions)

diag = assumption_diagnostics(FvpBatch(scores))
d = scores.shape[1]
print(f"d={d}  G_hat={diag['G_hat']:.3f}  trace/d={diag['trace'] / d:.4f}  mu_hat={diag['mu_hat']:.2e}")
print("sandwich mu_hat <= trace/d <= G_hat^2:",
      diag["mu_hat"] <= diag["trace"] / d <= diag["G_hat"] ** 2)

# the same bound from squared norms only, which is what training logs
norms = policy.score_sq_norms(batch.states, batch.actions)
print("from norms only:", assumption_diagnostics(sq_norms=norms))
print("mean advantage:", compute_gae(batch, 0.99, 0.9).advantages.mean())
