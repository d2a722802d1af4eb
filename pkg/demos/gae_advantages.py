"""Advantages from a short hand-made rollout.

Two episodes sit in one batch of six steps.  The first ends by termination,
the second is cut by the time limit, so its last step bootstraps from the
critic's value of the final observation.
"""

import numpy as np

from smac_rl.advantage import RolloutBatch, compute_gae, gae_bruteforce_oracle

rewards = np.array([1.0, 1.0, 1.0, 1.0, 1.0, 1.0])
dones = np.array([False, False, True, False, False, True])
values = np.array([2.0, 1.5, 0.8, 2.0, 1.6, 1.2, 0.0])
bootstrap = np.array([0, 0, 0, 0, 0, 1.1])  # V(final obs) of the truncated episode

batch = RolloutBatch(np.zeros((6, 1)), np.zeros(6, dtype=int), rewards, dones, values,
                     np.zeros(6), bootstrap=bootstrap)

for lam in (0.0, 0.9, 1.0):
    out = compute_gae(batch, gamma=0.99, lambda_gae=lam)
    ref = gae_bruteforce_oracle(batch, gamma=0.99, lambda_gae=lam)
    print(f"lambda_gae={lam}: A={np.round(out.advantages, 4)}  "
          f"max diff to double sum {np.max(np.abs(out.advantages - ref.advantages)):.0e}")

print("TD errors:", np.round(compute_gae(batch, 0.99, 0.9).deltas, 4))
