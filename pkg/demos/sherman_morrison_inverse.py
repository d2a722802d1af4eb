"""Damped rank-1 Fisher inverse without ever forming the matrix.

Compares the closed-form solve against dense elimination for a few sizes,
then times the matrix-free version up to a million parameters.
"""

import time

import numpy as np

from smac_rl.fisher import FisherPrecond, dense_sm_oracle, sm_inverse_apply
from smac_rl.numcore import make_rng

rng = make_rng(0)

print("accuracy against Gaussian elimination")
for d in (2, 8, 64, 128):
    p = FisherPrecond.from_direction(0.1, rng.standard_normal(d))
    g = rng.standard_normal(d)
    fast, slow = sm_inverse_apply(p, g), dense_sm_oracle(p, g)
    print(f"  d={d:4d}  rel err {np.linalg.norm(fast - slow) / np.linalg.norm(slow):.1e}")

print("\ncost of one application")
for d in (10**3, 10**4, 10**5, 10**6):
    p = FisherPrecond.from_direction(0.1, rng.standard_normal(d))
    g = rng.standard_normal(d)
    t0 = time.perf_counter()
    for _ in range(20):
        sm_inverse_apply(p, g)
    print(f"  d={d:8d}  {(time.perf_counter() - t0) / 20 * 1e3:7.3f} ms")

# the gradient component along the score gets shrunk, the rest is scaled by 1/lambda
l = np.array([3.0, 0.0])
p = FisherPrecond.from_direction(1.0, l)
print("\nalong the score:", sm_inverse_apply(p, [1.0, 0.0]), " orthogonal:", sm_inverse_apply(p, [0.0, 1.0]))
