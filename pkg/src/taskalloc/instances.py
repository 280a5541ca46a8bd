"""Reference instances and the seeded random instance generator."""

from __future__ import annotations

import numpy as np

from .model import RewardMatrix

# Two agents, tasks (a, b).
EXAMPLE1 = RewardMatrix([[0.5, 0.7], [0.5, 0.3]])

# Four agents, eight tasks, printed at 4 decimals.
TABLE1 = RewardMatrix(
    [
        [0.4536, 0.4407, 0.2881, 0.0055, 0.0049, 0.2394, 0.3152, 0.2217],
        [0.7504, 0.2228, 0.0411, 0.2801, 0.2374, 0.0768, 0.0852, 0.1760],
        [0.7656, 0.0987, 0.1381, 0.2491, 0.2969, 0.1003, 0.1471, 0.6902],
        [0.3023, 0.2211, 0.3334, 0.2462, 0.3033, 0.4991, 0.1231, 0.5931],
    ]
)

# 0-based version of V1={2,7}, V2={4}, V3={1,8}, V4={3,5,6}.
TABLE1_OPTIMUM = (frozenset({1, 6}), frozenset({3}), frozenset({0, 7}), frozenset({2, 4, 5}))


def scaled_profile(n: int, scale: float = 1000.0) -> RewardMatrix:
    """Single task: agent 1 gets ``B``, agent 2 ``0.9 B``, agent ``i >= 3`` gets ``0.3 B / i``."""
    vals = [scale, 0.9 * scale] + [0.3 * scale / i for i in range(3, n + 1)]
    return RewardMatrix(np.array(vals[:n])[:, None])


def generate_random_instance(seed: int, n: int, m: int) -> RewardMatrix:
    """``f = r * phi`` with ``r, phi ~ U[0, 1]`` drawn independently."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    rng = np.random.default_rng(seed)
    r = rng.uniform(0.0, 1.0, (n, m))
    phi = rng.uniform(0.0, 1.0, (n, m))
    return RewardMatrix.from_factors(r, phi)
