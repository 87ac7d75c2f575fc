"""Counter-based random streams keyed by (seed, purpose, replication, role).

Every replication owns independent Philox streams, one per role, so a run
is reproducible regardless of how replications are scheduled.
"""

from __future__ import annotations

import numpy as np

ROLES = ("gaussian", "uniform", "jumps", "marks")
PURPOSES = {"main": 0, "calibration": 1, "first_passage": 2, "grid": 3}


def stream(seed: int, rep: int, role: str, purpose: str = "main") -> np.random.Generator:
    """An independent Philox generator for one (replication, role) pair."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, PURPOSES[purpose], int(rep), ROLES.index(role)]
    key = np.random.SeedSequence(entropy).generate_state(2, np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def streams(seed: int, rep: int, purpose: str = "main") -> dict[str, np.random.Generator]:
    return {role: stream(seed, rep, role, purpose) for role in ROLES}
