import hashlib
from typing import List

import numpy as np

SEED_BOUND = 2 ** 63


def derive_seed(master_seed: int, stage: str, cell_id: str = "") -> int:
    """Derive an independent 63-bit seed for a (stage, cell) pair.

    The derivation only depends on its arguments, so cells can be run in any
    order (or in parallel) and still reproduce the same numbers.
    """
    key = "{}:{}:{}".format(master_seed, stage, cell_id).encode("utf-8")
    digest = hashlib.sha256(key).digest()
    return int.from_bytes(digest[:8], "little") % SEED_BOUND


def episode_seeds(seed: int, count: int) -> List[int]:
    """Return the reset seeds of `count` consecutive episodes."""
    rng = np.random.default_rng(seed)
    return [int(s) for s in rng.integers(0, SEED_BOUND, size=count, dtype=np.int64)]
