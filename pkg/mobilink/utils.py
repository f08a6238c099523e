import hashlib
from typing import Union

import numpy as np

Key = Union[int, str]


def _key_to_int(key: Key) -> int:
    if isinstance(key, str):
        return int.from_bytes(hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest(), "little")
    if key < 0:
        raise ValueError(f"seed keys must be non-negative, got {key}")
    return int(key)


def seed_sequence(seed: int, *keys: Key) -> np.random.SeedSequence:
    """SeedSequence keyed by (seed, *keys); string keys are hashed to 64 bits with blake2b."""
    return np.random.SeedSequence([_key_to_int(seed), *(_key_to_int(k) for k in keys)])


def substream(seed: int, *keys: Key) -> np.random.Generator:
    """Independent PCG64 stream for a labelled piece of work."""
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *keys)))


def derive_seed(seed: int, label: str) -> int:
    """Stage seed derived from the master seed; recorded in run metadata."""
    return int(seed_sequence(seed, label).generate_state(1, dtype=np.uint32)[0])


def round_half_up(x: float) -> int:
    # rho * N products like 0.3 * 10 carry float noise; snap before rounding
    return int(np.floor(round(x, 9) + 0.5))
