"""Named sub-seed derivation from a single master seed."""

import hashlib
from typing import Union

import numpy as np


def _name_entropy(name: Union[str, int]) -> int:
    digest = hashlib.sha256(str(name).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derive_seed(master: int, *names: Union[str, int]) -> int:
    """Derive an independent 32-bit seed for a named stream.

    The same (master, names) pair always yields the same seed, on every
    platform and in every process.
    """

    entropy = [int(master) & 0xFFFFFFFF] + [_name_entropy(n) for n in names]
    sequence = np.random.SeedSequence(entropy)
    return int(sequence.generate_state(1, dtype=np.uint32)[0])


def derive_rng(master: int, *names: Union[str, int]) -> np.random.Generator:
    """Generator seeded from `derive_seed`."""

    return np.random.default_rng(derive_seed(master, *names))
