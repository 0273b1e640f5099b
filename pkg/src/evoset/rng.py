"""Deterministic random streams.

Every random draw in the package comes from :func:`seed_stream`.  Stream
``(master_seed, index)`` is a PCG64 generator seeded by
``SeedSequence(entropy=master_seed, spawn_key=index)``, so trial ``i`` sees
the same numbers no matter how trials are batched or distributed.
"""
from __future__ import annotations

import numpy as np

RNG_ALGORITHM = "numpy.PCG64 <- SeedSequence(entropy=master_seed, spawn_key=stream_index)"

_OPEN_SCALE = 2.0 ** -53


def seed_stream(master_seed: int, stream_index: int | tuple[int, ...]) -> np.random.Generator:
    if isinstance(stream_index, (int, np.integer)):
        key = (int(stream_index),)
    else:
        key = tuple(int(i) for i in stream_index)
    if master_seed < 0 or any(k < 0 for k in key):
        raise ValueError("seeds and stream indices must be nonnegative")
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=key)
    return np.random.Generator(np.random.PCG64(ss))


def uniform_open(rng: np.random.Generator) -> float:
    """Uniform on the open interval (0, 1): midpoints of a 2**-53 grid."""
    k = int(rng.integers(0, 1 << 53))
    return (k + 0.5) * _OPEN_SCALE


class TrialUniforms:
    """Per-trial uniform streams consumed in blocks.

    Lets vectorised simulations advance many independent trials in lock
    step while each trial still reads its own stream in order.
    """

    def __init__(self, master_seed: int, trials: int, purpose: int = 0):
        self.gens = [seed_stream(master_seed, (purpose, i)) for i in range(trials)]

    def block(self, idx: np.ndarray, size: int) -> np.ndarray:
        out = np.empty((len(idx), size))
        for row, i in enumerate(idx):
            out[row] = self.gens[i].random(size)
        return out
