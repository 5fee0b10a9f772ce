import numpy as np


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """
    Counter-based generator: (seed, stream ids) fully determine every variate,
    regardless of which thread consumes the stream.
    """
    assert seed >= 0, f'Seed should be non-negative: {seed}'

    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=tuple(int(s) for s in stream))))
