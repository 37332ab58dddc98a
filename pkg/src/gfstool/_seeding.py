"""
Named random substreams derived from a single root seed

Every stochastic component draws from its own Philox generator, keyed by the
root seed, a stream name and optional integer indices (step, split, draw...).
Philox is counter-based, so a stream's output depends only on its key and
never on the order in which other streams were consumed.
"""

import zlib

import numpy as np

SEED_MASK = 2**64 - 1


def _stream_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def substream(seed: int, name: str, *indices: int) -> np.random.Generator:
    """
    Return a generator for the stream ``name`` at ``indices`` under ``seed``
    """
    sequence = np.random.SeedSequence(
        entropy=int(seed) & SEED_MASK,
        spawn_key=(_stream_key(name), *(int(i) for i in indices)),
    )
    return np.random.Generator(np.random.Philox(sequence))


def derive_seed(seed: int, name: str, *indices: int) -> int:
    """
    Derive a child 64-bit seed, for configs that carry a plain integer seed
    """
    return int(
        substream(seed, name, *indices).integers(0, 2**63 - 1, dtype=np.int64)
    )
