"""Deterministic derivation of independent RNG streams.

Every randomized routine in this package takes either an integer seed, a
``numpy.random.SeedSequence`` or a ready ``Generator``. Child streams are
derived by hashing a tuple of labels, so results never depend on execution
order or on how work is sheduled across processes.
"""

from __future__ import annotations

import hashlib

import numpy as np

SeedLike = "int | np.random.SeedSequence | np.random.Generator"


def derive_seed_sequence(root_seed: int, *parts: object) -> np.random.SeedSequence:
    """Build a SeedSequence from a root seed and an arbitrary label path.

    The labels are canonicalized to text and hashed with SHA-256, so the
    stream depends only on the (root_seed, labels) pair, not on platform
    or process layout.
    """
    text = "\x1f".join([str(int(root_seed))] + [_canon(p) for p in parts])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 4], "big") for i in range(0, 32, 4)]
    return np.random.SeedSequence(words)


def _canon(part: object) -> str:
    if isinstance(part, float):
        return repr(part)
    return str(part)


def as_generator(seed) -> np.random.Generator:
    """Coerce an int seed, SeedSequence or Generator into a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    return np.random.default_rng(int(seed))


def as_seed_sequence(seed) -> np.random.SeedSequence:
    """Coerce an int seed or SeedSequence into a SeedSequence."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, np.random.Generator):
        raise TypeError("need a seed or SeedSequence, not a live Generator")
    return np.random.SeedSequence(int(seed))
