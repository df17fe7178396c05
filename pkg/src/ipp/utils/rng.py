"""Reproducible random streams.

Every draw in the package comes from a ``Philox`` generator, a
counter-based bit generator whose output is fixed across platforms and
numpy releases. Streams are addressed by a root seed plus a tuple of
keys::

    stream(seed, "train", 3)       # environment 3 of the training data
    stream(seed, "starts", 0)      # optimizer starts for the first lambda

Distinct key tuples map to distinct ``SeedSequence`` spawn keys, so the
streams are statistically independent and changing how many numbers one
of them produces never shifts another.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_to_int(key: int | str | float) -> int:
    if isinstance(key, (bool, np.bool_)):
        return int(key)
    if isinstance(key, (int, np.integer)):
        if key < 0:
            raise ValueError(f"Stream keys must be non-negative, got {key}")
        return int(key)
    if isinstance(key, float):
        # Keys such as a sample size or lambda may arrive as floats.
        return zlib.crc32(repr(key).encode("ascii"))
    return zlib.crc32(str(key).encode("utf-8"))


def stream(seed: int, *keys: int | str | float) -> np.random.Generator:
    """Return the Philox generator for ``seed`` and the given sub-keys."""
    if seed < 0:
        raise ValueError(f"Seed must be non-negative, got {seed}")
    spawn_key = tuple(_key_to_int(k) for k in keys)
    sequence = np.random.SeedSequence(int(seed), spawn_key=spawn_key)
    return np.random.Generator(np.random.Philox(sequence))


def derive_seed(seed: int, *keys: int | str | float) -> int:
    """A 63-bit integer seed derived from ``seed`` and ``keys``.

    Used where a child object (a spec, a replication) needs its own
    integer seed rather than a generator.
    """
    return int(stream(seed, *keys).integers(0, 2**63 - 1))
