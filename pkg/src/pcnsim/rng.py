"""Seed derivation for reproducible runs.

Every random draw in the simulator comes from a ``numpy.random.Generator``
backed by PCG64. Independent streams are derived from a 64-bit master seed
by hashing the master seed together with a fixed stream tag and any number
of integer keys (workload index, replication index, ...) with BLAKE2b.

Stream tags::

    TOPOLOGY = 1   random regular graph construction
    FUNDING  = 2   initial directional balances
    WORKLOAD = 3   payment sequence generation
    BINDING  = 4   customer ingress assignment
    POLICY   = 5   fixed random edge weights
    AMOUNTS  = 6   per-replication payment amount redraw
    RUN      = 7   per-(workload, replication) run seed
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

TOPOLOGY = 1
FUNDING = 2
WORKLOAD = 3
BINDING = 4
POLICY = 5
AMOUNTS = 6
RUN = 7

_MASK64 = (1 << 64) - 1


def derive_seed(seed: int, *keys: int) -> int:
    """Hash ``seed`` and ``keys`` into a new 64-bit seed."""
    words = [seed & _MASK64] + [k & _MASK64 for k in keys]
    payload = struct.pack(f"<{len(words)}Q", *words)
    digest = hashlib.blake2b(payload, digest_size=8, person=b"pcnsim-seed").digest()
    return int.from_bytes(digest, "little")


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    if keys:
        seed = derive_seed(seed, *keys)
    return np.random.Generator(np.random.PCG64(seed & _MASK64))
