"""Keyed counter-based random streams.

Every random draw in the package comes from a Philox generator whose key is
derived from an integer seed plus a tuple of labels (domain name, point
index, purpose, chunk number).  Streams with different labels are
independent, and a given label tuple always reproduces the same numbers no
matter how work is scheduled.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _label_to_int(label) -> int:
    if isinstance(label, (bool, np.bool_)):
        return int(label)
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError("stream labels must be nonnegative")
        return int(label)
    digest = hashlib.blake2b(str(label).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def stream(seed: int, *labels) -> np.random.Generator:
    """Return the generator keyed by ``(seed, *labels)``."""
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_label_to_int(x) for x in labels))
    return np.random.Generator(np.random.Philox(ss))


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard complex Gaussian draws; normalizing gives uniform directions."""
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def unit_vectors(rng: np.random.Generator, m: int, k: int) -> np.ndarray:
    z = complex_normal(rng, (m, k))
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


def haar_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(complex_normal(rng, (n, n)))
    d = np.diagonal(r)
    return q * (d / np.abs(d))
