"""Seed derivation and distinct-index sampling shared by the experiment code."""

from __future__ import annotations

import hashlib

import numpy as np


def trial_seed(master_seed: int, index: int) -> int:
    """Per-trial seed from (master seed, trial index).

    Hash-based so results are identical under any parallel schedule; the
    trial index alone determines the stream.
    """
    digest = hashlib.sha256(f"{master_seed}:{index}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def trial_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(trial_seed(master_seed, index)))


def sample_distinct(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    """k distinct indices from range(n), uniform over ordered k-tuples.

    Partial Fisher-Yates on a virtual array, O(k) time and memory.
    """
    if k > n:
        raise ValueError(f"cannot draw {k} distinct values from {n}")
    state: dict = {}
    out = np.empty(k, dtype=np.int64)
    for i in range(k):
        j = int(rng.integers(i, n))
        vj = state.get(j, j)
        state[j] = state.get(i, i)
        state[i] = vj
        out[i] = vj
    return out
