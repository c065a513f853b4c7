"""Deterministic counter-based random streams.

Every stochastic quantity in a campaign (channel draw, payload bits,
noise) is derived from a Philox counter-based generator keyed by a
splitmix64 hash of (master seed, SNR index, frame index).  Streams are
therefore reproducible and independent of worker count or evaluation
order.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One splitmix64 output step; a well-mixed 64-bit hash."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def mix_seed(*parts: int) -> int:
    """Fold any number of integers into a single 64-bit seed."""
    acc = 0x243F6A8885A308D3  # arbitrary nonzero start
    for p in parts:
        acc = splitmix64(acc ^ (int(p) & _MASK64))
    return acc


def philox(seed: int) -> np.random.Generator:
    """Counter-based generator for the given 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=seed & _MASK64))


def frame_rng(master_seed: int, snr_index: int, frame_index: int) -> np.random.Generator:
    """The per-frame stream used by Monte-Carlo campaigns."""
    return philox(mix_seed(master_seed, snr_index, frame_index))
