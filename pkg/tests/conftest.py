"""Shared fixtures and helpers for the test suite."""

import numpy as np
import pytest

from ddrake.channel import ChannelModel, ChannelPath, _normalized
from ddrake.frame import FrameConfig, make_alphabet, map_to_grid, qam_modulate
from ddrake.rng import philox


def random_channel(
    cfg: FrameConfig,
    n_paths: int,
    seed: int,
    k_lo: int | None = None,
    k_hi: int | None = None,
) -> ChannelModel:
    """Random unit-power channel with distinct (l, k) pairs inside the frame."""
    rng = philox(seed)
    if k_lo is None:
        k_lo = -(cfg.N // 2 - 1)
    if k_hi is None:
        k_hi = cfg.N // 2 - 1
    used = set()
    paths = []
    while len(paths) < n_paths:
        l = int(rng.integers(0, cfg.l_max + 1))
        k = int(rng.integers(k_lo, k_hi + 1))
        if (l, k) in used:
            continue
        used.add((l, k))
        g = rng.standard_normal() + 1j * rng.standard_normal()
        paths.append(ChannelPath(g, l, k))
    return _normalized(paths, cfg.l_max)


def random_frame(cfg: FrameConfig, qam_order: int, seed: int):
    """(bits, transmit grid) for a random payload."""
    alphabet = make_alphabet(qam_order)
    rng = philox(seed)
    bits = rng.integers(0, 2, size=cfg.M_prime * cfg.N * alphabet.bits_per_symbol)
    bits = bits.astype(np.uint8)
    return bits, map_to_grid(qam_modulate(bits, alphabet), cfg)


@pytest.fixture
def small_cfg() -> FrameConfig:
    return FrameConfig(M=8, N=8, delta_f=15e3, l_max=3)


@pytest.fixture
def desk_cfg() -> FrameConfig:
    return FrameConfig(M=64, N=32, delta_f=15e3, l_max=8)
