"""OTFS frame geometry, QAM alphabets and grid mapping.

The delay-Doppler grid is an M x N complex array (delay rows, Doppler
columns).  The last ``l_max`` rows of every transmit grid are forced to
zero; only the first ``M' = M - l_max`` rows carry payload symbols.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class FrameConfig:
    """Geometry of one OTFS frame.

    M: number of delay bins, N: number of Doppler bins (both powers of
    two), delta_f: subcarrier spacing in Hz, l_max: number of trailing
    null rows (also the largest admissible path delay tap).
    """

    M: int
    N: int
    delta_f: float
    l_max: int

    def __post_init__(self):
        for name, v in (("M", self.M), ("N", self.N)):
            if v < 2 or (v & (v - 1)) != 0:
                raise ValueError(f"{name} must be a power of two >= 2, got {v}")
        if not (1 <= self.l_max < self.M):
            raise ValueError(f"l_max must satisfy 1 <= l_max < M, got {self.l_max}")
        if self.delta_f <= 0:
            raise ValueError("delta_f must be positive")

    @property
    def T(self) -> float:
        """Symbol time; T * delta_f = 1 by construction."""
        return 1.0 / self.delta_f

    @property
    def M_prime(self) -> int:
        """Number of payload (non-null) delay rows."""
        return self.M - self.l_max

    @property
    def z(self) -> complex:
        """Unit phasor exp(j*2*pi/(M*N)) used by the phase tables."""
        return np.exp(2j * np.pi / (self.M * self.N))

    @property
    def sample_rate(self) -> float:
        """Critically sampled rate M * delta_f in Hz."""
        return self.M * self.delta_f


@dataclass(frozen=True)
class QamAlphabet:
    """Gray-labelled square QAM constellation with unit average energy.

    ``points[j]`` is the symbol whose Gray label is the bits of integer
    ``j`` (MSB first, ``bits_per_symbol`` of them).
    """

    order: int
    points: np.ndarray = field(repr=False)

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.order))

    def labels(self) -> np.ndarray:
        """(order, bits_per_symbol) array of the bit label of each point."""
        b = self.bits_per_symbol
        idx = np.arange(self.order)
        return ((idx[:, None] >> np.arange(b - 1, -1, -1)[None, :]) & 1).astype(np.uint8)


def _gray_axis_levels(bits: int) -> np.ndarray:
    """PAM levels indexed by Gray-coded axis bits (0 -> most positive)."""
    n = 1 << bits
    # position p on the axis (left to right) has Gray code p ^ (p >> 1)
    levels = np.empty(n)
    for p in range(n):
        g = p ^ (p >> 1)
        levels[g] = n - 1 - 2 * p
    return levels


@lru_cache(maxsize=None)
def make_alphabet(order: int) -> QamAlphabet:
    """Build the Gray-mapped QAM alphabet of the given order (4 or 16)."""
    if order not in (4, 16):
        raise ValueError(f"unsupported QAM order {order}")
    bits = int(np.log2(order))
    half = bits // 2
    axis = _gray_axis_levels(half)
    pts = np.empty(order, dtype=complex)
    for j in range(order):
        i_bits = j >> half
        q_bits = j & ((1 << half) - 1)
        pts[j] = axis[i_bits] + 1j * axis[q_bits]
    pts /= np.sqrt(np.mean(np.abs(pts) ** 2))
    pts.setflags(write=False)
    return QamAlphabet(order=order, points=pts)


def qam_modulate(bits: np.ndarray, alphabet: QamAlphabet) -> np.ndarray:
    """Map a bit sequence to constellation symbols, MSB-first per symbol."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    b = alphabet.bits_per_symbol
    if bits.size % b != 0:
        raise ValueError(f"bit count {bits.size} not divisible by {b}")
    groups = bits.reshape(-1, b)
    idx = groups @ (1 << np.arange(b - 1, -1, -1))
    return alphabet.points[idx]


def qam_demodulate_hard(symbols: np.ndarray, alphabet: QamAlphabet) -> np.ndarray:
    """Nearest-point hard demap back to bits (inverse of qam_modulate)."""
    idx = slice_indices(np.asarray(symbols).ravel(), alphabet)
    return alphabet.labels()[idx].ravel()


def slice_indices(c: np.ndarray, alphabet: QamAlphabet) -> np.ndarray:
    """Index of the closest alphabet point for each entry of ``c``.

    Ties break toward the lowest alphabet index (argmin convention).
    """
    d = np.abs(c[..., None] - alphabet.points)
    return np.argmin(d, axis=-1)


def ml_slice(c: np.ndarray, alphabet: QamAlphabet) -> np.ndarray:
    """Per-entry maximum-likelihood slicing to the nearest QAM point."""
    c = np.asarray(c)
    return alphabet.points[slice_indices(c, alphabet)]


@dataclass
class DelayDopplerGrid:
    """M x N complex symbol grid with delay-row accessors."""

    entries: np.ndarray
    role: str = "transmit"

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        if self.entries.ndim != 2:
            raise ValueError("grid must be 2-D (M x N)")

    @property
    def M(self) -> int:
        return self.entries.shape[0]

    @property
    def N(self) -> int:
        return self.entries.shape[1]

    def row(self, m: int) -> np.ndarray:
        """The length-N Doppler vector of delay row m."""
        return self.entries[m]

    def check_null_rows(self, cfg: FrameConfig) -> bool:
        """True when all rows >= M' are exactly zero."""
        return not np.any(self.entries[cfg.M_prime:])


def map_to_grid(symbols: np.ndarray, cfg: FrameConfig) -> DelayDopplerGrid:
    """Place payload symbols on rows 0..M'-1 (delay-major), null the rest."""
    symbols = np.asarray(symbols, dtype=complex).ravel()
    need = cfg.M_prime * cfg.N
    if symbols.size != need:
        raise ValueError(f"expected {need} payload symbols, got {symbols.size}")
    grid = np.zeros((cfg.M, cfg.N), dtype=complex)
    grid[: cfg.M_prime] = symbols.reshape(cfg.M_prime, cfg.N)
    return DelayDopplerGrid(grid, role="transmit")


def extract_payload(grid: DelayDopplerGrid, cfg: FrameConfig) -> np.ndarray:
    """Inverse of map_to_grid: the payload rows flattened delay-major."""
    return grid.entries[: cfg.M_prime].ravel().copy()
