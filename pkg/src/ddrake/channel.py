"""Sparse delay-Doppler channels and their circulant spread tables.

A channel is a list of (gain, delay tap, Doppler tap) paths.  For the
rectangular-pulse OTFS chain each (row m, delay l) pair owns a length-N
Doppler spread vector; its circulant acts on transmit row m-l.  All
circulants are kept in compressed form: the first column and its N-point
DFT.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .frame import DelayDopplerGrid, FrameConfig
from .rng import philox

# EVA power delay profile (3GPP): excess delays in ns, relative powers in dB.
EVA_DELAYS_NS = np.array([0.0, 30.0, 150.0, 310.0, 370.0, 710.0, 1090.0, 1730.0, 2510.0])
EVA_POWERS_DB = np.array([0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9])


@dataclass(frozen=True)
class ChannelPath:
    """One propagation path: complex gain, integer delay and Doppler taps."""

    h: complex
    l: int
    k: int


@dataclass(frozen=True)
class ChannelModel:
    """Power-normalized sparse multipath channel."""

    paths: tuple[ChannelPath, ...]
    l_max: int

    def __post_init__(self):
        for p in self.paths:
            if not (0 <= p.l <= self.l_max):
                raise ValueError(f"path delay {p.l} outside [0, l_max={self.l_max}]")

    @property
    def delay_set(self) -> tuple[int, ...]:
        """Unique delay taps, ascending (the rake branch set)."""
        return tuple(sorted({p.l for p in self.paths}))

    @property
    def L(self) -> int:
        return len(self.delay_set)

    @property
    def k_max(self) -> int:
        return max(abs(p.k) for p in self.paths)

    def total_power(self) -> float:
        return float(sum(abs(p.h) ** 2 for p in self.paths))


def _normalized(paths: list[ChannelPath], l_max: int) -> ChannelModel:
    power = sum(abs(p.h) ** 2 for p in paths)
    scale = 1.0 / np.sqrt(power)
    return ChannelModel(
        paths=tuple(ChannelPath(p.h * scale, p.l, p.k) for p in paths),
        l_max=l_max,
    )


def generate_eva(
    cfg: FrameConfig,
    speed_kmh: float,
    doppler_cap: int,
    seed: int,
) -> ChannelModel:
    """Draw one EVA channel realization.

    Delays are quantized to taps at the critically-sampled rate
    M*delta_f.  Each tap gain keeps the profile magnitude with a uniform
    random phase; Doppler taps are drawn one-sided from U(0, doppler_cap)
    and rounded to integers.  The carrier frequency is never part of the
    model, so ``doppler_cap`` (not ``speed_kmh``) bounds the Doppler
    spread; the speed is retained as campaign metadata only.
    """
    if doppler_cap >= cfg.N // 2:
        raise ValueError(f"doppler_cap {doppler_cap} violates under-spread bound N/2={cfg.N // 2}")
    if doppler_cap < 0:
        raise ValueError("doppler_cap must be non-negative")
    rng = philox(seed)
    taps = np.rint(EVA_DELAYS_NS * 1e-9 * cfg.sample_rate).astype(int)
    if taps.max() > cfg.l_max:
        raise ValueError(
            f"EVA delay spread needs l_max >= {taps.max()}, frame has {cfg.l_max}"
        )
    powers = 10.0 ** (EVA_POWERS_DB / 10.0)
    amps = np.sqrt(powers / powers.sum())
    phases = rng.uniform(0.0, 2.0 * np.pi, size=len(taps))
    dopplers = np.minimum(np.rint(rng.uniform(0.0, doppler_cap, size=len(taps))), doppler_cap)
    paths = [
        ChannelPath(a * np.exp(1j * th), int(l), int(k))
        for a, th, l, k in zip(amps, phases, taps, dopplers)
    ]
    return _normalized(paths, cfg.l_max)


def load_channel_json(path: str, l_max: int) -> ChannelModel:
    """Load a custom channel from a JSON list of path records."""
    with open(path) as f:
        records = json.load(f)
    if not isinstance(records, list) or not records:
        raise ValueError("channel file must hold a non-empty list of paths")
    paths = [
        ChannelPath(
            complex(r["gain_re"], r["gain_im"]),
            int(r["delay_tap"]),
            int(r["doppler_tap"]),
        )
        for r in records
    ]
    return _normalized(paths, l_max)


def phase_table(cfg: FrameConfig) -> np.ndarray:
    """(M, N) table of unit phasors phi_m(k).

    phi_m(k) = z^(k*m) on the lower Doppler half and z^(-(N-k)*m) on the
    upper half, i.e. the folded (signed) Doppler index times m.
    """
    k = np.arange(cfg.N)
    signed_k = np.where(k < cfg.N // 2, k, k - cfg.N)
    m = np.arange(cfg.M)
    expo = 2j * np.pi / (cfg.M * cfg.N)
    return np.exp(expo * np.outer(m, signed_k))


@dataclass
class DopplerSpreadTable:
    """Per-(row m, delay l) Doppler spread vectors and their spectra.

    ``nu_ml[m, i]`` is the first column of the banded circulant acting on
    transmit row m - delays[i]; ``lam[m, i]`` is its N-point DFT.  Rows
    with m < l are identically zero.
    """

    cfg: FrameConfig
    delays: tuple[int, ...]
    nu_l: np.ndarray        # (L, N) per-delay spread, no phase correction
    nu_ml: np.ndarray       # (M, L, N) time domain
    lam: np.ndarray         # (M, L, N) Fourier domain
    model: ChannelModel = field(repr=False, default=None)

    @property
    def L(self) -> int:
        return len(self.delays)


def build_doppler_spread_table(model: ChannelModel, cfg: FrameConfig) -> DopplerSpreadTable:
    """Build the compressed circulant family for a channel realization."""
    if model.l_max > cfg.l_max:
        raise ValueError("channel delay spread exceeds frame l_max")
    for p in model.paths:
        if p.l > cfg.l_max:
            raise ValueError(f"path delay {p.l} exceeds l_max {cfg.l_max}")
    delays = model.delay_set
    L = len(delays)
    nu_l = np.zeros((L, cfg.N), dtype=complex)
    for i, l in enumerate(delays):
        for p in model.paths:
            if p.l == l:
                nu_l[i, p.k % cfg.N] += p.h
    phi = phase_table(cfg)
    nu_ml = np.zeros((cfg.M, L, cfg.N), dtype=complex)
    for i, l in enumerate(delays):
        m = np.arange(l, cfg.M)
        nu_ml[m, i, :] = nu_l[i][None, :] * phi[m - l]
    lam = np.fft.fft(nu_ml, axis=-1)
    return DopplerSpreadTable(cfg=cfg, delays=delays, nu_l=nu_l, nu_ml=nu_ml, lam=lam, model=model)


def apply_channel(
    X: DelayDopplerGrid,
    table: DopplerSpreadTable,
    sigma_w: float,
    rng: int | np.random.Generator | None = None,
) -> DelayDopplerGrid:
    """Pass a transmit grid through the channel and add AWGN.

    Row m of the output is the sum over rake branches of the circulant
    at (m, l) applied to transmit row m-l, evaluated with N-point FFTs.
    Noise is iid complex Gaussian with total variance sigma_w^2 per entry.
    """
    cfg = table.cfg
    if X.entries.shape != (cfg.M, cfg.N):
        raise ValueError("grid dimensions do not match the frame config")
    if not X.check_null_rows(cfg):
        raise ValueError("transmit grid violates the null-row condition")
    x_spec = np.fft.fft(X.entries, axis=-1)
    y_spec = np.zeros_like(x_spec)
    for i, l in enumerate(table.delays):
        m = np.arange(l, cfg.M)
        y_spec[m] += table.lam[m, i, :] * x_spec[m - l]
    Y = np.fft.ifft(y_spec, axis=-1)
    if sigma_w > 0:
        if rng is None or isinstance(rng, (int, np.integer)):
            rng = philox(0 if rng is None else int(rng))
        noise = (rng.standard_normal(Y.shape) + 1j * rng.standard_normal(Y.shape))
        Y = Y + noise * (sigma_w / np.sqrt(2.0))
    return DelayDopplerGrid(Y, role="receive")


def apply_channel_time(x: np.ndarray, model: ChannelModel, cfg: FrameConfig) -> np.ndarray:
    """Time-domain channel for the OFDM baseline.

    y(q) = sum_i h_i x(q - l_i) exp(j 2 pi k_i q / (M N)), with x taken
    as zero before the start of the burst (linear convolution).
    """
    x = np.asarray(x, dtype=complex).ravel()
    q = np.arange(x.size)
    y = np.zeros_like(x)
    for p in model.paths:
        delayed = np.zeros_like(x)
        if p.l == 0:
            delayed[:] = x
        else:
            delayed[p.l:] = x[: x.size - p.l]
        y += p.h * delayed * np.exp(2j * np.pi * p.k * q / (cfg.M * cfg.N))
    return y
