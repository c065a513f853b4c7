"""Time-frequency single-tap MMSE estimation and the CP-OFDM baseline.

The initializer deliberately models the channel as ideal-pulse (element
wise in time-frequency), which is only approximate for the rectangular
pulse chain; it exists to give the rake detector a cheap starting point.
"""

from __future__ import annotations

import numpy as np

from .channel import ChannelModel, apply_channel_time
from .frame import (
    DelayDopplerGrid,
    FrameConfig,
    QamAlphabet,
    qam_demodulate_hard,
    qam_modulate,
)


def isfft(A: np.ndarray) -> np.ndarray:
    """Delay-Doppler -> time-frequency, unitary (energy preserving)."""
    A = np.asarray(A, dtype=complex)
    M, N = A.shape
    out = np.fft.fft(A, axis=0) / np.sqrt(M)
    return np.fft.ifft(out, axis=1) * np.sqrt(N)


def sfft(B: np.ndarray) -> np.ndarray:
    """Time-frequency -> delay-Doppler, inverse of isfft."""
    B = np.asarray(B, dtype=complex)
    M, N = B.shape
    out = np.fft.ifft(B, axis=0) * np.sqrt(M)
    return np.fft.fft(out, axis=1) / np.sqrt(N)


def build_h_dd(model: ChannelModel, cfg: FrameConfig) -> np.ndarray:
    """Ideal-pulse delay-Doppler channel response: gains at (l, k mod N)."""
    H = np.zeros((cfg.M, cfg.N), dtype=complex)
    for p in model.paths:
        H[p.l, p.k % cfg.N] += p.h
    return H


def tf_channel_response(h_dd: np.ndarray) -> np.ndarray:
    """Time-frequency response H_tf such that Y_tf = H_tf o X_tf.

    Scaled so that 2-D circular convolution in delay-Doppler maps to an
    element-wise product against unitary-transformed grids: plain DFT
    along delay, N times the plain IDFT along Doppler.
    """
    M, N = h_dd.shape
    return np.fft.ifft(np.fft.fft(h_dd, axis=0), axis=1) * N


def mmse_tf_estimate(
    Y: DelayDopplerGrid,
    h_dd: np.ndarray,
    sigma_w: float,
    cfg: FrameConfig,
) -> np.ndarray:
    """Single-tap MMSE estimate of the transmit grid, null rows zeroed.

    Returns the full M x N estimate; rows >= M' are forced to zero so it
    can seed the rake detector directly.
    """
    H_tf = tf_channel_response(h_dd)
    Y_tf = isfft(Y.entries)
    denom = np.abs(H_tf) ** 2 + sigma_w**2
    if sigma_w == 0.0:
        safe = denom > 0
        X_tf = np.zeros_like(Y_tf)
        X_tf[safe] = np.conj(H_tf[safe]) * Y_tf[safe] / denom[safe]
    else:
        X_tf = np.conj(H_tf) * Y_tf / denom
    X_hat = sfft(X_tf)
    X_hat[cfg.M_prime:] = 0.0
    return X_hat


def ofdm_mmse_baseline(
    bits: np.ndarray,
    model: ChannelModel,
    cfg: FrameConfig,
    alphabet: QamAlphabet,
    sigma_w: float,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """CP-OFDM link with a per-subcarrier MMSE equalizer, hard demap.

    N OFDM symbols of M subcarriers with a cyclic prefix of l_max
    samples.  The equalizer uses the exact path gains rotated to each
    symbol's mid-point sample, so inter-carrier interference from the
    Doppler spread is left unequalized by design.
    """
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    need = cfg.M * cfg.N * alphabet.bits_per_symbol
    if bits.size != need:
        raise ValueError(f"expected {need} bits, got {bits.size}")
    cp = cfg.l_max
    Xf = qam_modulate(bits, alphabet).reshape(cfg.N, cfg.M)  # symbol-major
    tx = np.empty((cfg.N, cfg.M + cp), dtype=complex)
    for t in range(cfg.N):
        s = np.fft.ifft(Xf[t]) * np.sqrt(cfg.M)
        tx[t, :cp] = s[-cp:]
        tx[t, cp:] = s
    serial = tx.ravel()
    rx = apply_channel_time(serial, model, cfg)
    if sigma_w > 0:
        if rng is None:
            rng = np.random.default_rng(0)
        rx = rx + (rng.standard_normal(rx.size) + 1j * rng.standard_normal(rx.size)) * (
            sigma_w / np.sqrt(2.0)
        )
    sym_len = cfg.M + cp
    f = np.arange(cfg.M)
    out_bits = np.empty_like(bits)
    bps = alphabet.bits_per_symbol
    for t in range(cfg.N):
        block = rx[t * sym_len + cp: (t + 1) * sym_len]
        Rf = np.fft.fft(block) / np.sqrt(cfg.M)
        q_mid = t * sym_len + cp + cfg.M / 2.0
        Hf = np.zeros(cfg.M, dtype=complex)
        for p in model.paths:
            Hf += (
                p.h
                * np.exp(-2j * np.pi * f * p.l / cfg.M)
                * np.exp(2j * np.pi * p.k * q_mid / (cfg.M * cfg.N))
            )
        est = np.conj(Hf) * Rf / (np.abs(Hf) ** 2 + sigma_w**2 + 1e-300)
        out_bits[t * cfg.M * bps: (t + 1) * cfg.M * bps] = qam_demodulate_hard(est, alphabet)
    return out_bits
