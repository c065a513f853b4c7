"""Slow, literal reference implementations backing the test suite.

Everything here is deliberately dense and loop-heavy: the full NM x NM
channel matrix, the unrestricted two-branch phase evaluation of the
rectangular-pulse input-output relation, and a rake detector that
recomputes every branch from scratch with dense circulants.  Size caps
keep the quadratic blowups inside test scale; none of this is reachable
from the CLI or service.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import circulant

from .channel import ChannelModel, DopplerSpreadTable
from .frame import DelayDopplerGrid, FrameConfig, QamAlphabet, ml_slice

SIZE_CAP = 4096  # max NM for dense constructions


def build_full_H(table: DopplerSpreadTable) -> np.ndarray:
    """Full NM x NM block matrix: circulant block at (row m, col m-l)."""
    cfg = table.cfg
    NM = cfg.M * cfg.N
    if NM > SIZE_CAP:
        raise ValueError(f"NM={NM} exceeds dense size cap {SIZE_CAP}")
    H = np.zeros((NM, NM), dtype=complex)
    for i, l in enumerate(table.delays):
        for m in range(l, cfg.M):
            block = circulant(table.nu_ml[m, i])
            r, c = m * cfg.N, (m - l) * cfg.N
            H[r: r + cfg.N, c: c + cfg.N] += block
    return H


def apply_full_H(H: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Multiply the stacked row vectors of X by the full channel matrix."""
    M, N = X.shape
    return (H @ X.reshape(M * N)).reshape(M, N)


def apply_exact_io(X: DelayDopplerGrid, model: ChannelModel, cfg: FrameConfig) -> DelayDopplerGrid:
    """Literal rectangular-pulse input-output relation, both phase branches.

    No null-row assumption: the Doppler-dependent phase branch for rows
    m < l_i is evaluated as written.
    """
    Xe = X.entries
    Y = np.zeros((cfg.M, cfg.N), dtype=complex)
    z = cfg.z
    for p in model.paths:
        for m in range(cfg.M):
            src_m = (m - p.l) % cfg.M
            for n in range(cfg.N):
                src_n = (n - p.k) % cfg.N
                if m >= p.l:
                    alpha = z ** (p.k * (m - p.l))
                else:
                    alpha = np.exp(-2j * np.pi * n / cfg.N) * z ** (p.k * src_m)
                Y[m, n] += p.h * alpha * Xe[src_m, src_n]
    return DelayDopplerGrid(Y, role="receive")


def dense_mrc_reference(
    Y: DelayDopplerGrid,
    table: DopplerSpreadTable,
    alphabet: QamAlphabet,
    S: int,
    epsilon: float = 1e-12,
    x0: np.ndarray | None = None,
) -> np.ndarray:
    """Rake detection with branch interference recomputed from scratch.

    Every branch estimate is rebuilt each time from the full exclusion
    sum (no incremental cache); combining solves the dense circulant
    normal equations.  Slicing and the DFE sweep order match the fast
    detector, so sliced outputs must agree exactly.
    """
    cfg = table.cfg
    if cfg.N > 16 or cfg.M > 16:
        raise ValueError("dense reference capped at N, M <= 16")
    Mp = cfg.M_prime
    delays = table.delays
    K = {}
    for i, l in enumerate(delays):
        for m in range(l, cfg.M):
            K[(m, l)] = circulant(table.nu_ml[m, i])
    R = []
    for m in range(Mp):
        Rm = np.zeros((cfg.N, cfg.N), dtype=complex)
        for l in delays:
            Km = K[(m + l, l)]
            Rm += Km.conj().T @ Km
        R.append(Rm + epsilon * np.eye(cfg.N))
    x = np.zeros((Mp, cfg.N), dtype=complex) if x0 is None else np.array(x0, dtype=complex)
    y = Y.entries
    for _ in range(S):
        for m in range(Mp):
            g = np.zeros(cfg.N, dtype=complex)
            for l in delays:
                b = y[m + l].astype(complex).copy()
                for lp in delays:
                    if lp == l:
                        continue
                    src = m + l - lp
                    if 0 <= src < Mp:
                        b -= K[(m + l, lp)] @ x[src]
                g += K[(m + l, l)].conj().T @ b
            c = np.linalg.solve(R[m], g)
            x[m] = ml_slice(c, alphabet)
    return x
