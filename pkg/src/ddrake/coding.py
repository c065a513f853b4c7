"""Rate-1/2 LDPC coding, frame interleaving and turbo-MRC detection.

Parity-check matrices are loaded from alist files; the shipped codes are
built by progressive edge growth with column weight 3.  Decoding is
normalized min-sum (factor 0.75) with early exit on a zero syndrome.
The turbo loop alternates one rake-detector pass with one LDPC decode,
feeding hard decisions on the decoder output back as symbol estimates.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .channel import DopplerSpreadTable
from .detector import DetectorConfig, MrcDetector, soft_llrs
from .frame import DelayDopplerGrid, QamAlphabet, qam_modulate
from .rng import philox

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")
MINSUM_NORM = 0.75
DEFAULT_DECODER_ITERS = 50


# ---------------------------------------------------------------------------
# alist parity-check files
# ---------------------------------------------------------------------------

def parse_alist(path: str) -> np.ndarray:
    """Read an alist file into a dense binary parity-check matrix (m, n)."""
    with open(path) as f:
        tokens = f.read().split()
    it = iter(tokens)

    def nxt() -> int:
        return int(next(it))

    n, m = nxt(), nxt()
    dv_max, dc_max = nxt(), nxt()
    col_deg = [nxt() for _ in range(n)]
    row_deg = [nxt() for _ in range(m)]
    H = np.zeros((m, n), dtype=np.uint8)
    for j in range(n):
        for _ in range(dv_max):
            c = nxt()
            if c:
                H[c - 1, j] = 1
    for i in range(m):
        for _ in range(dc_max):
            next(it)  # redundant row lists; column lists already fixed H
    if [int(H[:, j].sum()) for j in range(n)] != col_deg:
        raise ValueError("alist column degrees inconsistent")
    if [int(H[i].sum()) for i in range(m)] != row_deg:
        raise ValueError("alist row degrees inconsistent")
    return H


def write_alist(H: np.ndarray, path: str) -> None:
    """Write a binary parity-check matrix in alist format."""
    H = np.asarray(H, dtype=np.uint8)
    m, n = H.shape
    col_lists = [list(np.nonzero(H[:, j])[0] + 1) for j in range(n)]
    row_lists = [list(np.nonzero(H[i])[0] + 1) for i in range(m)]
    dv = max(len(c) for c in col_lists)
    dc = max(len(r) for r in row_lists)
    lines = [f"{n} {m}", f"{dv} {dc}"]
    lines.append(" ".join(str(len(c)) for c in col_lists))
    lines.append(" ".join(str(len(r)) for r in row_lists))
    for lst in col_lists:
        lines.append(" ".join(str(v) for v in lst + [0] * (dv - len(lst))))
    for lst in row_lists:
        lines.append(" ".join(str(v) for v in lst + [0] * (dc - len(lst))))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def peg_construct(n: int, m: int, col_weight: int = 3, seed: int = 1) -> np.ndarray:
    """Progressive edge growth parity-check construction.

    For every new edge of a variable node, pick the check node farthest
    from it in the current bipartite graph (unreachable checks first),
    breaking ties by lowest check degree, so short cycles are avoided.
    """
    rng = philox(seed)
    var_checks: list[list[int]] = [[] for _ in range(n)]
    check_vars: list[list[int]] = [[] for _ in range(m)]
    check_deg = np.zeros(m, dtype=int)
    for v in rng.permutation(n):
        for _ in range(col_weight):
            reached = _bfs_checks(int(v), var_checks, check_vars, m)
            candidates = np.flatnonzero(~reached)
            if candidates.size == 0:
                # all checks reachable: take the deepest BFS tier instead
                candidates = _deepest_tier(int(v), var_checks, check_vars, m)
            deg = check_deg[candidates]
            best = candidates[deg == deg.min()]
            c = int(best[rng.integers(best.size)])
            var_checks[v].append(c)
            check_vars[c].append(int(v))
            check_deg[c] += 1
    H = np.zeros((m, n), dtype=np.uint8)
    for v, checks in enumerate(var_checks):
        H[checks, v] = 1
    return H


def _bfs_checks(v: int, var_checks, check_vars, m: int) -> np.ndarray:
    """Boolean mask of check nodes reachable from variable v."""
    reached = np.zeros(m, dtype=bool)
    seen_vars = {v}
    frontier = [v]
    while frontier:
        nxt = []
        for var in frontier:
            for c in var_checks[var]:
                if not reached[c]:
                    reached[c] = True
                    for v2 in check_vars[c]:
                        if v2 not in seen_vars:
                            seen_vars.add(v2)
                            nxt.append(v2)
        frontier = nxt
    return reached


def _deepest_tier(v: int, var_checks, check_vars, m: int) -> np.ndarray:
    """Check nodes at the maximum BFS depth from variable v."""
    depth = np.full(m, -1, dtype=int)
    seen_vars = {v}
    frontier = [v]
    d = 0
    while frontier:
        nxt = []
        for var in frontier:
            for c in var_checks[var]:
                if depth[c] < 0:
                    depth[c] = d
                    for v2 in check_vars[c]:
                        if v2 not in seen_vars:
                            seen_vars.add(v2)
                            nxt.append(v2)
        frontier = nxt
        d += 1
    return np.flatnonzero(depth == depth.max())


# ---------------------------------------------------------------------------
# Code object: encoder + normalized min-sum decoder
# ---------------------------------------------------------------------------

@dataclass
class LdpcCode:
    """A binary LDPC code with a systematic encoder derived at load."""

    H: np.ndarray = field(repr=False)
    info_positions: np.ndarray = field(repr=False)
    parity_positions: np.ndarray = field(repr=False)
    parity_map: np.ndarray = field(repr=False)  # parity = parity_map @ info mod 2

    @property
    def n(self) -> int:
        return self.H.shape[1]

    @property
    def k(self) -> int:
        return self.n - self.H.shape[0]

    @property
    def rate(self) -> float:
        return self.k / self.n

    @classmethod
    def from_parity_check(cls, H: np.ndarray) -> "LdpcCode":
        H = np.asarray(H, dtype=np.uint8)
        m, n = H.shape
        W = H.copy()
        pivot_cols = []
        r = 0
        for c in range(n):
            rows = np.flatnonzero(W[r:, c])
            if rows.size == 0:
                continue
            pr = r + rows[0]
            if pr != r:
                W[[r, pr]] = W[[pr, r]]
            others = np.flatnonzero(W[:, c])
            others = others[others != r]
            W[others] ^= W[r]
            pivot_cols.append(c)
            r += 1
            if r == m:
                break
        if r < m:
            raise ValueError(f"parity-check matrix is rank deficient ({r} < {m})")
        parity_positions = np.array(pivot_cols, dtype=int)
        info_positions = np.setdiff1d(np.arange(n), parity_positions)
        parity_map = W[:, info_positions].copy()
        code = cls(
            H=H,
            info_positions=info_positions,
            parity_positions=parity_positions,
            parity_map=parity_map,
        )
        code._build_decoder_tables()
        return code

    @classmethod
    def from_alist(cls, path: str) -> "LdpcCode":
        return cls.from_parity_check(parse_alist(path))

    def _build_decoder_tables(self) -> None:
        m, n = self.H.shape
        row_lists = [np.flatnonzero(self.H[i]) for i in range(m)]
        dc = max(len(r) for r in row_lists)
        cv = np.zeros((m, dc), dtype=np.int64)
        mask = np.zeros((m, dc), dtype=bool)
        for i, r in enumerate(row_lists):
            cv[i, : len(r)] = r
            mask[i, : len(r)] = True
        self._cv = cv
        self._mask = mask

    # -- encode ------------------------------------------------------------

    def encode(self, info_bits: np.ndarray) -> np.ndarray:
        """Systematic encoding; info bits land on ``info_positions``."""
        info_bits = np.asarray(info_bits, dtype=np.uint8)
        if info_bits.shape[-1] != self.k:
            raise ValueError(f"expected {self.k} info bits, got {info_bits.shape[-1]}")
        single = info_bits.ndim == 1
        info = np.atleast_2d(info_bits)
        parity = (info @ self.parity_map.T) % 2
        cw = np.zeros((info.shape[0], self.n), dtype=np.uint8)
        cw[:, self.info_positions] = info
        cw[:, self.parity_positions] = parity
        return cw[0] if single else cw

    def syndrome(self, bits: np.ndarray) -> np.ndarray:
        bits = np.atleast_2d(np.asarray(bits, dtype=np.uint8))
        return (bits @ self.H.T) % 2

    def extract_info(self, codeword_bits: np.ndarray) -> np.ndarray:
        return np.asarray(codeword_bits)[..., self.info_positions]

    # -- decode ------------------------------------------------------------

    def decode(
        self,
        llrs: np.ndarray,
        max_iters: int = DEFAULT_DECODER_ITERS,
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Normalized min-sum decoding of one or a batch of codewords.

        ``llrs`` has positive sign for bit 0.  Returns (posterior llrs,
        hard bits, converged flags); non-convergence is reported via the
        flag, never raised.
        """
        llrs = np.asarray(llrs, dtype=float)
        single = llrs.ndim == 1
        lam = np.atleast_2d(llrs).copy()
        B = lam.shape[0]
        if lam.shape[1] != self.n:
            raise ValueError(f"expected {self.n} llrs per codeword")
        cv, mask = self._cv, self._mask
        m, dc = cv.shape
        c2v = np.zeros((B, m, dc))
        converged = np.zeros(B, dtype=bool)
        total = lam.copy()
        for _ in range(max_iters):
            hard = (total < 0).astype(np.uint8)
            syn = self.syndrome(hard)
            converged = ~syn.any(axis=1)
            if converged.all():
                break
            v2c = total[:, cv] - c2v
            sgn = np.where(v2c < 0, -1.0, 1.0)
            sgn = np.where(mask, sgn, 1.0)
            mag = np.where(mask, np.abs(v2c), np.inf)
            idx = np.argmin(mag, axis=-1)
            min1 = np.take_along_axis(mag, idx[..., None], axis=-1)[..., 0]
            mag2 = mag.copy()
            np.put_along_axis(mag2, idx[..., None], np.inf, axis=-1)
            min2 = mag2.min(axis=-1)
            row_sign = sgn.prod(axis=-1)
            ext_sign = row_sign[..., None] * sgn
            ext_mag = np.where(
                np.arange(dc)[None, None, :] == idx[..., None],
                min2[..., None],
                min1[..., None],
            )
            c2v = MINSUM_NORM * ext_sign * ext_mag
            c2v = np.where(mask, c2v, 0.0)
            total = lam.copy()
            np.add.at(
                total,
                (np.repeat(np.arange(B), m * dc), np.tile(cv.ravel(), B)),
                (c2v * mask).reshape(B, -1).ravel(),
            )
        hard = (total < 0).astype(np.uint8)
        syn = self.syndrome(hard)
        converged = ~syn.any(axis=1)
        if single:
            return total[0], hard[0], converged[0]
        return total, hard, converged


@lru_cache(maxsize=8)
def load_code(path: str) -> LdpcCode:
    """Load (and cache) a code from an alist file."""
    return LdpcCode.from_alist(path)


def shipped_code_path(n: int) -> str:
    """Path of a bundled rate-1/2 code of the given length."""
    path = os.path.join(DATA_DIR, f"ldpc_n{n}_r12.alist")
    if not os.path.exists(path):
        raise FileNotFoundError(f"no bundled code of length {n} at {path}")
    return path


# ---------------------------------------------------------------------------
# Interleaving and the turbo loop
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Interleaver:
    """Seeded random permutation over a frame's coded-bit positions."""

    perm: np.ndarray

    @classmethod
    def random(cls, length: int, seed: int) -> "Interleaver":
        return cls(perm=philox(seed).permutation(length))

    def interleave(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x)[self.perm]

    def deinterleave(self, x: np.ndarray) -> np.ndarray:
        out = np.empty_like(np.asarray(x))
        out[self.perm] = x
        return out


@dataclass
class TurboResult:
    info_bits: np.ndarray           # (n_codewords, k)
    codeword_bits: np.ndarray       # (n_codewords, n)
    converged: np.ndarray           # (n_codewords,) bool, from the last decode
    iter_multiplies: int


def encode_frame_bits(
    info_bits: np.ndarray,
    code: LdpcCode,
    interleaver: Interleaver,
) -> np.ndarray:
    """Encode per-codeword, lay out sequentially, interleave frame-wide."""
    cw = code.encode(np.atleast_2d(info_bits))
    return interleaver.interleave(cw.ravel())


def turbo_detect(
    Y: DelayDopplerGrid,
    table: DopplerSpreadTable,
    alphabet: QamAlphabet,
    code: LdpcCode,
    interleaver: Interleaver,
    det_cfg: DetectorConfig,
    n_turbo: int,
    sigma_w: float,
    x0: np.ndarray | None = None,
    passes_per_iter: int = 1,
    decoder_iters: int = DEFAULT_DECODER_ITERS,
    rebuild_cache: bool = False,
) -> TurboResult:
    """Turbo loop: rake pass -> LLRs -> deinterleave -> decode -> feedback.

    With ``n_turbo`` = 1 this degenerates to plain coded detection (no
    feedback ever happens).  ``passes_per_iter`` > 1 runs that many rake
    passes before each decode, which with ``n_turbo`` = 1 gives the
    coded no-feedback variant at any detector depth.
    """
    fc = table.cfg
    bps = alphabet.bits_per_symbol
    capacity = fc.M_prime * fc.N * bps
    if capacity % code.n != 0:
        raise ValueError(f"frame capacity {capacity} not a multiple of codeword length {code.n}")
    if interleaver.perm.size != capacity:
        raise ValueError("interleaver length does not match frame capacity")
    if n_turbo < 1:
        raise ValueError("n_turbo must be >= 1")
    n_cw = capacity // code.n
    det = MrcDetector(Y, table, alphabet, det_cfg, x0=x0)
    post = hard = conv = None
    for it in range(n_turbo):
        for _ in range(passes_per_iter):
            det.run_pass()
        llr = soft_llrs(det.c_soft, det.R_spec, sigma_w, alphabet).ravel()
        coded_llr = interleaver.deinterleave(llr).reshape(n_cw, code.n)
        post, hard, conv = code.decode(coded_llr, max_iters=decoder_iters)
        if it < n_turbo - 1:
            fed = interleaver.interleave(np.where(post.ravel() < 0, 1, 0).astype(np.uint8))
            symbols = qam_modulate(fed, alphabet).reshape(fc.M_prime, fc.N)
            det.install_estimates(symbols, rebuild_cache=rebuild_cache)
    return TurboResult(
        info_bits=code.extract_info(hard),
        codeword_bits=hard,
        converged=conv,
        iter_multiplies=det.counter.iter_mults,
    )
