"""Monte-Carlo BER/FER campaigns over SNR for every detector variant.

A campaign point is (SNR, detector).  Frames are seeded by a 64-bit mix
of (master seed, SNR index, frame index), so all detectors at a point
see the same channel/noise realizations and results are byte-identical
for any worker count.  Frames run in fixed-size batches; the stop rule
is evaluated only at batch boundaries to keep the frame count itself
deterministic.
"""

from __future__ import annotations

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict
from functools import lru_cache

import numpy as np

from .channel import (
    ChannelModel,
    apply_channel,
    build_doppler_spread_table,
    generate_eva,
    load_channel_json,
)
from .coding import (
    Interleaver,
    encode_frame_bits,
    load_code,
    shipped_code_path,
    turbo_detect,
)
from .detector import DetectorConfig, detect
from .frame import (
    FrameConfig,
    extract_payload,
    make_alphabet,
    map_to_grid,
    qam_demodulate_hard,
    qam_modulate,
)
from .rng import mix_seed, philox
from .tfeq import build_h_dd, mmse_tf_estimate, ofdm_mmse_baseline

UNCODED_DETECTORS = ("mrc", "mrc_init", "mmse_tf_only", "ofdm_mmse")
CODED_DETECTORS = ("coded_mrc", "turbo_mrc")
KNOWN_DETECTORS = UNCODED_DETECTORS + CODED_DETECTORS

BATCH_FRAMES = 32

# purpose tags for per-frame sub-streams
_TAG_CHANNEL = 101
_TAG_BITS = 102
_TAG_NOISE = 103
_TAG_CODED_BITS = 104
_TAG_CODED_NOISE = 105
_TAG_OFDM_BITS = 106
_TAG_OFDM_NOISE = 107
_TAG_INTERLEAVER = 7901


@dataclass(frozen=True)
class SimSpec:
    """Full description of a simulation campaign."""

    M: int = 64
    N: int = 32
    delta_f: float = 15e3
    l_max: int = 8
    qam_order: int = 4
    channel: str = "eva"            # "eva" or a JSON channel file path
    speed_kmh: float = 120.0
    doppler_cap: int = 4
    snr_db: tuple[float, ...] = (15.0,)
    detectors: tuple[str, ...] = ("mrc",)
    S: int = 10
    n_turbo: int = 2
    epsilon: float = 1e-12
    code_length: int = 1024
    code_file: str = ""             # empty -> bundled code of code_length
    max_frames: int = 200
    target_frame_errors: int = 200
    max_bits: int = 10_000_000
    master_seed: int = 0

    def __post_init__(self):
        if not self.snr_db:
            raise ValueError("SNR list must be non-empty")
        if self.max_frames < 1 or self.target_frame_errors < 1 or self.max_bits < 1:
            raise ValueError("stop rule bounds must be positive")
        for d in self.detectors:
            if d not in KNOWN_DETECTORS:
                raise ValueError(f"unknown detector {d!r}")

    def frame_config(self) -> FrameConfig:
        return FrameConfig(M=self.M, N=self.N, delta_f=self.delta_f, l_max=self.l_max)


@dataclass
class MetricRecord:
    """Aggregated counts for one (SNR, detector) point."""

    snr_db: float
    detector: str
    bits: int = 0
    bit_errors: int = 0
    frames: int = 0
    frame_errors: int = 0
    iter_multiplies_per_frame: int = 0
    wall_time_s: float = 0.0

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else 0.0

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else 0.0


CSV_COLUMNS = (
    "snr_db",
    "detector",
    "bits",
    "bit_errors",
    "frames",
    "frame_errors",
    "ber",
    "fer",
    "iter_multiplies_per_frame",
)


def emit_csv(records: list[MetricRecord], path: str) -> None:
    """Write records as CSV with a fixed column order, full precision.

    Wall time is deliberately not a column: the file must be
    byte-identical across re-runs of the same seeded campaign.
    """
    if not records:
        raise ValueError("no records to emit")
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow(
                [
                    repr(float(r.snr_db)),
                    r.detector,
                    r.bits,
                    r.bit_errors,
                    r.frames,
                    r.frame_errors,
                    repr(r.ber),
                    repr(r.fer),
                    r.iter_multiplies_per_frame,
                ]
            )


def parse_csv(path: str) -> list[MetricRecord]:
    """Read back a CSV produced by emit_csv."""
    out = []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            out.append(
                MetricRecord(
                    snr_db=float(row["snr_db"]),
                    detector=row["detector"],
                    bits=int(row["bits"]),
                    bit_errors=int(row["bit_errors"]),
                    frames=int(row["frames"]),
                    frame_errors=int(row["frame_errors"]),
                    iter_multiplies_per_frame=int(row["iter_multiplies_per_frame"]),
                )
            )
    return out


@lru_cache(maxsize=8)
def _cached_channel_file(path: str, l_max: int) -> ChannelModel:
    return load_channel_json(path, l_max)


def _frame_channel(spec: SimSpec, cfg: FrameConfig, snr_index: int, frame_index: int) -> ChannelModel:
    if spec.channel == "eva":
        seed = mix_seed(spec.master_seed, snr_index, frame_index, _TAG_CHANNEL)
        return generate_eva(cfg, spec.speed_kmh, spec.doppler_cap, seed)
    return _cached_channel_file(spec.channel, cfg.l_max)


def _code_path(spec: SimSpec) -> str:
    return spec.code_file or shipped_code_path(spec.code_length)


def simulate_frame(spec: SimSpec, snr_index: int, frame_index: int) -> dict[str, tuple]:
    """Run every requested detector on one seeded frame realization.

    Returns per-detector tuples (bits, bit_errors, frame_error,
    iter_multiplies).
    """
    cfg = spec.frame_config()
    alphabet = make_alphabet(spec.qam_order)
    bps = alphabet.bits_per_symbol
    snr = spec.snr_db[snr_index]
    sigma_w = 10.0 ** (-snr / 20.0)
    model = _frame_channel(spec, cfg, snr_index, frame_index)
    table = build_doppler_spread_table(model, cfg)
    h_dd = build_h_dd(model, cfg)

    def sub_rng(tag: int) -> np.random.Generator:
        return philox(mix_seed(spec.master_seed, snr_index, frame_index, tag))

    out: dict[str, tuple] = {}
    uncoded = [d for d in spec.detectors if d in UNCODED_DETECTORS]
    coded = [d for d in spec.detectors if d in CODED_DETECTORS]

    if any(d != "ofdm_mmse" for d in uncoded):
        n_bits = cfg.M_prime * cfg.N * bps
        bits = sub_rng(_TAG_BITS).integers(0, 2, size=n_bits).astype(np.uint8)
        X = map_to_grid(qam_modulate(bits, alphabet), cfg)
        Y = apply_channel(X, table, sigma_w, sub_rng(_TAG_NOISE))
        x_tf = None
        for name in uncoded:
            if name == "ofdm_mmse":
                continue
            if name in ("mrc_init", "mmse_tf_only") and x_tf is None:
                x_tf = mmse_tf_estimate(Y, h_dd, sigma_w, cfg)[: cfg.M_prime]
            if name == "mrc":
                dcfg = DetectorConfig(S=spec.S, init_mode="zero", epsilon=spec.epsilon)
                res = detect(Y, table, alphabet, dcfg)
            elif name == "mrc_init":
                dcfg = DetectorConfig(S=spec.S, init_mode="external", epsilon=spec.epsilon)
                res = detect(Y, table, alphabet, dcfg, x0=x_tf)
            else:  # mmse_tf_only
                dcfg = DetectorConfig(S=0, init_mode="external", epsilon=spec.epsilon)
                res = detect(Y, table, alphabet, dcfg, x0=x_tf)
            rx_bits = qam_demodulate_hard(res.x_hat.ravel(), alphabet)
            errs = int(np.count_nonzero(rx_bits != bits))
            out[name] = (n_bits, errs, int(errs > 0), res.counter.iter_mults)

    if "ofdm_mmse" in uncoded:
        n_bits = cfg.M * cfg.N * bps
        bits = sub_rng(_TAG_OFDM_BITS).integers(0, 2, size=n_bits).astype(np.uint8)
        rx = ofdm_mmse_baseline(bits, model, cfg, alphabet, sigma_w, sub_rng(_TAG_OFDM_NOISE))
        errs = int(np.count_nonzero(rx != bits))
        out["ofdm_mmse"] = (n_bits, errs, int(errs > 0), 0)

    if coded:
        code = load_code(_code_path(spec))
        capacity = cfg.M_prime * cfg.N * bps
        if capacity % code.n != 0:
            raise ValueError(
                f"frame capacity {capacity} is not a multiple of codeword length {code.n}"
            )
        n_cw = capacity // code.n
        interleaver = Interleaver.random(capacity, mix_seed(spec.master_seed, _TAG_INTERLEAVER))
        info = (
            sub_rng(_TAG_CODED_BITS)
            .integers(0, 2, size=(n_cw, code.k))
            .astype(np.uint8)
        )
        coded_bits = encode_frame_bits(info, code, interleaver)
        X = map_to_grid(qam_modulate(coded_bits, alphabet), cfg)
        Y = apply_channel(X, table, sigma_w, sub_rng(_TAG_CODED_NOISE))
        x_tf = mmse_tf_estimate(Y, h_dd, sigma_w, cfg)[: cfg.M_prime]
        for name in coded:
            dcfg = DetectorConfig(S=1, init_mode="external", epsilon=spec.epsilon)
            if name == "coded_mrc":
                res = turbo_detect(
                    Y, table, alphabet, code, interleaver, dcfg,
                    n_turbo=1, sigma_w=sigma_w, x0=x_tf, passes_per_iter=spec.S,
                )
            else:  # turbo_mrc
                res = turbo_detect(
                    Y, table, alphabet, code, interleaver, dcfg,
                    n_turbo=spec.n_turbo, sigma_w=sigma_w, x0=x_tf,
                )
            errs = int(np.count_nonzero(res.info_bits != info))
            out[name] = (info.size, errs, int(errs > 0), res.iter_multiplies)

    return out


def _batch_worker(args: tuple) -> dict[str, tuple]:
    spec, snr_index, frame_indices = args
    agg: dict[str, list[int]] = {}
    for fi in frame_indices:
        res = simulate_frame(spec, snr_index, fi)
        for name, (bits, berrs, ferr, mults) in res.items():
            a = agg.setdefault(name, [0, 0, 0, 0, 0])
            a[0] += bits
            a[1] += berrs
            a[2] += 1
            a[3] += ferr
            a[4] = mults
    return {k: tuple(v) for k, v in agg.items()}


def run_campaign(spec: SimSpec, workers: int = 1) -> list[MetricRecord]:
    """Run the whole campaign; deterministic for a fixed master seed."""
    records: list[MetricRecord] = []
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for snr_index, snr in enumerate(spec.snr_db):
            point = {d: MetricRecord(snr_db=snr, detector=d) for d in spec.detectors}
            t0 = time.perf_counter()
            next_frame = 0
            while next_frame < spec.max_frames and not _point_done(spec, point):
                n = min(BATCH_FRAMES, spec.max_frames - next_frame)
                frames = list(range(next_frame, next_frame + n))
                next_frame += n
                if pool is not None and n > 1:
                    chunks = [
                        (spec, snr_index, frames[i::workers])
                        for i in range(workers)
                        if frames[i::workers]
                    ]
                    results = list(pool.map(_batch_worker, chunks))
                else:
                    results = [_batch_worker((spec, snr_index, frames))]
                for res in results:
                    for name, (bits, berrs, nfr, ferrs, mults) in res.items():
                        r = point[name]
                        r.bits += bits
                        r.bit_errors += berrs
                        r.frames += nfr
                        r.frame_errors += ferrs
                        r.iter_multiplies_per_frame = mults
            dt = time.perf_counter() - t0
            for d in spec.detectors:
                point[d].wall_time_s = dt
                records.append(point[d])
    finally:
        if pool is not None:
            pool.shutdown()
    return records


def _point_done(spec: SimSpec, point: dict[str, MetricRecord]) -> bool:
    return all(
        r.frame_errors >= spec.target_frame_errors or r.bits >= spec.max_bits
        for r in point.values()
        if r.frames > 0
    ) and all(r.frames > 0 for r in point.values())


def spec_from_dict(d: dict) -> SimSpec:
    """Build a SimSpec from a plain dict (JSON config or API payload)."""
    d = dict(d)
    for key in ("snr_db", "detectors"):
        if key in d and isinstance(d[key], list):
            d[key] = tuple(d[key])
    return SimSpec(**d)


def spec_to_dict(spec: SimSpec) -> dict:
    d = asdict(spec)
    d["snr_db"] = list(d["snr_db"])
    d["detectors"] = list(d["detectors"])
    return d
