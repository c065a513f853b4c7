"""Rake detector behaviour, op counting and soft outputs."""

import numpy as np
import pytest

from conftest import random_channel, random_frame
from ddrake.channel import apply_channel, build_doppler_spread_table
from ddrake.detector import (
    DetectorConfig,
    MrcDetector,
    SingularCombinerError,
    complexity_terms,
    detect,
    soft_llrs,
)
from ddrake.frame import DelayDopplerGrid, FrameConfig, extract_payload, make_alphabet
from ddrake.oracle import dense_mrc_reference
from ddrake.rng import philox


def _noisy_instance(cfg, seed, order=4, sigma_w=0.05, n_paths=4):
    model = random_channel(cfg, n_paths=n_paths, seed=seed)
    table = build_doppler_spread_table(model, cfg)
    bits, X = random_frame(cfg, order, seed=seed + 5000)
    Y = apply_channel(X, table, sigma_w, philox(seed + 9000))
    return table, bits, X, Y


def test_detector_config_validation():
    with pytest.raises(ValueError):
        DetectorConfig(S=-1)
    with pytest.raises(ValueError):
        DetectorConfig(init_mode="magic")
    with pytest.raises(ValueError):
        DetectorConfig(epsilon=-1e-3)


def test_detect_recovers_clean_frame(small_cfg):
    alphabet = make_alphabet(4)
    table, _, X, Y = _noisy_instance(small_cfg, seed=21, sigma_w=0.01)
    res = detect(Y, table, alphabet, DetectorConfig(S=5))
    assert np.array_equal(res.x_hat, X.entries[: small_cfg.M_prime])


def test_detector_matches_dense_reference(small_cfg):
    alphabet = make_alphabet(4)
    for inst in range(12):
        S = 1 + inst % 3
        table, _, _, Y = _noisy_instance(small_cfg, seed=400 + inst, sigma_w=0.2)
        res = detect(Y, table, alphabet, DetectorConfig(S=S))
        ref = dense_mrc_reference(Y, table, alphabet, S=S)
        assert np.array_equal(res.x_hat, ref)


def test_external_init_matches_dense_reference(small_cfg):
    alphabet = make_alphabet(4)
    table, _, _, Y = _noisy_instance(small_cfg, seed=31, sigma_w=0.3)
    rng = philox(8)
    x0 = alphabet.points[rng.integers(0, 4, size=(small_cfg.M_prime, small_cfg.N))]
    res = detect(Y, table, alphabet, DetectorConfig(S=2, init_mode="external"), x0=x0)
    ref = dense_mrc_reference(Y, table, alphabet, S=2, x0=x0)
    assert np.array_equal(res.x_hat, ref)


def test_external_init_requires_x0(small_cfg):
    alphabet = make_alphabet(4)
    table, _, _, Y = _noisy_instance(small_cfg, seed=32)
    with pytest.raises(ValueError):
        detect(Y, table, alphabet, DetectorConfig(init_mode="external"))


def test_zero_pass_returns_sliced_init(small_cfg):
    alphabet = make_alphabet(4)
    table, _, _, Y = _noisy_instance(small_cfg, seed=33)
    rng = philox(12)
    raw = 0.1 * (rng.standard_normal((small_cfg.M_prime, small_cfg.N)) + 1j)
    x0 = alphabet.points[rng.integers(0, 4, size=raw.shape)] + raw
    res = detect(Y, table, alphabet, DetectorConfig(S=0, init_mode="external"), x0=x0)
    from ddrake.frame import ml_slice

    assert np.array_equal(res.x_hat, ml_slice(x0, alphabet))


def test_truth_is_fixed_point(small_cfg):
    alphabet = make_alphabet(4)
    table, _, X, Y = _noisy_instance(small_cfg, seed=50, sigma_w=0.0)
    truth = X.entries[: small_cfg.M_prime].copy()
    det = MrcDetector(Y, table, alphabet, DetectorConfig(S=1), x0=truth)
    det.run_pass()
    assert np.array_equal(det.x_time, truth)


def test_install_estimates_delta_matches_rebuild(small_cfg):
    alphabet = make_alphabet(4)
    table, _, _, Y = _noisy_instance(small_cfg, seed=60, sigma_w=0.2)
    rng = philox(61)
    x_new = alphabet.points[rng.integers(0, 4, size=(small_cfg.M_prime, small_cfg.N))]
    det_a = MrcDetector(Y, table, alphabet, DetectorConfig(S=1))
    det_a.run_pass()
    det_b = MrcDetector(Y, table, alphabet, DetectorConfig(S=1))
    det_b.run_pass()
    det_a.install_estimates(x_new)
    det_b.install_estimates(x_new, rebuild_cache=True)
    assert np.allclose(det_a.yhat_spec, det_b.yhat_spec, atol=1e-9)


def test_op_counter_exact_small():
    cfg = FrameConfig(M=16, N=8, delta_f=15e3, l_max=4)
    model = random_channel(cfg, n_paths=5, seed=70)
    table = build_doppler_spread_table(model, cfg)
    _, X = random_frame(cfg, 4, seed=71)
    Y = apply_channel(X, table, 0.1, philox(72))
    S = 3
    res = detect(Y, table, make_alphabet(4), DetectorConfig(S=S))
    terms = complexity_terms(cfg.N, cfg.M, cfg.l_max, table.L, S)
    assert res.counter.iter_mults == terms["iterative"]
    assert res.counter.setup_mults == terms["setup_products"]
    assert res.counter.setup_fft_mults == terms["setup_ffts"]


def test_op_counter_can_be_disabled(small_cfg):
    alphabet = make_alphabet(4)
    table, _, _, Y = _noisy_instance(small_cfg, seed=80)
    res = detect(Y, table, alphabet, DetectorConfig(S=2, count_ops=False))
    assert res.counter.iter_mults == 0
    assert res.counter.setup_mults == 0


def test_singular_combiner_raises(small_cfg):
    # a channel confined to delay 0 with a single Doppler line has zero
    # spectrum bins; epsilon=0 must refuse, epsilon>0 must proceed
    from ddrake.channel import ChannelModel, ChannelPath

    model = ChannelModel(
        paths=(ChannelPath(1.0, 0, 0), ChannelPath(-1.0, 0, 1)), l_max=3
    )
    table = build_doppler_spread_table(model, small_cfg)
    Y = DelayDopplerGrid(np.zeros((small_cfg.M, small_cfg.N), dtype=complex))
    alphabet = make_alphabet(4)
    with pytest.raises(SingularCombinerError):
        MrcDetector(Y, table, alphabet, DetectorConfig(epsilon=0.0))
    MrcDetector(Y, table, alphabet, DetectorConfig(epsilon=1e-12))


def test_soft_llrs_signs_and_clamp():
    alphabet = make_alphabet(4)
    R = np.ones((1, 4))
    c = np.array([[0.9 + 0.9j, -0.9 + 0.9j, 0.9 - 0.9j, -0.9 - 0.9j]]) / np.sqrt(2)
    llr = soft_llrs(c, R, sigma_w=0.5, alphabet=alphabet)
    hard = (llr < 0).astype(np.uint8).reshape(-1, 2)
    assert np.array_equal(hard, [[0, 0], [1, 0], [0, 1], [1, 1]])
    assert np.all(np.abs(llr) <= 50.0)
    # noiseless: every LLR saturates
    llr0 = soft_llrs(c, R, sigma_w=0.0, alphabet=alphabet)
    assert np.all(np.abs(llr0) == 50.0)


def test_soft_llrs_scale_with_noise():
    alphabet = make_alphabet(4)
    R = np.full((1, 4), 2.0)
    c = np.array([[0.2 + 0.3j, -0.4 + 0.1j, 0.5 - 0.2j, -0.1 - 0.6j]])
    a = soft_llrs(c, R, sigma_w=0.3, alphabet=alphabet)
    b = soft_llrs(c, R, sigma_w=0.6, alphabet=alphabet)
    assert np.allclose(a, 4.0 * b)


def test_result_full_grid(small_cfg):
    alphabet = make_alphabet(4)
    table, _, _, Y = _noisy_instance(small_cfg, seed=90)
    res = detect(Y, table, alphabet, DetectorConfig(S=1))
    grid = res.full_grid(small_cfg.M)
    assert grid.check_null_rows(small_cfg)
    assert np.array_equal(
        extract_payload(grid, small_cfg).reshape(small_cfg.M_prime, small_cfg.N),
        res.x_hat,
    )
