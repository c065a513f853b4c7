"""Frame geometry, QAM mapping and grid placement."""

import numpy as np
import pytest

from ddrake.frame import (
    DelayDopplerGrid,
    FrameConfig,
    extract_payload,
    make_alphabet,
    map_to_grid,
    ml_slice,
    qam_demodulate_hard,
    qam_modulate,
    slice_indices,
)
from ddrake.rng import philox


def test_frame_config_properties():
    cfg = FrameConfig(M=64, N=32, delta_f=15e3, l_max=8)
    assert cfg.M_prime == 56
    assert cfg.T * cfg.delta_f == pytest.approx(1.0)
    assert cfg.sample_rate == pytest.approx(64 * 15e3)
    assert cfg.z == pytest.approx(np.exp(2j * np.pi / (64 * 32)))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(M=48, N=32, delta_f=15e3, l_max=8),   # M not a power of two
        dict(M=64, N=1, delta_f=15e3, l_max=8),    # N too small
        dict(M=64, N=32, delta_f=15e3, l_max=0),   # l_max out of range
        dict(M=64, N=32, delta_f=15e3, l_max=64),  # l_max >= M
        dict(M=64, N=32, delta_f=0.0, l_max=8),    # non-positive spacing
    ],
)
def test_frame_config_validation(kwargs):
    with pytest.raises(ValueError):
        FrameConfig(**kwargs)


def test_qam4_gray_labels():
    alphabet = make_alphabet(4)
    s = 1.0 / np.sqrt(2.0)
    # label 00 is the most-positive corner; one bit per axis (I then Q)
    assert alphabet.points[0b00] == pytest.approx(s + 1j * s)
    assert alphabet.points[0b01] == pytest.approx(s - 1j * s)
    assert alphabet.points[0b10] == pytest.approx(-s + 1j * s)
    assert alphabet.points[0b11] == pytest.approx(-s - 1j * s)


@pytest.mark.parametrize("order", [4, 16])
def test_qam_unit_energy_and_gray_adjacency(order):
    alphabet = make_alphabet(order)
    assert np.mean(np.abs(alphabet.points) ** 2) == pytest.approx(1.0)
    # nearest neighbours differ in exactly one bit (Gray property)
    labels = alphabet.labels()
    pts = alphabet.points
    d = np.abs(pts[:, None] - pts[None, :])
    d_min = d[d > 1e-12].min()
    for a in range(order):
        for b in range(order):
            if a < b and d[a, b] < d_min * 1.001:
                assert int(np.sum(labels[a] != labels[b])) == 1


@pytest.mark.parametrize("order", [4, 16])
def test_modulate_demodulate_roundtrip(order):
    rng = philox(3)
    alphabet = make_alphabet(order)
    bits = rng.integers(0, 2, size=240 * alphabet.bits_per_symbol).astype(np.uint8)
    symbols = qam_modulate(bits, alphabet)
    assert np.array_equal(qam_demodulate_hard(symbols, alphabet), bits)


def test_modulate_rejects_ragged_bits():
    with pytest.raises(ValueError):
        qam_modulate(np.zeros(5, dtype=np.uint8), make_alphabet(4))
    with pytest.raises(ValueError):
        make_alphabet(8)


def test_slice_ties_break_low():
    alphabet = make_alphabet(4)
    # the origin is equidistant from all four points -> index 0 wins
    assert slice_indices(np.array([0.0 + 0.0j]), alphabet)[0] == 0


def test_ml_slice_noisy_symbols():
    rng = philox(11)
    alphabet = make_alphabet(16)
    idx = rng.integers(0, 16, size=500)
    clean = alphabet.points[idx]
    noisy = clean + 0.01 * (rng.standard_normal(500) + 1j * rng.standard_normal(500))
    assert np.array_equal(ml_slice(noisy, alphabet), clean)


def test_map_to_grid_roundtrip():
    cfg = FrameConfig(M=16, N=8, delta_f=15e3, l_max=3)
    rng = philox(7)
    payload = rng.standard_normal(cfg.M_prime * cfg.N) + 1j * rng.standard_normal(cfg.M_prime * cfg.N)
    grid = map_to_grid(payload, cfg)
    assert grid.entries.shape == (cfg.M, cfg.N)
    assert grid.check_null_rows(cfg)
    assert np.array_equal(extract_payload(grid, cfg), payload)


def test_map_to_grid_size_check():
    cfg = FrameConfig(M=16, N=8, delta_f=15e3, l_max=3)
    with pytest.raises(ValueError):
        map_to_grid(np.zeros(10, dtype=complex), cfg)


def test_null_row_check_detects_energy():
    cfg = FrameConfig(M=16, N=8, delta_f=15e3, l_max=3)
    grid = np.zeros((16, 8), dtype=complex)
    grid[-1, 0] = 1.0
    assert not DelayDopplerGrid(grid).check_null_rows(cfg)
