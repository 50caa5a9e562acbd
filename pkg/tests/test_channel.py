import json

import numpy as np
import pytest

from mimo_mc.channel import (ChannelConfig, ChannelRealization, channel_from_paths,
                             dft_grid_angles_deg, from_beamspace, generate_channel,
                             sample_path_params, to_beamspace, ula_response, wrap_angle_deg)
from mimo_mc.linalg import DimensionError, dft_matrix

from conftest import crandn


def numerical_rank(h):
    s = np.linalg.svd(h, compute_uv=False)
    return int(np.sum(s > 1e-9 * s[0]))


def test_ula_examples():
    np.testing.assert_allclose(ula_response(2, 0.0), np.ones(2) / np.sqrt(2))
    np.testing.assert_allclose(ula_response(4, np.pi / 2), [0.5, -0.5, 0.5, -0.5], atol=1e-15)


@pytest.mark.parametrize("n", [1, 3, 16, 64])
def test_ula_unit_norm(n, rng):
    for phi in rng.uniform(-np.pi, np.pi, 10):
        assert abs(np.linalg.norm(ula_response(n, phi)) - 1) < 1e-14


def test_config_validation():
    with pytest.raises(DimensionError):
        ChannelConfig(0, 4)
    with pytest.raises(ValueError):
        ChannelConfig(4, 4, n_paths=0)
    with pytest.raises(ValueError):
        ChannelConfig(4, 4, angle_spread_deg=0)


def test_wrap_angle():
    np.testing.assert_allclose(wrap_angle_deg([0, 90, -90, 100, -100, 270, 45]),
                               [0, 90, 90, -80, 80, 90, 45])


def test_path_statistics():
    cfg = ChannelConfig(4, 4, n_paths=100_000, angle_spread_deg=50.0)
    gains, aod, aoa = sample_path_params(cfg, np.random.default_rng(1))
    assert abs(np.mean(np.abs(gains) ** 2) - 0.5) < 0.02
    # circular symmetry: equal power in real and imaginary parts
    assert abs(np.mean(gains.real ** 2) - 0.25) < 0.01
    assert abs(np.mean(gains.imag ** 2) - 0.25) < 0.01
    assert np.all((aod > -90) & (aod <= 90)) and np.all((aoa > -90) & (aoa <= 90))


def test_angle_spread_before_wrapping(monkeypatch):
    import mimo_mc.channel as channel

    monkeypatch.setattr(channel, "wrap_angle_deg", lambda a: np.asarray(a))
    cfg = ChannelConfig(4, 4, n_paths=100_000, angle_spread_deg=50.0)
    _, aod, aoa = channel.sample_path_params(cfg, np.random.default_rng(2))
    assert abs(np.std(aod) - 50) < 1 and abs(np.std(aoa) - 50) < 1


def test_seed_determinism():
    cfg = ChannelConfig(8, 8, 3)
    a = generate_channel(cfg, np.random.default_rng(5))
    b = generate_channel(cfg, np.random.default_rng(5))
    np.testing.assert_array_equal(a.h, b.h)
    np.testing.assert_array_equal(a.gains, b.gains)


def test_single_path_rank_one(rng):
    real = generate_channel(ChannelConfig(16, 12, 1), rng)
    assert numerical_rank(real.h) == 1


def test_rank_bounded_by_paths():
    for seed in range(100):
        real = generate_channel(ChannelConfig(64, 64, 2), np.random.default_rng(seed))
        assert numerical_rank(real.h) <= 2


def test_reconstruct_from_params(rng):
    real = generate_channel(ChannelConfig(8, 6, 3), rng)
    # independent assembly as a sum of outer products
    h = np.zeros((8, 6), dtype=complex)
    for g, t, r in zip(real.gains, real.aod_deg, real.aoa_deg):
        a_r = np.exp(1j * np.pi * np.arange(8) * np.sin(np.deg2rad(r))) / np.sqrt(8)
        a_t = np.exp(1j * np.pi * np.arange(6) * np.sin(np.deg2rad(t))) / np.sqrt(6)
        h += g * np.outer(a_r, a_t.conj())
    assert np.max(np.abs(real.h - real.scale * h)) < 1e-12
    assert real.scale == pytest.approx(np.sqrt(8 * 6 / 3))


def test_unnormalized_channel(rng):
    real = generate_channel(ChannelConfig(8, 8, 2, normalize=False), rng)
    assert real.scale == 1.0
    np.testing.assert_allclose(real.h, channel_from_paths(8, 8, real.gains, real.aod_deg,
                                                          real.aoa_deg))


def test_record_roundtrip(rng):
    real = generate_channel(ChannelConfig(6, 5, 2, rng_seed=9))
    rec = json.loads(json.dumps(real.to_record()))
    back = ChannelRealization.from_record(rec)
    np.testing.assert_array_equal(back.h, real.h)
    assert back.seed == 9


def test_beamspace_on_grid_beam():
    d_r, d_t = dft_matrix(8), dft_matrix(6)
    h = np.outer(d_r[:, 0], d_t[:, 0].conj())
    z = to_beamspace(h, d_r, d_t)
    expect = np.zeros((8, 6))
    expect[0, 0] = 1
    assert np.max(np.abs(z - expect)) < 1e-12


def test_beamspace_roundtrip_and_energy(rng):
    d_r, d_t = dft_matrix(7), dft_matrix(5)
    h = crandn(rng, 7, 5)
    z = to_beamspace(h, d_r, d_t)
    assert np.max(np.abs(from_beamspace(z, d_r, d_t) - h)) < 1e-12
    assert abs(np.linalg.norm(z) - np.linalg.norm(h)) < 1e-12
    with pytest.raises(DimensionError):
        to_beamspace(h, d_t, d_r)


def test_grid_angles_match_dft_columns():
    for n in (4, 7, 16):
        d = dft_matrix(n)
        for k, phi in enumerate(dft_grid_angles_deg(n)):
            assert np.max(np.abs(ula_response(n, np.deg2rad(phi)) - d[:, k])) < 1e-12


def test_on_grid_energy_compaction(rng):
    n_rx, n_tx, n_paths = 16, 12, 3
    d_r, d_t = dft_matrix(n_rx), dft_matrix(n_tx)
    for _ in range(10):
        rx = rng.choice(n_rx, n_paths, replace=False)
        tx = rng.choice(n_tx, n_paths, replace=False)
        gains = crandn(rng, n_paths)
        h = channel_from_paths(n_rx, n_tx, gains, dft_grid_angles_deg(n_tx)[tx],
                               dft_grid_angles_deg(n_rx)[rx])
        z = to_beamspace(h, d_r, d_t)
        assert np.sum(np.abs(z) > 1e-9) == n_paths
