import numpy as np
import pytest

from mimo_mc.admm import ParameterError, SolverError
from mimo_mc.baselines import (OmpConfig, SvtConfig, default_svt_config, omp_dictionary,
                               solve_omp, solve_svt)
from mimo_mc.channel import (ChannelConfig, channel_from_paths, dft_bases, dft_grid_angles_deg,
                             generate_channel)
from mimo_mc.metrics import nmse
from mimo_mc.sampling import generate_mask, simulate_training


def observe(seed, n_rx, n_tx, n_paths, m, noise_var=0.0):
    rng = np.random.default_rng(seed)
    truth = generate_channel(ChannelConfig(n_rx, n_tx, n_paths), rng)
    obs = simulate_training(truth.h, generate_mask(n_rx, n_tx, m, rng), 1.0, noise_var, rng)
    return truth, obs


class TestSvt:
    def test_config_validation(self):
        with pytest.raises(ParameterError):
            SvtConfig(0.0, 1.0)
        with pytest.raises(ParameterError):
            SvtConfig(1.0, 1.0, max_iters=0)

    def test_default_rule(self):
        _, obs = observe(0, 8, 8, 1, 16)
        cfg = default_svt_config(obs)
        assert cfg.step == pytest.approx(0.75)
        assert cfg.tau == pytest.approx(0.75 * np.linalg.norm(obs.h_omega, 2))
        _, full = observe(0, 8, 8, 1, 64)
        assert default_svt_config(full).step == 1.9

    def test_full_sampling_rank_one(self):
        truth, obs = observe(1, 8, 8, 1, 64)
        assert nmse(solve_svt(obs, SvtConfig(1e-6, 1.0)), truth.h)[1] <= -40

    def test_half_sampling_rank_one(self):
        truth, obs = observe(2, 16, 16, 1, 128)
        est, trace = solve_svt(obs, SvtConfig(5 * 16, 1.2, 500), return_trace=True)
        assert nmse(est, truth.h)[1] <= -30
        res = np.array(trace.primal_residual_1)
        assert np.all(np.diff(res[20:]) <= 1e-12)

    def test_no_samples(self):
        _, obs = observe(3, 4, 4, 1, 0)
        assert not np.any(solve_svt(obs, SvtConfig(1.0, 1.0)))

    def test_trace_columns(self):
        truth, obs = observe(4, 8, 8, 2, 32)
        _, trace = solve_svt(obs, default_svt_config(obs), truth, return_trace=True)
        assert len(trace) == 100
        assert all(np.isnan(trace.primal_residual_2))
        assert trace.nmse_db[-1] < trace.nmse_db[0]

    def test_divergence_detected(self):
        _, obs = observe(5, 8, 8, 2, 32)
        with pytest.raises(SolverError, match="diverging"):
            solve_svt(obs, SvtConfig(1e-3, 5.0, 200))


class TestOmp:
    def test_config_validation(self):
        with pytest.raises(ParameterError):
            OmpConfig(0)
        _, obs = observe(0, 4, 4, 1, 3)
        d_r, d_t = dft_bases(4, 4)
        with pytest.raises(ParameterError):
            solve_omp(obs, d_r, d_t, OmpConfig(4))

    def test_on_grid_single_path_exact(self, rng):
        n = 8
        d_r, d_t = dft_bases(n, n)
        h = channel_from_paths(n, n, [0.7 - 0.2j], dft_grid_angles_deg(n)[[3]],
                               dft_grid_angles_deg(n)[[5]])
        obs = simulate_training(h, generate_mask(n, n, 20, rng), 1.0, 0.0, rng)
        est, support, _ = solve_omp(obs, d_r, d_t, OmpConfig(1), return_support=True)
        assert support == [5 + 3 * n]
        assert nmse(est, h)[1] < -200

    def test_residual_and_support(self):
        _, obs = observe(6, 16, 16, 3, 100, noise_var=1e-3)
        d_r, d_t = dft_bases(16, 16)
        _, support, hist = solve_omp(obs, d_r, d_t, OmpConfig(12), return_support=True)
        assert len(set(support)) == len(support) == 12
        assert np.all(np.diff(hist) <= 1e-12)

    def test_residual_tol_stops_early(self, rng):
        n = 8
        d_r, d_t = dft_bases(n, n)
        h = channel_from_paths(n, n, [1.0], dft_grid_angles_deg(n)[[1]], dft_grid_angles_deg(n)[[2]])
        obs = simulate_training(h, generate_mask(n, n, 30, rng), 1.0, 0.0, rng)
        _, support, _ = solve_omp(obs, d_r, d_t, OmpConfig(5, 1e-9), return_support=True)
        assert len(support) == 1

    def test_off_grid_floor(self):
        # off-grid paths leak energy across beams; a few atoms cannot capture it
        d_r, d_t = dft_bases(32, 32)
        errs = []
        for seed in range(5):
            truth, obs = observe(seed, 32, 32, 2, 512)
            errs.append(nmse(solve_omp(obs, d_r, d_t, OmpConfig(8)), truth.h)[1])
        assert np.mean(errs) > -15

    def test_implicit_correlation_matches_dictionary(self, rng):
        _, obs = observe(7, 5, 4, 2, 11)
        d_r, d_t = dft_bases(5, 4)
        full = omp_dictionary(obs, d_r, d_t)
        assert full.shape == (11, 20)
        cols = [0, 7, 19]
        np.testing.assert_allclose(omp_dictionary(obs, d_r, d_t, cols), full[:, cols])
        # explicit Kronecker rows at the support, column-major
        b = np.kron(d_t.conj(), d_r)
        idx = [i + j * 5 for i, j in obs.pattern.support]
        np.testing.assert_allclose(full, b[idx], atol=1e-14)
        r = rng.standard_normal(11) + 1j * rng.standard_normal(11)
        r_mat = np.zeros((5, 4), dtype=complex)
        for (i, j), x in zip(obs.pattern.support, r):
            r_mat[i, j] = x
        implicit = (d_r.conj().T @ r_mat @ d_t).reshape(-1, order="F")
        np.testing.assert_allclose(implicit, full.conj().T @ r, atol=1e-12)
