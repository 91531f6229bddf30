"""Distribution, evaluation and diagnostic tests for the limit series."""
import math

import numpy as np
import pytest

from klpath.random_series import (
    SeriesVariate,
    limit_mixed_second_moment,
    mu_cdf,
    mu_cdf_left,
    mu_moment,
    mu_sample,
    mu_sample_array,
    series_eval,
    series_moment_mc,
    series_sample_paths,
    series_variate,
    substream,
)
from klpath.stats import ks_statistic

SEED = 20240817


class TestMuDistribution:
    def test_moments_exact(self):
        assert mu_moment(0) == 1.0
        assert mu_moment(1) == 0.0
        assert mu_moment(2) == 1.0
        assert mu_moment(3) == 0.0
        assert mu_moment(4) == 3.0
        assert mu_moment(6) == 10.0
        assert mu_moment(8) == 35.0

    def test_cdf_end_points_and_atom(self):
        assert mu_cdf(-2.0) == 0.0
        assert mu_cdf(2.0) == 1.0
        assert mu_cdf(0.0) == pytest.approx(0.75)
        assert mu_cdf_left(0.0) == pytest.approx(0.25)
        assert mu_cdf(-3.0) == 0.0 and mu_cdf(3.0) == 1.0

    def test_cdf_monotone(self):
        grid = np.linspace(-2.2, 2.2, 400)
        vals = mu_cdf(grid)
        assert np.all(np.diff(vals) >= -1e-15)

    def test_sampler_support(self):
        rng = substream(SEED, 0)
        draws = mu_sample_array(rng, 4000)
        assert np.all((draws == 0.0) | ((draws >= -2.0) & (draws <= 2.0)))
        scalar = mu_sample(substream(SEED, 1))
        assert scalar == 0.0 or -2.0 <= scalar <= 2.0

    def test_sampler_statistics_at_million(self):
        draws = mu_sample_array(substream(SEED, 2), 10 ** 6)
        assert abs(float(draws.mean())) <= 0.005
        assert abs(float((draws == 0.0).mean()) - 0.5) <= 0.002

    def test_sampler_ks_self_consistency(self):
        draws = mu_sample_array(substream(SEED, 3), 10 ** 5)
        assert ks_statistic(draws, mu_cdf, mu_cdf_left) <= 0.01

    def test_symmetry_two_sample(self):
        draws = mu_sample_array(substream(SEED, 4), 10 ** 6)
        neg = np.sort(-draws)
        pos = np.sort(draws)
        grid = np.concatenate([pos, neg])
        f1 = np.searchsorted(pos, grid, side="right") / pos.size
        f2 = np.searchsorted(neg, grid, side="right") / neg.size
        assert float(np.max(np.abs(f1 - f2))) <= 0.005


class TestSeriesEval:
    def test_t_one_returns_central_coefficient(self):
        v = series_variate(8, SEED, index=5)
        assert series_eval(1.0, v) == pytest.approx(v.coeff(0), abs=1e-12)

    def test_t_zero_vanishes(self):
        v = series_variate(8, SEED, index=6)
        assert series_eval(0.0, v) == 0

    def test_single_coefficient(self):
        u = np.zeros(2 * 4 + 1)
        u[4] = 2.0  # h = 0
        v = SeriesVariate(4, u, seed=0)
        assert series_eval(0.5, v) == pytest.approx(1.0)

    def test_matches_matrix_path(self):
        grid = np.linspace(0, 1, 17)
        paths = series_sample_paths(grid, H=32, N=3, seed=SEED)
        for i in range(3):
            v = series_variate(32, SEED, index=i)
            for g, t in enumerate(grid):
                assert paths[i, g] == pytest.approx(
                    series_eval(float(t), v), abs=1e-10
                )


class TestSamplePaths:
    def test_reproducible_and_row_stable(self):
        grid = [0.0, 0.25, 1.0]
        a = series_sample_paths(grid, H=16, N=5, seed=SEED)
        b = series_sample_paths(grid, H=16, N=5, seed=SEED)
        assert np.array_equal(a, b)
        c = series_sample_paths(grid, H=16, N=9, seed=SEED)
        assert np.array_equal(a, c[:5])

    def test_t_zero_column_is_zero(self):
        paths = series_sample_paths([0.0, 0.5], H=16, N=20, seed=SEED)
        assert np.all(paths[:, 0] == 0)

    def test_t_one_column_distributed_as_mu(self):
        paths = series_sample_paths([1.0], H=4, N=10 ** 5, seed=SEED)
        col = paths[:, 0].real
        assert float(np.max(np.abs(paths[:, 0].imag))) < 1e-12
        assert ks_statistic(col, mu_cdf, mu_cdf_left) <= 0.01

    def test_second_moment_at_half(self):
        est, se = series_moment_mc(
            (0.5,), (1,), (1,), H=256, N=30_000, seed=SEED
        )
        assert abs(est - 0.5) <= 0.02
        assert se < 0.01


class TestMomentMc:
    def test_pure_powers_at_t_one(self):
        est, se = series_moment_mc((1.0,), (0,), (2,), H=2, N=20_000, seed=SEED)
        assert abs(est - 1.0) <= 4 * se + 1e-9
        est3, se3 = series_moment_mc((1.0,), (0,), (3,), H=2, N=20_000, seed=SEED)
        assert abs(est3) <= 4 * se3 + 1e-9

    def test_covariance_oracle(self):
        # sum over h of |beta|^2 telescopes to t at s = t
        assert limit_mixed_second_moment(0.5, 0.5) == pytest.approx(0.5, abs=1e-6)
        assert limit_mixed_second_moment(0.25, 0.25) == pytest.approx(0.25, abs=1e-6)
        cross = limit_mixed_second_moment(0.25, 0.75)
        assert cross.real == pytest.approx(0.25, abs=1e-6)


def _paths_by_fft(H: int, n_real: int, seed: int, grid_size: int) -> np.ndarray:
    """Evaluate Kl_H on the uniform grid k/grid_size via one FFT per batch."""
    G = max(grid_size, 4 * H)
    hs = np.concatenate([np.arange(1, H + 1), -np.arange(1, H + 1)])
    coeffs = 1.0 / (2j * np.pi * hs)
    rng = substream(seed, 7000 + H)
    out = np.empty((n_real, grid_size), dtype=complex)
    ts = np.arange(grid_size) / grid_size
    for i in range(n_real):
        u = mu_sample_array(rng, 2 * H + 1)
        u0 = u[H]
        uh = np.concatenate([u[H + 1 :], u[:H][::-1]])  # h = 1..H then -1..-H
        spread = np.zeros(G, dtype=complex)
        spread[hs % G] = coeffs * uh
        f = np.fft.ifft(spread) * G
        vals = f[:: G // grid_size]
        out[i] = u0 * ts - np.sum(coeffs * uh) + vals
    return out


class TestPathDiagnostics:
    def test_fft_evaluation_matches_direct(self):
        H = 16
        direct = series_sample_paths(np.arange(64) / 64, H=H, N=1, seed=SEED)
        # reuse the same coefficient stream for the FFT path
        rng = substream(SEED, 7000 + H)
        u = mu_sample_array(rng, 2 * H + 1)
        v = SeriesVariate(H, u, SEED)
        fft_paths = _paths_by_fft(H, 1, SEED, 64)
        for g in range(64):
            assert fft_paths[0, g] == pytest.approx(
                series_eval(g / 64, v), abs=1e-9
            )

    def test_sup_norm_grows_subpolynomially(self):
        hs = [2 ** k for k in range(4, 13)]
        sups = []
        for H in hs:
            paths = _paths_by_fft(H, 64, SEED, 1024)
            sups.append(float(np.abs(paths).max()))
        slope = np.polyfit(np.log(hs), np.log(sups), 1)[0]
        assert slope <= 0.2, (slope, sups)
        fitted_c = max(s / math.log(H) for s, H in zip(sups, hs))
        assert fitted_c < 10.0

    def test_max_increment_shrinks_under_refinement(self):
        H = 256
        means = []
        for grid_size in (1024, 2048, 4096):
            paths = _paths_by_fft(H, 16, SEED, grid_size)
            inc = np.abs(np.diff(paths, axis=1)).max(axis=1)
            means.append(float(inc.mean()))
        assert means[0] > means[1] > means[2]
