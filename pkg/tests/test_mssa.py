import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from pmssa.errors import ArgumentError
from pmssa.mssa import (
    TrajectoryMatrix,
    antidiagonal_counts,
    default_window,
    diagonal_average,
    embed,
    pmssa_decompose,
    pmssa_denoise,
    truncate_trajectory,
)
from pmssa.snapshot import GridSpec, SnapshotMatrix
from pmssa.svd import compute_svd


def rel(a, b):
    return np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(b)


class TestEmbed:
    def test_single_series(self):
        T = embed(np.array([[1.0, 2, 3, 4, 5]]), 3)
        assert (T.r, T.L, T.K, T.m) == (1, 3, 3, 5)
        np.testing.assert_array_equal(T.values, [[1, 2, 3], [2, 3, 4], [3, 4, 5]])

    def test_stacking(self):
        T = embed(np.array([[1.0, 2, 3], [4, 5, 6]]), 2)
        np.testing.assert_array_equal(T.values, [[1, 2], [2, 3], [4, 5], [5, 6]])

    def test_constant(self):
        T = embed(np.full((3, 12), 2.5), 5)
        np.testing.assert_array_equal(T.values, 2.5)

    def test_hankel_property(self):
        coeffs = np.random.default_rng(0).standard_normal((3, 20))
        T = embed(coeffs, 6)
        for block in T.blocks():
            np.testing.assert_array_equal(block[1:, :-1], block[:-1, 1:])

    @pytest.mark.parametrize("L", [0, 1, 10, 11])
    def test_window_bounds(self, L):
        with pytest.raises(ArgumentError):
            embed(np.ones((1, 10)), L)


class TestTruncate:
    def test_exact_rank_unchanged(self):
        rng = np.random.default_rng(1)
        values = rng.standard_normal((8, 2)) @ rng.standard_normal((2, 7))
        T = TrajectoryMatrix(values, r=2, L=4, m=10)
        assert rel(truncate_trajectory(T, 2).values, values) < 1e-10

    def test_sinusoid_has_rank_two(self):
        series = np.sin(2 * np.pi * 0.07 * np.arange(60) + 0.3)
        T = embed(series[None, :], 20)
        s = np.linalg.svd(T.values, compute_uv=False)
        assert s[2] < 1e-10 * s[0]  # oracle rank check
        assert rel(truncate_trajectory(T, 2).values, T.values) < 1e-8

    def test_against_oracle(self):
        values = np.random.default_rng(2).standard_normal((6, 5))
        T = TrajectoryMatrix(values, r=2, L=3, m=7)
        assert rel(truncate_trajectory(T, 2).values, oracles.rank_r_approximation(values, 2)) < 1e-9

    def test_gram_path_matches_direct(self, monkeypatch):
        import pmssa.mssa as mssa

        rng = np.random.default_rng(3)
        for shape in ((12, 30), (30, 12)):
            signal = rng.standard_normal((shape[0], 3)) @ rng.standard_normal((3, shape[1]))
            values = signal + 1e-3 * rng.standard_normal(shape)
            r, L = (3, 4) if shape[0] == 12 else (3, 10)
            T = TrajectoryMatrix(values, r=r, L=L, m=shape[1] + L - 1)
            direct = truncate_trajectory(T, 3).values
            monkeypatch.setattr(mssa, "DIRECT_SVD_MAX_ROWS", 4)
            gram = truncate_trajectory(T, 3).values
            monkeypatch.setattr(mssa, "DIRECT_SVD_MAX_ROWS", 2048)
            assert rel(gram, direct) < 1e-9

    def test_non_expansive(self):
        rng = np.random.default_rng(4)
        for k in range(1, 6):
            T = embed(rng.standard_normal((3, 30)), 8)
            assert np.linalg.norm(truncate_trajectory(T, k).values) <= np.linalg.norm(T.values) * (1 + 1e-12)

    def test_keeps_metadata(self):
        T = embed(np.random.default_rng(5).standard_normal((2, 15)), 4)
        out = truncate_trajectory(T, 2)
        assert (out.r, out.L, out.K, out.m) == (T.r, T.L, T.K, T.m)

    @pytest.mark.parametrize("k", [0, 9])
    def test_rank_bounds(self, k):
        T = embed(np.ones((2, 10)), 4)  # 8 x 7
        with pytest.raises(ArgumentError):
            truncate_trajectory(T, k)


class TestDiagonalAverage:
    def test_hand_example(self):
        T = TrajectoryMatrix(np.arange(1.0, 10.0).reshape(3, 3), r=1, L=3, m=5)
        np.testing.assert_allclose(diagonal_average(T)[0], [1, 3, 5, 7, 9], rtol=1e-15)

    def test_matches_enumeration_oracle(self):
        rng = np.random.default_rng(6)
        for L, K in ((3, 3), (2, 7), (7, 2), (5, 9)):
            block = rng.standard_normal((L, K))
            T = TrajectoryMatrix(block, r=1, L=L, m=L + K - 1)
            np.testing.assert_allclose(diagonal_average(T)[0], oracles.antidiagonal_means(block), atol=1e-14)

    def test_counts(self):
        np.testing.assert_array_equal(antidiagonal_counts(3, 3), [1, 2, 3, 2, 1])
        np.testing.assert_array_equal(antidiagonal_counts(2, 4), [1, 2, 2, 2, 1])

    def test_constant(self):
        T = TrajectoryMatrix(np.full((8, 5), -1.5), r=2, L=4, m=8)
        np.testing.assert_allclose(diagonal_average(T), -1.5, rtol=1e-15)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(1, 8), st.integers(3, 200), st.data())
    def test_hankel_roundtrip(self, r, m, data):
        L = data.draw(st.integers(2, m - 1))
        seed = data.draw(st.integers(0, 2**32 - 1))
        coeffs = np.random.default_rng(seed).standard_normal((r, m)) * 10
        np.testing.assert_allclose(diagonal_average(embed(coeffs, L)), coeffs, rtol=0, atol=1e-12)


def rank3_field(d=40, m=120, seed=0):
    rng = np.random.default_rng(seed)
    t = np.arange(m)
    temporal = np.vstack([np.ones(m), np.cos(0.2 * t), np.sin(0.2 * t)])
    return SnapshotMatrix(rng.standard_normal((d, 3)) @ temporal)


class TestPipeline:
    def test_noiseless_rank3_exact(self):
        X = rank3_field(m=400)
        L = default_window(400)
        assert L == 60
        assert rel(pmssa_denoise(X, 3, L).values, X.values) < 1e-8

    def test_default_rank_mssa(self):
        rng = np.random.default_rng(1)
        X = SnapshotMatrix(rng.standard_normal((25, 50)))
        a = pmssa_denoise(X, 4, 10)
        b = pmssa_denoise(X, 4, 10, r_mssa=4)
        assert a.values.tobytes() == b.values.tobytes()

    def test_default_window(self):
        X = SnapshotMatrix(np.random.default_rng(2).standard_normal((10, 100)))
        res = pmssa_decompose(X, 3)
        assert res.L == 30 and res.r_mssa == 3
        assert default_window(1000) == 95
        assert default_window(1000, "half") == 500
        assert default_window(10_000) == 300

    def test_exposes_intermediates(self):
        X = SnapshotMatrix(np.random.default_rng(3).standard_normal((12, 40)), grid=GridSpec(4, 3), dt=0.5)
        res = pmssa_decompose(X, 3, 8)
        assert res.projected.shape == res.denoised.shape == (3, 40)
        f = compute_svd(X, 3)
        np.testing.assert_allclose(res.projected, f.U.T @ X.values, atol=1e-12)
        out = res.reconstruct(like=X)
        assert out.grid == X.grid and out.dt == 0.5
        np.testing.assert_allclose(out.values, res.factors.U @ res.denoised, atol=1e-13)

    def test_output_in_mode_span(self):
        X = SnapshotMatrix(np.random.default_rng(4).standard_normal((30, 60)))
        res = pmssa_decompose(X, 5, 12)
        out = res.reconstruct().values
        U = res.factors.U
        assert rel(U @ (U.T @ out), out) < 1e-10

    def test_window_symmetry_single_series(self):
        rng = np.random.default_rng(5)
        X = SnapshotMatrix(rng.standard_normal((20, 50)))
        for L in (3, 10, 20):
            a = np.linalg.norm(pmssa_denoise(X, 1, L).values - X.values)
            b = np.linalg.norm(pmssa_denoise(X, 1, 50 - L + 1).values - X.values)
            assert abs(a - b) <= 1e-9 * a

    def test_deterministic(self):
        X = SnapshotMatrix(np.random.default_rng(6).standard_normal((30, 80)))
        assert pmssa_denoise(X, 4, 20).values.tobytes() == pmssa_denoise(X, 4, 20).values.tobytes()

    def test_reuses_factors(self):
        X = SnapshotMatrix(np.random.default_rng(7).standard_normal((30, 80)))
        f = compute_svd(X, 10)
        a = pmssa_denoise(X, 4, 20, factors=f)
        b = pmssa_denoise(X, 4, 20)
        assert rel(a.values, b.values) < 1e-12

    def test_argument_errors(self):
        X = SnapshotMatrix(np.random.default_rng(8).standard_normal((10, 30)))
        for kwargs in ({"r": 0, "L": 5}, {"r": 11, "L": 5}, {"r": 2, "L": 1}, {"r": 2, "L": 30}):
            with pytest.raises(ArgumentError):
                pmssa_denoise(X, **kwargs)
        with pytest.raises(ArgumentError):
            pmssa_denoise(X, 2, 5, r_mssa=27)
