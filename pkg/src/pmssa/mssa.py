"""Projected multivariate singular spectrum analysis.

The snapshot matrix is projected onto its leading ``r`` left singular
vectors, the resulting ``r`` coefficient series are time-delay embedded into a
stacked block-Hankel trajectory matrix, that matrix is truncated to rank
``r_mssa``, antidiagonals are averaged back into series, and the series are
lifted back through the spatial modes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ArgumentError, NumericError, ValidationError
from .snapshot import SnapshotMatrix
from .svd import SvdFactors, compute_svd, project, reconstruct

# trajectory matrices with more rows than this are truncated through a Gram matrix
DIRECT_SVD_MAX_ROWS = 2048


@dataclass(frozen=True, eq=False)
class TrajectoryMatrix:
    """Stacked ``(r*L) x K`` trajectory matrix; rows ``i*L:(i+1)*L`` are series ``i``."""

    values: np.ndarray
    r: int
    L: int
    m: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        K = self.m - self.L + 1
        if self.r < 1 or self.L < 1 or K < 1 or values.shape != (self.r * self.L, K):
            raise ValidationError(
                f"values shape {values.shape} inconsistent with r={self.r}, L={self.L}, m={self.m}"
            )
        values = values.view()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def K(self) -> int:
        return self.m - self.L + 1

    def block(self, i: int) -> np.ndarray:
        return self.values[i * self.L:(i + 1) * self.L]

    def blocks(self) -> np.ndarray:
        """All blocks as an ``r x L x K`` view."""
        return self.values.reshape(self.r, self.L, self.K)


def default_window(m: int, rule: str = "sqrt") -> int:
    """Window length: ``round(3*sqrt(m))`` (``"sqrt"``) or ``m // 2`` (``"half"``)."""
    if rule == "sqrt":
        L = int(math.floor(3.0 * math.sqrt(m) + 0.5))
    elif rule == "half":
        L = m // 2
    else:
        raise ArgumentError(f"unknown window rule {rule!r}")
    return min(max(L, 2), m - 1)


def _check_window(L: int, m: int) -> int:
    L = int(L)
    if not 2 <= L <= m - 1:
        raise ArgumentError(f"window length L={L} outside 2..{m - 1}")
    return L


def _as_coeffs(coeffs) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.ndim == 1:
        coeffs = coeffs[None, :]
    if coeffs.ndim != 2 or coeffs.shape[0] < 1:
        raise ArgumentError(f"coefficients must be an r x m array, got shape {coeffs.shape}")
    if not np.isfinite(coeffs).all():
        raise ValidationError("coefficients contain NaN or Inf")
    return coeffs


def embed(coeffs, L: int) -> TrajectoryMatrix:
    """Time-delay embed each coefficient series into an ``L x K`` Hankel block.

    Entry ``(a, b)`` of block ``i`` is ``coeffs[i, a + b]`` (0-based).
    """
    coeffs = _as_coeffs(coeffs)
    r, m = coeffs.shape
    L = _check_window(L, m)
    windows = np.lib.stride_tricks.sliding_window_view(coeffs, L, axis=1)  # r x K x L
    values = np.ascontiguousarray(windows.transpose(0, 2, 1)).reshape(r * L, m - L + 1)
    return TrajectoryMatrix(values, r=r, L=L, m=m)


def truncate_trajectory(T: TrajectoryMatrix, r_mssa: int) -> TrajectoryMatrix:
    """Best rank-``r_mssa`` approximation of the stacked trajectory matrix.

    Up to ``DIRECT_SVD_MAX_ROWS`` rows the matrix is factored directly.
    Beyond that the leading eigenvectors of the Gram matrix of the smaller
    side give the dominant subspace, and the result is the orthogonal
    projection of ``T`` onto it.
    """
    r_mssa = int(r_mssa)
    n_rows, K = T.values.shape
    if not 1 <= r_mssa <= min(n_rows, K):
        raise ArgumentError(f"r_mssa={r_mssa} outside 1..{min(n_rows, K)}")
    A = T.values
    if n_rows <= DIRECT_SVD_MAX_ROWS:
        try:
            P, s, Qt = np.linalg.svd(A, full_matrices=False)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"trajectory SVD did not converge: {exc}") from exc
        approx = (P[:, :r_mssa] * s[:r_mssa]) @ Qt[:r_mssa]
    else:
        right = K <= n_rows
        gram = A.T @ A if right else A @ A.T
        n = gram.shape[0]
        try:
            _, vecs = scipy.linalg.eigh(gram, subset_by_index=[n - r_mssa, n - 1])
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"trajectory Gram eigendecomposition failed: {exc}") from exc
        approx = (A @ vecs) @ vecs.T if right else vecs @ (vecs.T @ A)
    if not np.isfinite(approx).all():
        raise NumericError("trajectory truncation produced non-finite values")
    return TrajectoryMatrix(approx, r=T.r, L=T.L, m=T.m)


def antidiagonal_counts(L: int, K: int) -> np.ndarray:
    """Number of entries on each antidiagonal of an ``L x K`` block."""
    m = L + K - 1
    j = np.arange(1, m + 1)
    return np.minimum.reduce([j, np.full(m, L), np.full(m, K), m - j + 1])


def diagonal_average(T: TrajectoryMatrix) -> np.ndarray:
    """Average every block along its antidiagonals, giving an ``r x m`` array."""
    blocks = T.blocks()
    K = T.K
    sums = np.zeros((T.r, T.m))
    for a in range(T.L):
        sums[:, a:a + K] += blocks[:, a, :]
    return sums / antidiagonal_counts(T.L, K)


@dataclass(frozen=True, eq=False)
class PmssaResult:
    """Intermediate products of one PMSSA run.

    ``projected`` holds the noisy temporal coefficients and ``denoised`` the
    coefficients after trajectory truncation and diagonal averaging; both are
    ``r x m``.
    """

    factors: SvdFactors
    projected: np.ndarray
    denoised: np.ndarray
    L: int
    r_mssa: int

    @property
    def r(self) -> int:
        return self.factors.r

    def reconstruct(self, like: SnapshotMatrix | None = None) -> SnapshotMatrix:
        return reconstruct(self.factors.U, self.denoised, like=like)


def pmssa_decompose(
    X: SnapshotMatrix,
    r: int,
    L: int | None = None,
    r_mssa: int | None = None,
    *,
    factors: SvdFactors | None = None,
) -> PmssaResult:
    """Run every PMSSA step except the final lift back to pixel space.

    Parameters
    ----------
    X : SnapshotMatrix
    r : int
        Number of SVD modes kept, ``1 <= r <= min(d, m)``.
    L : int, optional
        Window length, ``2 <= L <= m - 1``; defaults to ``default_window(m)``.
    r_mssa : int, optional
        Rank kept in the trajectory matrix; defaults to ``r``.
    factors : SvdFactors, optional
        Precomputed factors of ``X`` holding at least ``r`` triplets.
    """
    m = X.m
    L = default_window(m) if L is None else _check_window(L, m)
    r_mssa = int(r) if r_mssa is None else int(r_mssa)
    factors = compute_svd(X, r) if factors is None else factors.truncate(int(r))
    projected = project(factors)
    trajectory = embed(projected, L)
    denoised = diagonal_average(truncate_trajectory(trajectory, r_mssa))
    return PmssaResult(factors, projected, denoised, L, r_mssa)


def pmssa_denoise(
    X: SnapshotMatrix,
    r: int,
    L: int | None = None,
    r_mssa: int | None = None,
    *,
    factors: SvdFactors | None = None,
) -> SnapshotMatrix:
    """PMSSA-denoised snapshots ``U_r @ X_hat`` carrying the input's grid and dt."""
    return pmssa_decompose(X, r, L, r_mssa, factors=factors).reconstruct(like=X)
