"""Truncated SVD of snapshot matrices, TSVD denoising and mode projection."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ArgumentError, NumericError, ValidationError
from .snapshot import SnapshotMatrix, load_matrix, save_matrix

EPS = 2.0 ** -52
# above this many elements the factorization switches to a randomized range finder
RANDOMIZED_THRESHOLD = 10**8
_RANDOMIZED_SEED = 20240917  # fixed, keeps factors reproducible
_OVERSAMPLE = 20
_POWER_ITERS = 6


@dataclass(frozen=True, eq=False)
class SvdFactors:
    """Leading ``r`` singular triplets of a ``d x m`` matrix.

    ``U`` is ``d x r``, ``S`` has length ``r`` (descending), ``V`` is ``m x r``.
    Signs are fixed so the largest-magnitude entry of each column of ``U`` is
    non-negative (first such entry on ties), with ``V`` flipped to match.
    ``rank_x`` is the numerical rank of the factored matrix, counted over all
    singular values the backend produced.
    """

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray
    rank_x: int

    def __post_init__(self):
        U, S, V = (np.asarray(a, dtype=np.float64) for a in (self.U, self.S, self.V))
        if U.ndim != 2 or V.ndim != 2 or S.ndim != 1:
            raise ValidationError("U, V must be 2-D and S 1-D")
        r = S.shape[0]
        if r < 1 or U.shape[1] != r or V.shape[1] != r:
            raise ValidationError(f"inconsistent factor shapes {U.shape}, {S.shape}, {V.shape}")
        if np.any(S < 0) or np.any(np.diff(S) > 0):
            raise ValidationError("singular values must be non-negative and descending")
        for name, a in (("U", U), ("S", S), ("V", V)):
            a = a.view()
            a.flags.writeable = False
            object.__setattr__(self, name, a)

    @property
    def r(self) -> int:
        return self.S.shape[0]

    def truncate(self, r: int) -> SvdFactors:
        """Factors of the leading ``r`` triplets."""
        if not 1 <= r <= self.r:
            raise ArgumentError(f"rank {r} outside 1..{self.r}")
        return SvdFactors(self.U[:, :r], self.S[:r], self.V[:, :r], self.rank_x)

    def save(self, stem) -> None:
        """Write ``<stem>.U.pmx``, ``<stem>.S.pmx`` and ``<stem>.V.pmx``."""
        for name, a in factor_paths(stem).items():
            arr = getattr(self, name)
            save_matrix(SnapshotMatrix(arr.reshape(-1, 1) if arr.ndim == 1 else arr), a)

    @classmethod
    def load(cls, stem) -> SvdFactors:
        paths = factor_paths(stem)
        U = load_matrix(paths["U"]).values
        S = load_matrix(paths["S"]).values[:, 0]
        V = load_matrix(paths["V"]).values
        return cls(U, S, V, numerical_rank(S, U.shape[0], V.shape[0]))


def factor_paths(stem) -> dict[str, Path]:
    stem = str(stem)
    return {name: Path(f"{stem}.{name}.pmx") for name in ("U", "S", "V")}


def numerical_rank(s: np.ndarray, d: int, m: int) -> int:
    """Count of singular values above ``max(d, m) * eps * s[0]``."""
    if len(s) == 0 or s[0] == 0:
        return 0
    return int(np.count_nonzero(s > max(d, m) * EPS * s[0]))


def fix_signs(U: np.ndarray, V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flip column pairs so the largest |entry| of each U column is >= 0."""
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.where(U[idx, np.arange(U.shape[1])] < 0, -1.0, 1.0)
    return U * signs, V * signs


def _as_array(X) -> np.ndarray:
    return X.values if isinstance(X, SnapshotMatrix) else np.asarray(X, dtype=np.float64)


def _dense_svd(A: np.ndarray):
    try:
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD of {A.shape[0]}x{A.shape[1]} matrix did not converge: {exc}") from exc
    return U, s, Vt.T


def _randomized_svd(A: np.ndarray, r: int):
    # Halko-Martinsson-Tropp range finder with re-orthonormalized power iterations
    d, m = A.shape
    k = min(r + _OVERSAMPLE, d, m)
    rng = np.random.Generator(np.random.PCG64(_RANDOMIZED_SEED))
    Q, _ = np.linalg.qr(A @ rng.standard_normal((m, k)))
    for _ in range(_POWER_ITERS):
        W, _ = np.linalg.qr(A.T @ Q)
        Q, _ = np.linalg.qr(A @ W)
    B = Q.T @ A
    Ub, s, V = _dense_svd(B)
    return Q @ Ub, s, V


def svd_backend(d: int, m: int) -> str:
    return "randomized" if d * m > RANDOMIZED_THRESHOLD else "dense"


def compute_svd(X, r: int) -> SvdFactors:
    """Best rank-``r`` factors of ``X`` with the sign convention applied.

    Parameters
    ----------
    X : SnapshotMatrix or array_like, shape (d, m)
    r : int
        Retained rank, ``1 <= r <= min(d, m)``.

    Returns
    -------
    SvdFactors

    Notes
    -----
    Matrices up to ``RANDOMIZED_THRESHOLD`` elements go through LAPACK's
    divide-and-conquer SVD.  Larger ones use a randomized range finder with a
    fixed seed, so repeated calls still give identical factors.
    """
    A = _as_array(X)
    d, m = A.shape
    r = int(r)
    if not 1 <= r <= min(d, m):
        raise ArgumentError(f"rank r={r} outside 1..{min(d, m)}")
    if svd_backend(d, m) == "dense":
        U, s, V = _dense_svd(A)
    else:
        U, s, V = _randomized_svd(A, r)
    if not (np.isfinite(s).all() and np.isfinite(U).all() and np.isfinite(V).all()):
        raise NumericError("SVD produced non-finite factors")
    rank_x = numerical_rank(s, d, m)
    U, V = fix_signs(np.ascontiguousarray(U[:, :r]), np.ascontiguousarray(V[:, :r]))
    return SvdFactors(U, s[:r].copy(), V, rank_x)


def project(factors: SvdFactors) -> np.ndarray:
    """Temporal coefficients ``S_r V_r^T``, an ``r x m`` array (row i = mode i)."""
    return factors.S[:, None] * factors.V.T


def reconstruct(U, coeffs, like: SnapshotMatrix | None = None) -> SnapshotMatrix:
    """Snapshots ``U @ coeffs``; grid and dt are copied from ``like`` if given."""
    U = np.asarray(U, dtype=np.float64)
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if U.ndim != 2 or coeffs.ndim != 2 or U.shape[1] != coeffs.shape[0]:
        raise ArgumentError(
            f"U has {U.shape[1] if U.ndim == 2 else '?'} columns but coeffs has "
            f"{coeffs.shape[0] if coeffs.ndim == 2 else '?'} rows"
        )
    # computed transposed so the product lands directly in snapshot-major order
    values = (coeffs.T @ U.T).T
    if like is None:
        return SnapshotMatrix(values)
    if like.shape != values.shape:
        raise ArgumentError(f"reconstruction shape {values.shape} differs from {like.shape}")
    return like.replace(values)


def tsvd_denoise(X: SnapshotMatrix, r: int, factors: SvdFactors | None = None) -> SnapshotMatrix:
    """Rank-``r`` truncated-SVD reconstruction ``U_r S_r V_r^T``.

    ``factors`` may carry a precomputed decomposition of ``X`` with at least
    ``r`` triplets.
    """
    if factors is None:
        factors = compute_svd(X, r)
    else:
        factors = factors.truncate(r)
    return reconstruct(factors.U, project(factors), like=X)
