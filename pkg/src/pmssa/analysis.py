"""Error metrics, probes, spectra and parameter sweeps."""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal as sps

from .errors import ArgumentError, PreconditionError
from .mssa import pmssa_decompose
from .snapshot import SnapshotMatrix, _atomic_write, _chunk_cols
from .svd import compute_svd, project
from .synth import X_RANGE, Y_RANGE

DEFAULT_DOMAIN = (X_RANGE, Y_RANGE)
METHODS = ("tsvd", "pmssa")


def _values(X) -> np.ndarray:
    return X.values if isinstance(X, SnapshotMatrix) else np.asarray(X, dtype=np.float64)


def fmt(value: float) -> str:
    return format(float(value), ".17g")


def _frobenius(fn, d: int, m: int) -> float:
    # column blocks summed in a fixed order, so the value is reproducible
    total = 0.0
    step = _chunk_cols(d)
    for j0 in range(0, m, step):
        block = fn(slice(j0, min(j0 + step, m)))
        total += float(np.einsum("ij,ij->", block, block))
    return math.sqrt(total)


def relative_error(X_rec, X0) -> float:
    """``||X_rec - X0||_F / ||X0||_F``."""
    A, B = _values(X_rec), _values(X0)
    if A.shape != B.shape:
        raise ArgumentError(f"shape mismatch {A.shape} vs {B.shape}")
    d, m = B.shape
    denom = _frobenius(lambda s: B[:, s], d, m)
    if denom == 0:
        raise ArgumentError("reference matrix has zero norm")
    return _frobenius(lambda s: A[:, s] - B[:, s], d, m) / denom


def lowrank_relative_error(U, coeffs, X0) -> float:
    """``relative_error(U @ coeffs, X0)`` without forming the full product."""
    U = np.asarray(U)
    coeffs = np.asarray(coeffs)
    B = _values(X0)
    if U.shape[0] != B.shape[0] or coeffs.shape[1] != B.shape[1] or U.shape[1] != coeffs.shape[0]:
        raise ArgumentError(f"factor shapes {U.shape} x {coeffs.shape} do not match {B.shape}")
    d, m = B.shape
    denom = _frobenius(lambda s: B[:, s], d, m)
    if denom == 0:
        raise ArgumentError("reference matrix has zero norm")
    return _frobenius(lambda s: U @ coeffs[:, s] - B[:, s], d, m) / denom


# ------------------------------------------------------------------ probes


def probe_index(matrix: SnapshotMatrix, x: float, y: float, domain=DEFAULT_DOMAIN) -> int:
    """Pixel nearest to ``(x, y)``; half-way positions round up on both axes."""
    if matrix.grid is None:
        raise PreconditionError("probing needs a matrix with grid geometry")
    (x0, x1), (y0, y1) = domain
    if not (x0 <= x <= x1 and y0 <= y <= y1):
        raise ArgumentError(f"probe ({x}, {y}) outside domain {domain}")
    nx, ny = matrix.grid.nx, matrix.grid.ny
    col = math.floor((x - x0) / (x1 - x0) * (nx - 1) + 0.5) if nx > 1 else 0
    row = math.floor((y - y0) / (y1 - y0) * (ny - 1) + 0.5) if ny > 1 else 0
    return matrix.grid.index(row, col)


def probe_signal(matrix: SnapshotMatrix, x: float, y: float, domain=DEFAULT_DOMAIN) -> np.ndarray:
    """Time series (length ``m``) of the pixel nearest to ``(x, y)``."""
    return np.array(matrix.values[probe_index(matrix, x, y, domain)])


# ---------------------------------------------------------------- spectra


@dataclass(frozen=True, eq=False)
class Spectrum:
    """One-sided Welch power spectrum.

    ``power`` is amplitude-calibrated: a bin-centred sinusoid of amplitude
    ``A`` shows a peak of ``A**2 / 2``.  ``enbw_bins`` is the window's
    equivalent noise bandwidth, so ``power.sum() / enbw_bins`` is the total
    signal power.
    """

    frequencies: np.ndarray
    power: np.ndarray
    segment_length: int
    overlap: float
    window: str = "hann"
    enbw_bins: float = 1.5

    @property
    def resolution(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0]) if len(self.frequencies) > 1 else 0.0

    def total_power(self) -> float:
        return float(self.power.sum() / self.enbw_bins)

    def bin_of(self, f: float) -> int:
        return int(np.argmin(np.abs(self.frequencies - f)))

    def peak_power(self, f: float, search_bins: int = 1) -> float:
        """Largest power within ``search_bins`` of the bin nearest ``f``."""
        k = self.bin_of(f)
        lo, hi = max(k - search_bins, 0), min(k + search_bins + 1, len(self.power))
        return float(self.power[lo:hi].max())

    def noise_floor(self, peak_freqs=(), exclude_bins: int = 3) -> float:
        """Median power over bins farther than ``exclude_bins`` from every peak."""
        keep = np.ones(len(self.power), dtype=bool)
        idx = np.arange(len(self.power))
        for f in peak_freqs:
            keep &= np.abs(idx - self.bin_of(f)) > exclude_bins
        if not keep.any():
            raise ArgumentError("every bin is excluded from the noise-floor estimate")
        return float(np.median(self.power[keep]))

    def to_csv(self, path) -> None:
        def write(fh):
            fh.write(b"frequency,power\n")
            for f, p in zip(self.frequencies, self.power):
                fh.write(f"{fmt(f)},{fmt(p)}\n".encode("ascii"))

        _atomic_write(Path(path), write)


def default_segment(m: int) -> int:
    """1024 samples for long records (m >= 10^4), else 256, capped at ``m``."""
    return min(1024 if m >= 10_000 else 256, m)


def periodogram(x, dt: float, segment_length: int | None = None, overlap: float = 0.5) -> Spectrum:
    """Welch-averaged Hann-window power spectrum of a real series.

    Segments are not detrended, so the mean shows up in the DC bin.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise ArgumentError("signal must be a 1-D series with at least 2 samples")
    if not dt > 0:
        raise ArgumentError(f"dt must be positive, got {dt}")
    nseg = default_segment(x.size) if segment_length is None else int(segment_length)
    if not 2 <= nseg <= x.size:
        raise ArgumentError(f"segment_length={nseg} must lie in 2..{x.size}")
    if not 0 <= overlap < 1:
        raise ArgumentError(f"overlap must lie in [0, 1), got {overlap}")
    noverlap = int(overlap * nseg)
    freqs, power = sps.welch(
        x, fs=1.0 / dt, window="hann", nperseg=nseg, noverlap=noverlap,
        detrend=False, scaling="spectrum", return_onesided=True,
    )
    w = sps.get_window("hann", nseg)
    enbw = nseg * float(np.sum(w**2)) / float(np.sum(w)) ** 2
    return Spectrum(freqs, power, nseg, float(overlap), "hann", enbw)


# ---------------------------------------------------------- coefficients


def phase_export(coeffs, i: int, j: int) -> np.ndarray:
    """``m x 2`` array pairing coefficient series ``i`` and ``j`` (1-based)."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    r = coeffs.shape[0]
    for k in (i, j):
        if not 1 <= k <= r:
            raise ArgumentError(f"mode index {k} outside 1..{r}")
    return np.column_stack([coeffs[i - 1], coeffs[j - 1]])


def write_phase_csv(path, table: np.ndarray, modes: tuple[int, int]) -> None:
    def write(fh):
        fh.write(f"step,mode_{modes[0]},mode_{modes[1]}\n".encode("ascii"))
        for t, (a, b) in enumerate(table):
            fh.write(f"{t},{fmt(a)},{fmt(b)}\n".encode("ascii"))

    _atomic_write(Path(path), write)


def read_phase_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return np.array([[float(a), float(b)] for _, a, b in rows[1:]])


def roughness(coeffs, i: int, j: int) -> float:
    """Mean squared second difference of the ``(i, j)`` coefficient trajectory."""
    pair = phase_export(coeffs, i, j)
    second = np.diff(pair, n=2, axis=0)
    return float(np.mean(np.sum(second**2, axis=1)))


# ------------------------------------------------------------------ sweeps


@dataclass(frozen=True)
class ReportRow:
    method: str
    sigma: float
    r: int
    L: int | None
    relative_error: float
    wall_time_s: float

    @property
    def key(self):
        return (self.method, self.sigma, self.r, -1 if self.L is None else self.L)


@dataclass
class DenoiseReport:
    rows: list[ReportRow] = field(default_factory=list)
    svd_time_s: float = 0.0

    HEADER = ("method", "sigma", "r", "L", "relative_error", "wall_time_s")

    def add(self, row: ReportRow) -> None:
        if row.relative_error < 0:
            raise ArgumentError("relative error must be non-negative")
        if any(existing.key == row.key for existing in self.rows):
            raise ArgumentError(f"duplicate report row {row.key}")
        self.rows.append(row)
        self.rows.sort(key=lambda rw: rw.key)

    def lookup(self, method: str, r: int, L: int | None = None) -> ReportRow:
        for row in self.rows:
            if row.method == method and row.r == r and (method == "tsvd" or row.L == L):
                return row
        raise KeyError((method, r, L))

    def to_csv(self, path) -> None:
        def write(fh):
            fh.write((",".join(self.HEADER) + "\n").encode("ascii"))
            for row in self.rows:
                cells = [
                    row.method, fmt(row.sigma), str(row.r),
                    "" if row.L is None else str(row.L),
                    fmt(row.relative_error), fmt(row.wall_time_s),
                ]
                fh.write((",".join(cells) + "\n").encode("ascii"))

        _atomic_write(Path(path), write)

    @classmethod
    def from_csv(cls, path) -> DenoiseReport:
        report = cls()
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            for rec in reader:
                report.add(ReportRow(
                    rec["method"], float(rec["sigma"]), int(rec["r"]),
                    int(rec["L"]) if rec["L"] else None,
                    float(rec["relative_error"]), float(rec["wall_time_s"]),
                ))
        return report


def _parse_methods(methods) -> list[str]:
    if isinstance(methods, str):
        methods = methods.split(",")
    chosen = {mth.strip() for mth in methods}
    unknown = chosen - set(METHODS)
    if unknown or not chosen:
        raise ArgumentError(f"unknown methods {sorted(unknown)}; choose from {METHODS}")
    return [mth for mth in METHODS if mth in chosen]


def rank_sweep(
    clean: SnapshotMatrix,
    noisy: SnapshotMatrix,
    ranks,
    windows=(),
    methods=METHODS,
    sigma: float | None = None,
) -> DenoiseReport:
    """Relative error of every ``(method, r, L)`` combination against ``clean``.

    One SVD of ``noisy`` at the largest rank serves every row.  ``sigma`` is
    only a label; when omitted it is the sample standard deviation of
    ``noisy - clean``.  Window lengths are ignored for TSVD.
    """
    if clean.shape != noisy.shape:
        raise ArgumentError(f"shape mismatch {clean.shape} vs {noisy.shape}")
    ranks = sorted({int(r) for r in ranks})
    windows = sorted({int(L) for L in windows})
    methods = _parse_methods(methods)
    if not ranks:
        raise ArgumentError("ranks must not be empty")
    if "pmssa" in methods and not windows:
        raise ArgumentError("pmssa needs at least one window length")
    if sigma is None:
        sigma = float(np.std(noisy.values - clean.values))

    report = DenoiseReport()
    t0 = time.perf_counter()
    factors = compute_svd(noisy, max(ranks))
    report.svd_time_s = time.perf_counter() - t0
    for r in ranks:
        f_r = factors.truncate(r)
        if "tsvd" in methods:
            t0 = time.perf_counter()
            err = lowrank_relative_error(f_r.U, project(f_r), clean)
            report.add(ReportRow("tsvd", sigma, r, None, err, time.perf_counter() - t0))
        if "pmssa" in methods:
            for L in windows:
                t0 = time.perf_counter()
                res = pmssa_decompose(noisy, r, L, factors=f_r)
                err = lowrank_relative_error(f_r.U, res.denoised, clean)
                report.add(ReportRow("pmssa", sigma, r, L, err, time.perf_counter() - t0))
    return report
