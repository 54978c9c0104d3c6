"""Snapshot-matrix data model, file formats and preprocessing.

A snapshot matrix holds ``d`` spatial values for each of ``m`` time
instants.  Values are stored as a ``d x m`` float64 array in Fortran order so
that each snapshot (column) is contiguous in memory, which is also the order
of the binary payload on disk.

Binary layout (little-endian)::

    b"PMSSAMAT"        8 bytes magic
    u32 version        = 1
    u32 flags          = 0
    u64 d, u64 m
    u64 nx, u64 ny     (0, 0 when there is no grid)
    f64 dt             seconds per snapshot, 0 = unknown
    f64[d*m] values    snapshot-major

CSV layout: ``m`` lines of ``d`` comma-separated values, line ``j`` is
snapshot ``j``, no header.

Noise is drawn from NumPy's ``PCG64`` bit generator seeded with the given
64-bit seed, using ``Generator.standard_normal`` (ziggurat).  Draws fill the
matrix in snapshot-major order, one snapshot after another.
"""
from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ArgumentError,
    FormatError,
    PreconditionError,
    TruncationError,
    ValidationError,
)

MAGIC = b"PMSSAMAT"
VERSION = 1
HEADER = struct.Struct("<8sIIQQQQd")
CSV_MAX_D = 10_000
# snapshots per chunk when streaming noise or payloads
_CHUNK_BYTES = 64 * 2**20


@dataclass(frozen=True)
class GridSpec:
    """Row-major pixel grid: pixel index = row * nx + col."""

    nx: int
    ny: int

    def __post_init__(self):
        if int(self.nx) < 1 or int(self.ny) < 1:
            raise ValidationError(f"grid dimensions must be positive, got {self.nx}x{self.ny}")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))

    @property
    def size(self) -> int:
        return self.nx * self.ny

    def index(self, row: int, col: int) -> int:
        if not (0 <= row < self.ny and 0 <= col < self.nx):
            raise ArgumentError(f"pixel ({row}, {col}) outside {self.ny}x{self.nx} grid")
        return row * self.nx + col

    def position(self, index: int) -> tuple[int, int]:
        if not 0 <= index < self.size:
            raise ArgumentError(f"pixel index {index} outside grid of {self.size}")
        return divmod(index, self.nx)


@dataclass(frozen=True, eq=False)
class SnapshotMatrix:
    """Immutable ``d x m`` matrix, one column per snapshot.

    Parameters
    ----------
    values : array_like, shape (d, m)
        Field values.  Converted to a read-only float64 Fortran-ordered array.
    grid : GridSpec, optional
        Pixel geometry; ``grid.nx * grid.ny`` must equal ``d``.
    dt : float
        Seconds (or convective time units) between snapshots, 0 if unknown.
    """

    values: np.ndarray
    grid: GridSpec | None = None
    dt: float = 0.0

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64, order="F")
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValidationError(f"values must be a non-empty 2-D array, got shape {arr.shape}")
        # a view, so freezing it never touches the caller's array
        arr = arr.view()
        if not np.isfinite(arr).all():
            raise ValidationError("values contain NaN or Inf")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        if self.grid is not None and self.grid.size != arr.shape[0]:
            raise ValidationError(
                f"grid {self.grid.nx}x{self.grid.ny} does not match d={arr.shape[0]}"
            )
        dt = float(self.dt)
        if not np.isfinite(dt) or dt < 0:
            raise ValidationError(f"dt must be finite and non-negative, got {self.dt}")
        object.__setattr__(self, "dt", dt)

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def replace(self, values) -> SnapshotMatrix:
        """New matrix with the same grid and dt but different values."""
        return SnapshotMatrix(values, grid=self.grid, dt=self.dt)

    def snapshot(self, j: int) -> np.ndarray:
        return self.values[:, j]

    def image(self, j: int) -> np.ndarray:
        """Snapshot ``j`` as an ``ny x nx`` array."""
        if self.grid is None:
            raise PreconditionError("matrix has no grid")
        return self.values[:, j].reshape(self.grid.ny, self.grid.nx)

    def __eq__(self, other):
        if not isinstance(other, SnapshotMatrix):
            return NotImplemented
        return (
            self.grid == other.grid
            and self.dt == other.dt
            and self.shape == other.shape
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


# --------------------------------------------------------------------- I/O


def _atomic_write(path: Path, write) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def _chunk_cols(d: int) -> int:
    return max(1, _CHUNK_BYTES // (8 * d))


def save_matrix(matrix: SnapshotMatrix, path, format: str = "binary") -> None:
    """Write ``matrix`` to ``path``; the file appears only once fully written."""
    path = Path(path)
    if format == "binary":
        grid = matrix.grid
        header = HEADER.pack(
            MAGIC, VERSION, 0, matrix.d, matrix.m,
            grid.nx if grid else 0, grid.ny if grid else 0, matrix.dt,
        )

        def write(fh):
            fh.write(header)
            step = _chunk_cols(matrix.d)
            for j0 in range(0, matrix.m, step):
                block = matrix.values[:, j0:j0 + step]
                fh.write(np.ascontiguousarray(block.T, dtype="<f8").tobytes())

    elif format == "csv":
        if matrix.d > CSV_MAX_D:
            raise ArgumentError(f"CSV limited to d <= {CSV_MAX_D}, got d={matrix.d}")

        def write(fh):
            for j in range(matrix.m):
                line = ",".join(format_float(v) for v in matrix.values[:, j])
                fh.write(line.encode("ascii") + b"\n")

    else:
        raise ArgumentError(f"unknown format {format!r}")
    _atomic_write(path, write)


def format_float(value: float) -> str:
    """Shortest text that round-trips a float64 (at most 17 significant digits)."""
    text = repr(float(value))
    return text[:-2] if text.endswith(".0") else text


def load_matrix(path, format: str = "binary") -> SnapshotMatrix:
    path = Path(path)
    if format == "binary":
        return _load_binary(path)
    if format == "csv":
        return _load_csv(path)
    raise ArgumentError(f"unknown format {format!r}")


def _load_binary(path: Path) -> SnapshotMatrix:
    with open(path, "rb") as fh:
        head = fh.read(HEADER.size)
        if len(head) < HEADER.size:
            raise FormatError(f"{path}: header truncated ({len(head)} of {HEADER.size} bytes)")
        magic, version, flags, d, m, nx, ny, dt = HEADER.unpack(head)
        if magic != MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        if flags != 0:
            raise FormatError(f"{path}: unsupported flags {flags:#x}")
        if d < 1 or m < 1:
            raise FormatError(f"{path}: empty matrix d={d} m={m}")
        if (nx == 0) != (ny == 0) or (nx and nx * ny != d):
            raise FormatError(f"{path}: grid {nx}x{ny} inconsistent with d={d}")
        expected = d * m * 8
        actual = os.fstat(fh.fileno()).st_size - HEADER.size
        if actual != expected:
            raise TruncationError(
                f"{path}: payload has {actual} bytes, header declares {expected}"
            )
        payload = np.fromfile(fh, dtype="<f8", count=d * m)
    values = payload.astype(np.float64, copy=False).reshape(m, d).T
    grid = GridSpec(nx, ny) if nx else None
    return SnapshotMatrix(values, grid=grid, dt=dt)


def _load_csv(path: Path) -> SnapshotMatrix:
    rows = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(tok) for tok in line.split(",")])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise FormatError(f"{path}: no data")
    d = len(rows[0])
    if any(len(r) != d for r in rows):
        raise FormatError(f"{path}: rows have differing lengths")
    if d > CSV_MAX_D:
        raise ArgumentError(f"CSV limited to d <= {CSV_MAX_D}, got d={d}")
    return SnapshotMatrix(np.array(rows, dtype=np.float64).T)


# ---------------------------------------------------------- preprocessing


def bin_spatial(matrix: SnapshotMatrix, factor: int) -> SnapshotMatrix:
    """Average non-overlapping ``factor x factor`` pixel blocks in every snapshot."""
    if matrix.grid is None:
        raise PreconditionError("bin_spatial needs a matrix with grid geometry")
    factor = int(factor)
    nx, ny = matrix.grid.nx, matrix.grid.ny
    if factor < 1 or nx % factor or ny % factor:
        raise ArgumentError(f"factor {factor} must divide grid {nx}x{ny}")
    if factor == 1:
        return matrix
    cube = matrix.values.reshape(ny // factor, factor, nx // factor, factor, matrix.m)
    binned = cube.mean(axis=(1, 3)).reshape(-1, matrix.m)
    return SnapshotMatrix(binned, grid=GridSpec(nx // factor, ny // factor), dt=matrix.dt)


def highpass_filter(matrix: SnapshotMatrix, cutoff_hz: float, sample_rate_hz: float) -> SnapshotMatrix:
    """Remove every temporal Fourier component below ``cutoff_hz``, DC included.

    The filter zeroes DFT bins with ``|f| < cutoff_hz`` in each pixel's time
    series and transforms back; there is no transition band.
    """
    cutoff_hz = float(cutoff_hz)
    sample_rate_hz = float(sample_rate_hz)
    if not sample_rate_hz > 0:
        raise ArgumentError("sample_rate_hz must be positive")
    if not 0 < cutoff_hz < sample_rate_hz / 2:
        raise ArgumentError(
            f"cutoff_hz={cutoff_hz} must lie in (0, Nyquist={sample_rate_hz / 2})"
        )
    if matrix.dt > 0 and not np.isclose(1.0 / matrix.dt, sample_rate_hz, rtol=1e-9):
        raise ArgumentError(
            f"sample_rate_hz={sample_rate_hz} disagrees with matrix dt={matrix.dt}"
        )
    m = matrix.m
    spectrum = np.fft.rfft(matrix.values, axis=1)
    freqs = np.fft.rfftfreq(m, d=1.0 / sample_rate_hz)
    spectrum[:, freqs < cutoff_hz] = 0.0
    return matrix.replace(np.fft.irfft(spectrum, n=m, axis=1))


def add_gaussian_noise(matrix: SnapshotMatrix, sigma: float, seed: int) -> SnapshotMatrix:
    """Add i.i.d. ``N(0, sigma^2)`` noise to every element.

    The stream comes from ``numpy.random.Generator(PCG64(seed))`` and is
    consumed snapshot by snapshot, so the result does not depend on chunking.
    """
    sigma = float(sigma)
    if not sigma >= 0 or not np.isfinite(sigma):
        raise ArgumentError(f"sigma must be finite and non-negative, got {sigma}")
    if sigma == 0:
        return matrix
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    out = np.array(matrix.values, dtype=np.float64, order="F", copy=True)
    step = _chunk_cols(matrix.d)
    for j0 in range(0, matrix.m, step):
        j1 = min(j0 + step, matrix.m)
        noise = rng.standard_normal((j1 - j0, matrix.d))
        noise *= sigma
        out[:, j0:j1] += noise.T
    return matrix.replace(out)
