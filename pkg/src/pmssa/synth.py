"""Closed-form vortex-street-like wake fields used as clean ground truth.

The field on ``x in [0, 10]``, ``y in [-5, 5]`` is

    p(x, y, t) = mean_level + sum_k a_k g_k(y) [cos(2 pi k (x/lam - f0 t))
                                             + 0.3 cos(2 pi k x/lam) cos(2 pi k f0 t)]

for ``k = 1 .. n_harmonics + 1`` with ``g_k(y) = exp(-y^2 / w^2)``.  Every
harmonic contributes exactly two spatial/temporal mode pairs, so the clean
snapshot matrix has rank ``1 + 2 (n_harmonics + 1)`` whenever ``mean_level``
and all amplitudes are non-zero.

With ``antisymmetric=True`` the odd harmonics use the odd envelope
``(y/w) exp(-y^2/w^2)`` scaled to unit peak, giving the alternating
cross-stream sign pattern of a shedding wake; the rank is unchanged.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .errors import ArgumentError
from .snapshot import GridSpec, SnapshotMatrix, add_gaussian_noise

X_RANGE = (0.0, 10.0)
Y_RANGE = (-5.0, 5.0)
STANDING_WEIGHT = 0.3
_ODD_PEAK = math.sqrt(0.5) * math.exp(-0.5)


@dataclass(frozen=True)
class WakeConfig:
    nx: int = 101
    ny: int = 101
    m: int = 1000
    dt: float = 0.125
    f0: float = 0.125  # 15.6 periods over the default 125 time units
    n_harmonics: int = 2
    amplitudes: tuple[float, ...] | None = None  # None -> 0.5 * 4**-(k-1)
    wavelength: float = 4.0
    envelope_width: float = 2.0
    mean_level: float = -0.5
    antisymmetric: bool = False

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2 or self.m < 2:
            raise ArgumentError("nx, ny and m must all be at least 2")
        if not self.dt > 0:
            raise ArgumentError(f"dt must be positive, got {self.dt}")
        if self.n_harmonics < 0:
            raise ArgumentError("n_harmonics must be >= 0")
        if not self.f0 > 0:
            raise ArgumentError(f"f0 must be positive, got {self.f0}")
        top = self.f0 * (self.n_harmonics + 1)
        if not top < 0.5 / self.dt:
            raise ArgumentError(
                f"highest harmonic {top} is not below Nyquist {0.5 / self.dt}"
            )
        if not self.wavelength > 0 or not self.envelope_width > 0:
            raise ArgumentError("wavelength and envelope_width must be positive")
        if self.amplitudes is not None:
            amps = tuple(float(a) for a in self.amplitudes)
            if len(amps) != self.n_harmonics + 1:
                raise ArgumentError(
                    f"need {self.n_harmonics + 1} amplitudes, got {len(amps)}"
                )
            if any(a < 0 for a in amps):
                raise ArgumentError("amplitudes must be non-negative")
            object.__setattr__(self, "amplitudes", amps)

    @property
    def harmonic_amplitudes(self) -> tuple[float, ...]:
        if self.amplitudes is not None:
            return self.amplitudes
        return tuple(0.5 * 4.0 ** -(k - 1) for k in range(1, self.n_harmonics + 2))

    @property
    def harmonic_frequencies(self) -> tuple[float, ...]:
        return tuple(k * self.f0 for k in range(1, self.n_harmonics + 2))

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.nx, self.ny)

    @property
    def forced_rank(self) -> int:
        """Rank of the clean field implied by the configuration."""
        active = sum(1 for a in self.harmonic_amplitudes if a > 0)
        return int(self.mean_level != 0) + 2 * active

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """Pixel x and y coordinates, each of length ``nx * ny`` (row-major)."""
        xs = np.linspace(*X_RANGE, self.nx)
        ys = np.linspace(*Y_RANGE, self.ny)
        yy, xx = np.meshgrid(ys, xs, indexing="ij")
        return xx.ravel(), yy.ravel()

    def times(self) -> np.ndarray:
        return np.arange(self.m) * self.dt

    def with_options(self, **changes) -> WakeConfig:
        return replace(self, **changes)

    # flat "key = value" text form
    def to_text(self) -> str:
        lines = []
        for key, value in asdict(self).items():
            if value is None:
                continue
            if isinstance(value, tuple):
                value = ",".join(repr(float(v)) for v in value)
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> WakeConfig:
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ArgumentError(f"line {lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in types:
                raise ArgumentError(f"line {lineno}: unknown key {key!r}")
            kwargs[key] = _parse_value(key, value, types[key])
        return cls(**kwargs)


def _parse_value(key, value, type_name):
    try:
        if "tuple" in str(type_name):
            return tuple(float(v) for v in value.split(",") if v.strip())
        if "bool" in str(type_name):
            if value.lower() not in {"true", "false", "1", "0", "yes", "no"}:
                raise ValueError(value)
            return value.lower() in {"true", "1", "yes"}
        if "int" in str(type_name):
            return int(value)
        return float(value)
    except ValueError:
        raise ArgumentError(f"bad value for {key}: {value!r}") from None


def _envelopes(config: WakeConfig, y: np.ndarray) -> list[np.ndarray]:
    w = config.envelope_width
    even = np.exp(-(y / w) ** 2)
    if not config.antisymmetric:
        return [even] * (config.n_harmonics + 1)
    odd = (y / w) * even / _ODD_PEAK
    return [odd if k % 2 == 1 else even for k in range(1, config.n_harmonics + 2)]


def wake_factors(config: WakeConfig) -> tuple[np.ndarray, np.ndarray]:
    """Spatial (``d x q``) and temporal (``q x m``) factors whose product is the field."""
    x, y = config.coordinates()
    t = config.times()
    spatial = [np.full_like(x, config.mean_level)]
    temporal = [np.ones_like(t)]
    for k, (amp, env) in enumerate(zip(config.harmonic_amplitudes, _envelopes(config, y)), 1):
        kx = 2 * np.pi * k * x / config.wavelength
        kt = 2 * np.pi * k * config.f0 * t
        # cos(kx - kt) + 0.3 cos(kx) cos(kt) split into separable terms
        spatial += [amp * env * np.cos(kx), amp * env * np.sin(kx)]
        temporal += [(1.0 + STANDING_WEIGHT) * np.cos(kt), np.sin(kt)]
    return np.column_stack(spatial), np.vstack(temporal)


def generate_wake(config: WakeConfig = WakeConfig()) -> SnapshotMatrix:
    """Clean wake snapshots on the configured grid."""
    spatial, temporal = wake_factors(config)
    values = (temporal.T @ spatial.T).T  # lands in snapshot-major order
    return SnapshotMatrix(values, grid=config.grid, dt=config.dt)


def generate_dataset(config: WakeConfig, sigma: float, seed: int) -> tuple[SnapshotMatrix, SnapshotMatrix]:
    """``(clean, noisy)`` with ``noisy = clean + N(0, sigma^2)`` per element."""
    if not sigma >= 0:
        raise ArgumentError(f"sigma must be non-negative, got {sigma}")
    clean = generate_wake(config)
    return clean, add_gaussian_noise(clean, sigma, seed)
