"""Denoising of high-dimensional time-series images by truncated SVD and
projected multivariate singular spectrum analysis (PMSSA)."""
from .analysis import (
    DenoiseReport,
    ReportRow,
    Spectrum,
    lowrank_relative_error,
    periodogram,
    phase_export,
    probe_signal,
    rank_sweep,
    relative_error,
    roughness,
)
from .errors import (
    ArgumentError,
    FormatError,
    NumericError,
    PmssaError,
    PreconditionError,
    TruncationError,
    ValidationError,
)
from .mssa import (
    PmssaResult,
    TrajectoryMatrix,
    default_window,
    diagonal_average,
    embed,
    pmssa_decompose,
    pmssa_denoise,
    truncate_trajectory,
)
from .snapshot import (
    GridSpec,
    SnapshotMatrix,
    add_gaussian_noise,
    bin_spatial,
    highpass_filter,
    load_matrix,
    save_matrix,
)
from .svd import SvdFactors, compute_svd, project, reconstruct, tsvd_denoise
from .synth import WakeConfig, generate_dataset, generate_wake

__version__ = "0.1.0"
