"""Command-line interface.

Exit codes: 0 success, 2 invalid arguments, 3 I/O or file-format problems,
4 numerical failures.  Outputs are written only after every computation has
succeeded, each through a temporary file renamed into place.
"""
from __future__ import annotations

import argparse
import contextlib
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis
from .errors import (
    ArgumentError,
    FormatError,
    NumericError,
    PreconditionError,
    ValidationError,
)
from .mssa import default_window, pmssa_decompose
from .snapshot import SnapshotMatrix, _atomic_write, load_matrix, save_matrix
from .svd import compute_svd, project, reconstruct
from .synth import WakeConfig, generate_dataset

EXIT_OK, EXIT_ARGS, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ArgumentError(message)


def _int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pmssa", description="TSVD and projected-MSSA denoising of snapshot data")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic wake dataset")
    p.add_argument("--out", required=True, type=Path, help="noisy dataset (binary)")
    p.add_argument("--clean-out", type=Path, help="clean dataset (binary)")
    p.add_argument("--config", type=Path, help="key = value config file; flags override it")
    p.add_argument("--nx", type=int)
    p.add_argument("--ny", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--f0", type=float)
    p.add_argument("--harmonics", type=int)
    p.add_argument("--antisymmetric", action="store_true", default=None)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("denoise", help="denoise a dataset with TSVD or PMSSA")
    p.add_argument("--in", dest="inp", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--method", choices=analysis.METHODS, default="pmssa")
    p.add_argument("--rank", required=True, type=int)
    p.add_argument("--window", type=int, help="window length L (default round(3*sqrt(m)))")
    p.add_argument("--window-rule", choices=("sqrt", "half"), default="sqrt",
                   help="default window rule when --window is absent")
    p.add_argument("--rank-mssa", type=int, help="trajectory rank (default --rank)")
    p.add_argument("--clean", type=Path, help="clean reference for the error summary")
    p.add_argument("--subtract-mean", action="store_true",
                   help="remove each pixel's temporal mean before factoring")
    p.add_argument("--coeffs-out", type=Path, help="CSV of the coefficients used (m rows, r columns)")
    p.add_argument("--factors-out", help="stem for <stem>.U/.S/.V.pmx")

    p = sub.add_parser("sweep", help="relative error over ranks and windows")
    p.add_argument("--in", dest="inp", required=True, type=Path)
    p.add_argument("--clean", required=True, type=Path)
    p.add_argument("--ranks", required=True, type=_int_list)
    p.add_argument("--windows", type=_int_list, default=[30, 90, 500])
    p.add_argument("--methods", default="tsvd,pmssa")
    p.add_argument("--sigma", type=float, help="noise label (default: std of noisy - clean)")
    p.add_argument("--report", required=True, type=Path)

    for name, helptext in (("probe", "time series at one pixel"), ("spectrum", "Welch spectrum at one pixel")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--in", dest="inp", required=True, type=Path)
        p.add_argument("--x", required=True, type=float)
        p.add_argument("--y", required=True, type=float)
        p.add_argument("--out", required=True, type=Path)
        if name == "spectrum":
            p.add_argument("--segment", type=int)
            p.add_argument("--overlap", type=float, default=0.5)
            p.add_argument("--dt", type=float, help="sample interval if the file has none")

    p = sub.add_parser("phase", help="export a pair of coefficient series")
    p.add_argument("--coeffs", required=True, type=Path)
    p.add_argument("--modes", required=True, type=_int_list)
    p.add_argument("--out", required=True, type=Path)
    return parser


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ArgumentError(message)


def validate(args) -> None:
    """Flag checks that need no data; run before anything is computed."""
    cmd = args.command
    if cmd == "synth":
        _require(args.sigma >= 0, "--sigma must be >= 0")
        _require(0 <= args.seed < 2**64, "--seed must be an unsigned 64-bit integer")
        for flag in ("nx", "ny", "m"):
            value = getattr(args, flag)
            _require(value is None or value >= 2, f"--{flag} must be >= 2")
        _require(args.harmonics is None or args.harmonics >= 0, "--harmonics must be >= 0")
        _require(args.dt is None or args.dt > 0, "--dt must be > 0")
        _require(args.f0 is None or args.f0 > 0, "--f0 must be > 0")
    elif cmd == "denoise":
        _require(args.rank >= 1, f"--rank must be >= 1, got {args.rank}")
        _require(args.window is None or args.window >= 2, f"--window must be >= 2, got {args.window}")
        _require(args.rank_mssa is None or args.rank_mssa >= 1, "--rank-mssa must be >= 1")
    elif cmd == "sweep":
        _require(bool(args.ranks) and min(args.ranks) >= 1, "--ranks must be positive integers")
        _require(all(L >= 2 for L in args.windows), "--windows must be integers >= 2")
        analysis._parse_methods(args.methods)
    elif cmd == "spectrum":
        _require(0 <= args.overlap < 1, "--overlap must lie in [0, 1)")
        _require(args.segment is None or args.segment >= 2, "--segment must be >= 2")
        _require(args.dt is None or args.dt > 0, "--dt must be > 0")
    elif cmd == "phase":
        _require(len(args.modes) == 2 and min(args.modes) >= 1, "--modes must be two indices I,J >= 1")


def _synth(args) -> str:
    config = WakeConfig.from_text(args.config.read_text()) if args.config else WakeConfig()
    overrides = {
        key: value
        for key, value in (
            ("nx", args.nx), ("ny", args.ny), ("m", args.m), ("dt", args.dt), ("f0", args.f0),
            ("n_harmonics", args.harmonics), ("antisymmetric", args.antisymmetric),
        )
        if value is not None
    }
    if "n_harmonics" in overrides and config.amplitudes is not None:
        overrides["amplitudes"] = None
    config = config.with_options(**overrides)
    clean, noisy = generate_dataset(config, args.sigma, args.seed)
    save_matrix(noisy, args.out)
    if args.clean_out:
        save_matrix(clean, args.clean_out)
    return f"synth d={noisy.d} m={noisy.m} sigma={args.sigma} seed={args.seed}"


def _denoise(args) -> str:
    X = load_matrix(args.inp)
    clean = load_matrix(args.clean) if args.clean else None
    if clean is not None and clean.shape != X.shape:
        raise ArgumentError(f"--clean shape {clean.shape} differs from --in shape {X.shape}")
    _require(args.rank <= min(X.shape), f"--rank must be <= min(d, m) = {min(X.shape)}")

    mean = X.values.mean(axis=1, keepdims=True) if args.subtract_mean else None
    work = X.replace(X.values - mean) if mean is not None else X
    L = None
    if args.method == "pmssa":
        L = args.window if args.window is not None else default_window(X.m, args.window_rule)
        _require(L <= X.m - 1, f"--window must be <= m - 1 = {X.m - 1}, got {L}")
        r_mssa = args.rank if args.rank_mssa is None else args.rank_mssa
        _require(r_mssa <= min(args.rank * L, X.m - L + 1),
                 f"--rank-mssa must be <= min(r*L, m-L+1) = {min(args.rank * L, X.m - L + 1)}")
        res = pmssa_decompose(work, args.rank, L, r_mssa)
        factors, coeffs = res.factors, res.denoised
    else:
        factors = compute_svd(work, args.rank)
        coeffs = project(factors)
    out = reconstruct(factors.U, coeffs)
    if mean is not None:
        out = SnapshotMatrix(out.values + mean)
    out = X.replace(out.values)

    save_matrix(out, args.out)
    if args.coeffs_out:
        save_matrix(SnapshotMatrix(coeffs), args.coeffs_out, format="csv")
    if args.factors_out:
        factors.save(args.factors_out)
    summary = f"method={args.method} r={args.rank}"
    if L is not None:
        summary += f" L={L} r_mssa={r_mssa}"
    if clean is not None:
        summary += f" relative_error={analysis.fmt(analysis.relative_error(out, clean))}"
    return summary


def _sweep(args) -> str:
    noisy = load_matrix(args.inp)
    clean = load_matrix(args.clean)
    report = analysis.rank_sweep(clean, noisy, args.ranks, args.windows, args.methods, sigma=args.sigma)
    report.to_csv(args.report)
    best = min(report.rows, key=lambda rw: rw.relative_error)
    return (f"sweep rows={len(report.rows)} best method={best.method} r={best.r} "
            f"L={best.L if best.L is not None else '-'} relative_error={analysis.fmt(best.relative_error)}")


def _probe(args) -> str:
    X = load_matrix(args.inp)
    series = analysis.probe_signal(X, args.x, args.y)
    dt = X.dt

    def write(fh):
        fh.write(b"step,time,value\n")
        for j, v in enumerate(series):
            fh.write(f"{j},{analysis.fmt(j * dt)},{analysis.fmt(v)}\n".encode("ascii"))

    _atomic_write(args.out, write)
    return f"probe x={args.x} y={args.y} pixel={analysis.probe_index(X, args.x, args.y)} m={X.m}"


def _spectrum(args) -> str:
    X = load_matrix(args.inp)
    dt = args.dt if args.dt is not None else X.dt
    _require(dt > 0, "--dt is required when the input file has no sample interval")
    series = analysis.probe_signal(X, args.x, args.y)
    spec = analysis.periodogram(series, dt, args.segment, args.overlap)
    spec.to_csv(args.out)
    # skip DC and its Hann-window sidelobe
    k = int(np.argmax(spec.power[2:])) + 2 if len(spec.power) > 2 else 0
    return (f"spectrum segment={spec.segment_length} bins={len(spec.power)} "
            f"peak_frequency={analysis.fmt(spec.frequencies[k])}")


def _phase(args) -> str:
    coeffs = load_matrix(args.coeffs, format="csv").values
    i, j = args.modes
    table = analysis.phase_export(coeffs, i, j)
    analysis.write_phase_csv(args.out, table, (i, j))
    return f"phase modes={i},{j} rows={len(table)}"


COMMANDS = {
    "synth": _synth, "denoise": _denoise, "sweep": _sweep,
    "probe": _probe, "spectrum": _spectrum, "phase": _phase,
}


def _thread_limit():
    raw = os.environ.get("PMSSA_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise ArgumentError(f"PMSSA_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ArgumentError("PMSSA_THREADS must be >= 0")
    if n == 0:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        validate(args)
        with _thread_limit():
            summary = COMMANDS[args.command](args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (ArgumentError, PreconditionError) as exc:
        print(f"pmssa: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except (OSError, FormatError, ValidationError) as exc:
        print(f"pmssa: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericError, np.linalg.LinAlgError) as exc:
        print(f"pmssa: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(summary)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
