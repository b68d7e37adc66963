"""Command-line interface.

    ptkr <subcommand> --config <path> --out <dir> [--t-max N] [--override key=value ...]

Subcommands: evolve, otoc, phase-scan, lambda-c, fit, plot.  Every subcommand
writes CSV tables plus a rendered figure into the output directory.  Exit
codes: 0 success, 2 config error, 3 numerical abort (grid overflow and
kin), 4 I/O error.
"""

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, apply_overrides, config_digest, parse_config
from .errors import (
    BracketError,
    ConfigError,
    FitDataError,
    GridOverflowError,
    PtkrError,
    TableSchemaError,
    ZeroStateError,
)
from .fits import (
    FitResult,
    fit_ballistic_rate,
    fit_localization_profile,
    fit_power_law,
    time_avg,
)
from .otoc import (
    backward_pass,
    build_forward_trajectory,
    otoc_series_from_trajectory,
    reversal_ratio_series,
)
from .phase import evolve_observables, find_lambda_c, scan_diagram
from .rotor import WaveState, to_angle
from .tables import ResultTable, from_arrays, read_table, write_table
from . import plots


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ptkr",
        description="PT-symmetric kicked rotor: OTOC protocol, phase scans, scaling fits.",
    )
    parser.add_argument("--version", action="version", version=f"ptkr {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    specs = {
        "evolve": "Evolve the packet and tabulate per-kick observables.",
        "otoc": "Run the forward/backward OTOC protocol over sampled times.",
        "phase-scan": "Classify a (K, lambda) grid by norm growth.",
        "lambda-c": "Bisect the PT-breaking threshold in lambda.",
        "fit": "Fit a scaling law to columns of an existing table.",
        "plot": "Render a figure from an existing table.",
    }
    for name, help_text in specs.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, type=Path, help="Run configuration file.")
        p.add_argument("--out", type=Path, default=None,
                       help="Output directory (default: output.directory from the config).")
        p.add_argument("--t-max", type=int, default=None, help="Override schedule.t_max.")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="Override any config key (repeatable).")
    return parser


def _load_config(args) -> RunConfig:
    try:
        text = args.config.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    cfg = parse_config(text)
    overrides = list(args.override)
    if args.t_max is not None:
        overrides.append(f"schedule.t_max={args.t_max}")
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    return cfg


def _meta(cfg: RunConfig, subcommand: str) -> dict:
    return {
        "tool": "ptkr",
        "version": __version__,
        "subcommand": subcommand,
        "config_sha256": config_digest(cfg),
        "created": datetime.now(timezone.utc).isoformat(),
    }


def _emit(path: Path, table: ResultTable) -> None:
    write_table(path, table)
    print(f"wrote {path}")


def _emit_figure(fig, outdir: Path, stem: str, cfg: RunConfig) -> None:
    for path in plots.save_figure(fig, outdir, stem, cfg.output_formats):
        print(f"wrote {path}")


def _density_table(basis, amplitudes, meta) -> ResultTable:
    state = WaveState(basis, np.asarray(amplitudes), "momentum")
    dens = np.abs(state.amplitudes) ** 2
    dens = dens / dens.sum()
    ang = to_angle(state)
    ang_dens = np.abs(ang.amplitudes) ** 2
    ang_dens = ang_dens / ang_dens.sum()
    return from_arrays(
        ("n", "p", "momentum_density", "theta", "angle_density"),
        (basis.momentum_indices(), basis.momentum_values(), dens,
         basis.angle_values(), ang_dens),
        meta,
    )


def cmd_evolve(cfg: RunConfig, outdir: Path) -> None:
    rec = evolve_observables(
        cfg.model_params(), cfg.basis(), cfg.sigma, cfg.t_max, cfg.snapshot_times
    )
    meta = _meta(cfg, "evolve")
    _emit(outdir / "evolve.csv", from_arrays(
        ("t", "log_norm", "p_mean", "p2", "p4"),
        (rec.times, rec.log_norm, rec.p_mean, rec.p2, rec.p4),
        meta,
    ))
    for t, amp in sorted(rec.snapshots.items()):
        _emit(outdir / f"density_t{t}.csv", _density_table(cfg.basis(), amp, meta))
    _emit_figure(plots.evolve_figure(rec.times, rec.log_norm, rec.p2), outdir, "evolve", cfg)


def cmd_otoc(cfg: RunConfig, outdir: Path) -> None:
    traj = build_forward_trajectory(
        cfg.model_params(), cfg.basis(), cfg.sigma, cfg.t_max, cfg.storage_stride
    )
    series = otoc_series_from_trajectory(traj, cfg.sample_times())
    meta = _meta(cfg, "otoc")
    if series.failures:
        meta = dict(meta)
        meta["failed_points"] = "; ".join(f"t={t}: {reason}" for t, reason in series.failures)
    arrays = series.arrays()
    _emit(outdir / "otoc.csv", from_arrays(tuple(arrays), tuple(arrays.values()), meta))

    fwd_times = np.arange(traj.t_max + 1)
    _emit(outdir / "forward.csv", from_arrays(
        ("t", "log_norm", "p_mean", "p2", "p4"),
        (fwd_times, traj.psi.log_norm(), traj.psi.p_mean, traj.psi.p2, traj.psi.p4),
        meta,
    ))

    passes = {}
    for t_ref in {cfg.otoc_trace_time, cfg.otoc_density_time} - {None}:
        if not 0 <= t_ref <= traj.t_max:
            raise ConfigError(f"reference time {t_ref} outside [0, {traj.t_max}]")
        passes[t_ref] = backward_pass(traj, t_ref)

    if cfg.otoc_trace_time is not None:
        t_ref = cfg.otoc_trace_time
        rrs = reversal_ratio_series(traj, t_ref, passes[t_ref])
        _emit(outdir / f"trace_t{t_ref}.csv", from_arrays(
            ("t_label", "t_doubled", "p2_forward", "p_forward", "p2_backward",
             "p_backward", "ratio"),
            (rrs.times, rrs.times_doubled, rrs.p2_forward,
             traj.psi.p_mean[: t_ref + 1], rrs.p2_backward,
             passes[t_ref].p_mean[0][::-1], rrs.ratio),
            meta,
        ))
        _emit_figure(
            plots.trace_figure(rrs.times, rrs.p2_forward, rrs.p2_backward, rrs.ratio, t_ref),
            outdir, f"trace_t{t_ref}", cfg,
        )

    if cfg.otoc_density_time is not None:
        t_ref = cfg.otoc_density_time
        _emit(outdir / f"density_forward_t{t_ref}.csv",
              _density_table(cfg.basis(), traj.state_pair_at(t_ref)[0], meta))
        _emit(outdir / f"density_reversed_t{t_ref}.csv",
              _density_table(cfg.basis(), passes[t_ref].psi_r, meta))

    if series.points:
        _emit_figure(plots.otoc_figure(arrays), outdir, "otoc", cfg)


def cmd_phase_scan(cfg: RunConfig, outdir: Path) -> None:
    if not cfg.lambda_values:
        raise ConfigError("phase-scan requires phase.lambda_values", key="phase.lambda_values")
    kick_values = cfg.kick_values or (cfg.kick_strength,)
    diag = scan_diagram(
        kick_values, cfg.lambda_values, cfg.hbar_eff, cfg.t_max,
        n_modes=cfg.n_modes, sigma=cfg.sigma, mu_threshold=cfg.mu_threshold,
        r2_threshold=cfg.r2_threshold, window_fraction=cfg.window_fraction,
    )
    rows_k, rows_l, rows_mu, rows_r2, rows_mln, rows_label = [], [], [], [], [], []
    for i, k in enumerate(diag.kick_values):
        for j, lam in enumerate(diag.lambda_values):
            rows_k.append(float(k))
            rows_l.append(float(lam))
            rows_mu.append(diag.mu[i, j])
            rows_r2.append(diag.r_squared[i, j])
            rows_mln.append(diag.mean_log_norm[i, j])
            rows_label.append(diag.labels[i, j])
    meta = _meta(cfg, "phase-scan")
    meta["mu_threshold"] = format(diag.mu_threshold, ".17g")
    _emit(outdir / "phase_scan.csv", from_arrays(
        ("kick_strength", "lambda", "mu", "r_squared", "mean_log_norm", "label"),
        (np.array(rows_k), np.array(rows_l), np.array(rows_mu), np.array(rows_r2),
         np.array(rows_mln), rows_label),
        meta,
    ))
    fig = plots.heatmap_figure(
        diag.kick_values, diag.lambda_values, diag.mu,
        "kick strength $K$", r"non-Hermiticity $\lambda$", r"growth rate $\mu$",
    )
    _emit_figure(fig, outdir, "phase_scan", cfg)


def cmd_lambda_c(cfg: RunConfig, outdir: Path) -> None:
    res = find_lambda_c(
        cfg.kick_strength, cfg.hbar_eff, cfg.lambdac_lo, cfg.lambdac_hi, cfg.lambdac_tol,
        n_modes=cfg.n_modes, sigma=cfg.sigma, t_max=cfg.t_max,
        t_max_cap=cfg.lambdac_t_max_cap, max_n_modes=cfg.lambdac_max_n_modes,
        mu_threshold=cfg.mu_threshold, r2_threshold=cfg.r2_threshold,
    )
    meta = _meta(cfg, "lambda-c")
    _emit(outdir / "lambda_c.csv", from_arrays(
        ("kick_strength", "hbar_eff", "lambda_c", "bracket_lo", "bracket_hi",
         "tol", "n_evaluations"),
        (np.array([cfg.kick_strength]), np.array([cfg.hbar_eff]),
         np.array([res.lambda_c]), np.array([res.bracket[0]]),
         np.array([res.bracket[1]]), np.array([cfg.lambdac_tol]),
         np.array([len(res.evaluations)], dtype=int)),
        meta,
    ))
    lam, mu, r2, label, tmaxes, nmodes = zip(*res.evaluations)
    _emit(outdir / "lambda_c_evaluations.csv", from_arrays(
        ("lambda", "mu", "r_squared", "label", "t_max", "n_modes"),
        (np.array(lam), np.array(mu), np.array(r2), list(label),
         np.array(tmaxes, dtype=int), np.array(nmodes, dtype=int)),
        meta,
    ))
    order = np.argsort(lam)
    fig = plots.line_figure(
        np.array(lam)[order], {"mu": np.array(mu)[order]},
        r"non-Hermiticity $\lambda$", r"growth rate $\mu$", logx=True,
        title=f"$\\lambda_c \\approx {res.lambda_c:.3g}$",
    )
    _emit_figure(fig, outdir, "lambda_c", cfg)


_FIT_DISPATCH = {
    "power": lambda x, y, w: fit_power_law(x, y, window=w),
    "localization": lambda x, y, w: fit_localization_profile(x, y),
    "ballistic-quadratic": lambda x, y, w: fit_ballistic_rate(x, y, "quadratic", window=w),
    "ballistic-linear": lambda x, y, w: fit_ballistic_rate(x, y, "linear", window=w),
}


def cmd_fit(cfg: RunConfig, outdir: Path) -> None:
    if not cfg.fit_input:
        raise ConfigError("fit requires fit.input", key="fit.input")
    table = read_table(cfg.fit_input)
    x = np.asarray(table.column(cfg.fit_x_column), dtype=float)
    y = np.asarray(table.column(cfg.fit_y_column), dtype=float)
    window = cfg.fit_window()
    if cfg.fit_kind == "time-avg":
        avg = time_avg(x, y, window)
        w = window if window is not None else (float(x.min()), float(x.max()))
        result = FitResult(value=avg, prefactor=float("nan"), r_squared=float("nan"),
                           window=w, kind="time-avg")
    else:
        result = _FIT_DISPATCH[cfg.fit_kind](x, y, window)
    meta = _meta(cfg, "fit")
    meta["input"] = cfg.fit_input
    _emit(outdir / "fit.csv", from_arrays(
        ("kind", "x_column", "y_column", "value", "prefactor", "r_squared",
         "window_lo", "window_hi"),
        ([result.kind], [cfg.fit_x_column], [cfg.fit_y_column],
         np.array([result.value]), np.array([result.prefactor]),
         np.array([result.r_squared]), np.array([result.window[0]]),
         np.array([result.window[1]])),
        meta,
    ))
    fig = _fit_figure(cfg, x, y, result)
    _emit_figure(fig, outdir, "fit", cfg)


def _fit_figure(cfg: RunConfig, x, y, result: FitResult):
    kind = result.kind
    if kind == "power" or kind == "k-scaling":
        fig = plots.line_figure(x, {cfg.fit_y_column: y}, cfg.fit_x_column,
                                cfg.fit_y_column, logx=True, logy=True)
        ax = fig.axes[0]
        grid = np.linspace(result.window[0], result.window[1], 50)
        grid = grid[grid > 0]
        ax.plot(grid, result.prefactor * grid**result.value, "r--", linewidth=1.0,
                label=f"slope {result.value:.3g}")
        ax.legend(fontsize=8)
    elif kind == "localization":
        fig = plots.line_figure(x, {cfg.fit_y_column: y}, cfg.fit_x_column,
                                cfg.fit_y_column, logy=True)
        ax = fig.axes[0]
        grid = np.linspace(x.min(), x.max(), 200)
        ax.plot(grid, result.prefactor * np.exp(-np.abs(grid) / result.value), "r--",
                linewidth=1.0, label=f"L = {result.value:.3g}")
        ax.legend(fontsize=8)
    elif kind.startswith("ballistic"):
        fig = plots.line_figure(x, {cfg.fit_y_column: y}, cfg.fit_x_column, cfg.fit_y_column)
        ax = fig.axes[0]
        grid = np.linspace(result.window[0], result.window[1], 100)
        if kind.endswith("quadratic"):
            ax.plot(grid, result.value**2 * grid**2 + result.prefactor, "r--", linewidth=1.0,
                    label=f"rate {result.value:.3g}")
        else:
            ax.plot(grid, result.value * grid + result.prefactor, "r--", linewidth=1.0,
                    label=f"rate {result.value:.3g}")
        ax.legend(fontsize=8)
    else:  # time-avg
        fig = plots.line_figure(x, {cfg.fit_y_column: y}, cfg.fit_x_column, cfg.fit_y_column)
        fig.axes[0].axhline(result.value, color="red", linestyle="--", linewidth=1.0)
    return fig


def cmd_plot(cfg: RunConfig, outdir: Path) -> None:
    if not cfg.plot_input:
        raise ConfigError("plot requires plot.input", key="plot.input")
    table = read_table(cfg.plot_input)
    if cfg.plot_kind == "heatmap":
        if not cfg.plot_y_columns:
            raise ConfigError("heatmap needs plot.y_columns", key="plot.y_columns")
        x = np.asarray(table.column(cfg.plot_x_column), dtype=float)
        y = np.asarray(table.column(cfg.plot_y_columns[0]), dtype=float)
        z = np.asarray(table.column(cfg.plot_value_column), dtype=float)
        xu = np.unique(x)
        yu = np.unique(y)
        grid = np.full((xu.size, yu.size), np.nan)
        for xi, yi, zi in zip(x, y, z):
            grid[np.searchsorted(xu, xi), np.searchsorted(yu, yi)] = zi
        fig = plots.heatmap_figure(xu, yu, grid, cfg.plot_x_column,
                                   cfg.plot_y_columns[0], cfg.plot_value_column)
    else:
        x = np.asarray(table.column(cfg.plot_x_column), dtype=float)
        series = {name: np.asarray(table.column(name), dtype=float)
                  for name in cfg.plot_y_columns}
        log = cfg.plot_kind == "loglog"
        fig = plots.line_figure(x, series, cfg.plot_x_column, "value",
                                logx=log, logy=log)
    _emit_figure(fig, outdir, cfg.plot_output, cfg)


_COMMANDS = {
    "evolve": cmd_evolve,
    "otoc": cmd_otoc,
    "phase-scan": cmd_phase_scan,
    "lambda-c": cmd_lambda_c,
    "fit": cmd_fit,
    "plot": cmd_plot,
}


def _error_record(outdir: Path | None, exc: Exception, code: int) -> None:
    record = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(f"error: {record['error']}: {record['message']}", file=sys.stderr)
    if outdir is not None:
        try:
            outdir.mkdir(parents=True, exist_ok=True)
            (outdir / "error.json").write_text(json.dumps(record, indent=2) + "\n")
        except OSError:
            pass


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    outdir = args.out
    try:
        cfg = _load_config(args)
        outdir = args.out if args.out is not None else Path(cfg.output_directory)
        outdir.mkdir(parents=True, exist_ok=True)
        _COMMANDS[args.subcommand](cfg, outdir)
        return 0
    except ConfigError as exc:
        _error_record(outdir, exc, 2)
        return 2
    except (GridOverflowError, ZeroStateError, BracketError, FitDataError) as exc:
        _error_record(outdir, exc, 3)
        return 3
    except (TableSchemaError, OSError) as exc:
        _error_record(outdir, exc, 4)
        return 4
    except PtkrError as exc:
        _error_record(outdir, exc, 3)
        return 3


if __name__ == "__main__":
    sys.exit(main())
