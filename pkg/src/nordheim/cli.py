"""Command-line entry point.

Subcommands: run, classify, equilibrium, check, plot.  Exit codes follow the
convention 0 = success, 2 = unusable input (configuration, flags, missing
columns), 3 = runtime abort with partial outputs retained.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .collision import Distribution, DistributionKind, build_tables
from .config import (
    RunConfig,
    file_sha256,
    load_config,
    load_snapshot,
    save_snapshot,
    write_csv,
    write_manifest,
)
from .diagnostics import (
    DetectorParams,
    blowup_criterion,
    blowup_criterion_from_mass,
    condensation_criterion,
    low_mass_check,
    mass_below,
)
from .equilibrium import MomentPair, classify, invert_moments, moments_of_equilibrium, EquilibriumParams
from .errors import ConfigurationError, ContractError, DomainError, NumericalError
from .initial import build_initial
from .integrator import run as run_integrator
from .plotting import line_plot_svg


def _print_json(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def cmd_run(args: argparse.Namespace) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigurationError as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return 2
    from .grid import build_grid

    try:
        grid = build_grid(cfg.grid, has_condensate_slot=cfg.scheme == "weak_g")
        initial = build_initial(cfg.initial, grid, cfg.kind())
    except (ConfigurationError, ContractError, DomainError) as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return 2
    grid = initial.grid  # from_snapshot may carry its own grid
    tables = build_tables(grid)
    os.makedirs(cfg.output.directory, exist_ok=True)

    record = run_integrator(initial, tables, cfg.control, cfg.diagnostics())

    outputs = []
    csv_path = os.path.join(cfg.output.directory, cfg.output.csv_name)
    write_csv(csv_path, record.columns, record.rows)
    outputs.append(csv_path)
    for t_snap, dist in record.snapshots:
        path = os.path.join(
            cfg.output.directory, f"{cfg.output.snapshot_prefix}_t{t_snap:g}.json"
        )
        save_snapshot(dist, path)
        outputs.append(path)
    if record.final_state is not None:
        path = os.path.join(cfg.output.directory, f"{cfg.output.snapshot_prefix}_final.json")
        save_snapshot(record.final_state, path)
        outputs.append(path)
    status = record.status
    write_manifest(
        cfg,
        outputs,
        accepted_steps=record.accepted_steps,
        csv_rows=len(record.rows),
        status_kind=status.kind,
        status_time=status.time,
        clipped_mass_total=record.clipped_mass_total,
        conservation_residual=record.conservation_residual,
    )
    if status.kind == "reached_non_finite":
        sys.stderr.write(f"run aborted on non-finite state at t = {status.time:g}\n")
        return 3
    return 0


def _moments_from_args(args: argparse.Namespace) -> MomentPair:
    if args.particle_density <= 0.0 or args.energy_density <= 0.0:
        raise DomainError("particle and energy densities must be positive")
    return MomentPair(M=args.particle_density, E=args.energy_density)


def cmd_classify(args: argparse.Namespace) -> int:
    try:
        moments = _moments_from_args(args)
        result = classify(moments, tol=args.tol)
        params = invert_moments(moments)
    except (DomainError, NumericalError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    _print_json(
        {
            "class": result.label.value,
            "ratio": result.ratio,
            "equilibrium": {"alpha": params.alpha, "beta": params.beta, "m0": params.m0},
        }
    )
    return 0


def cmd_equilibrium(args: argparse.Namespace) -> int:
    try:
        if args.particle_density is not None or args.energy_density is not None:
            if args.particle_density is None or args.energy_density is None:
                raise DomainError("both --particle-density and --energy-density are needed")
            moments = _moments_from_args(args)
            params = invert_moments(moments)
            back = moments_of_equilibrium(params)
            _print_json(
                {
                    "alpha": params.alpha,
                    "beta": params.beta,
                    "m0": params.m0,
                    "moments": {"M": back.M, "E": back.E},
                }
            )
            return 0
        if args.beta is None:
            raise DomainError("provide either (M, E) flags or (alpha, beta, m0) flags")
        params = EquilibriumParams(alpha=args.alpha, beta=args.beta, m0=args.m0)
        mom = moments_of_equilibrium(params)
        _print_json({"M": mom.M, "E": mom.E})
        return 0
    except (DomainError, NumericalError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


def _detector_from_args(args: argparse.Namespace, cutoff: float) -> DetectorParams:
    return DetectorParams(
        nu=args.nu,
        k_star=args.k_star,
        theta_star=args.theta_star,
        rho0=args.rho0 if args.rho0 is not None else 0.1 * cutoff,
        rho1=args.rho1 if args.rho1 is not None else 0.05 * cutoff,
        k_low=args.k_low,
    )


def cmd_check(args: argparse.Namespace) -> int:
    try:
        dist = load_snapshot(args.snapshot)
        detector = _detector_from_args(args, dist.grid.cutoff)
    except (ConfigurationError, ContractError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    if dist.kind is DistributionKind.MASS:
        g = dist
        blow = blowup_criterion_from_mass(g, detector)
    else:
        from .collision import to_mass_density

        g = to_mass_density(dist)
        blow = blowup_criterion(dist, detector)
    cond = condensation_criterion(g, detector)
    low = low_mass_check(g, detector.k_low, detector.rho1)
    _print_json(
        {
            "parameters": {
                "nu": detector.nu,
                "k_star": detector.k_star,
                "theta_star": detector.theta_star,
                "rho0": detector.rho0,
                "rho1": detector.rho1,
                "k_low": detector.k_low,
            },
            "blowup": {
                "satisfied": blow.satisfied,
                "best_rho": blow.best_rho,
                "value": blow.inner_min,
            },
            "condensation": {
                "satisfied": cond.satisfied,
                "best_rho": cond.best_rho,
                "value": cond.inner_min,
            },
            "low_mass": {"holds": low.holds, "worst_R": low.worst_R, "margin": low.margin},
            "condensate": g.condensate,
            "moments": {"M": g.moments().M, "E": g.moments().E},
        }
    )
    return 0


def _read_csv(path: str) -> tuple[list[str], np.ndarray]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header:
            raise ConfigurationError(f"time series {path!r} is empty")
        columns = header.split(",")
        data = [
            [float(v) for v in line.strip().split(",")]
            for line in fh
            if line.strip()
        ]
    if not data:
        raise ConfigurationError(f"time series {path!r} has no rows")
    return columns, np.asarray(data)


_SERIES_PANELS = {
    "linf": ("linf", "sup of f", True),
    "entropy": ("S", "entropy", False),
    "dissipation": ("D", "entropy dissipation", False),
    "condensate": ("n0", "condensate mass", False),
    "moments": ("M", "densities", False),
}


def cmd_plot(args: argparse.Namespace) -> int:
    csv_path = os.path.join(args.run_dir, args.csv_name)
    try:
        columns, data = _read_csv(csv_path)
    except (OSError, ValueError, ConfigurationError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2

    def col(name: str) -> np.ndarray:
        if name not in columns:
            raise ConfigurationError(f"column {name!r} missing from {csv_path!r}")
        return data[:, columns.index(name)]

    wanted = args.panels or list(_SERIES_PANELS) + ["mass_below", "snapshots"]
    written: list[str] = []
    try:
        t = col("t")
        for panel in wanted:
            if panel in _SERIES_PANELS:
                column, label, logy = _SERIES_PANELS[panel]
                series = [(column, col(column))]
                if panel == "moments":
                    series.append(("E", col("E")))
                svg = line_plot_svg(
                    t, series, f"time series: {label}", "t", label,
                    log_y=logy and bool(np.any(col(column) > 0.0)),
                )
                written.append(_write_svg(args.run_dir, f"series_{panel}.svg", svg))
            elif panel == "mass_below":
                names = [c for c in columns if c.startswith("mass_below_")]
                if names:
                    series = [(c.removeprefix("mass_below_"), col(c)) for c in names]
                    svg = line_plot_svg(
                        t, series, "mass below R", "t", "mass", log_y=False
                    )
                    written.append(_write_svg(args.run_dir, "series_mass_below.svg", svg))
            elif panel == "snapshots":
                for fname in sorted(os.listdir(args.run_dir)):
                    if not (fname.endswith(".json") and "snapshot" in fname):
                        continue
                    dist = load_snapshot(os.path.join(args.run_dir, fname))
                    f_vals = dist.occupation_values()
                    svg = line_plot_svg(
                        dist.grid.nodes,
                        [("f", f_vals)],
                        f"occupation density: {fname}",
                        "energy",
                        "f",
                        log_x=args.log_log,
                        log_y=args.log_log and bool(np.any(f_vals > 0.0)),
                    )
                    written.append(
                        _write_svg(args.run_dir, fname.replace(".json", ".svg"), svg)
                    )
            else:
                raise ConfigurationError(f"unknown panel {panel!r}")
    except (ConfigurationError, ContractError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    for path in written:
        sys.stdout.write(path + "\n")
    return 0


def _write_svg(run_dir: str, name: str, svg: str) -> str:
    path = os.path.join(run_dir, name)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
    return path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nordheim",
        description="Isotropic bosonic Nordheim equation: runs, equilibria, detectors, plots.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a configured simulation")
    p_run.add_argument("--config", required=True, help="path to the run configuration JSON")
    p_run.set_defaults(func=cmd_run)

    p_cls = sub.add_parser("classify", help="place (M, E) against the critical curve")
    p_cls.add_argument("--particle-density", type=float, required=True)
    p_cls.add_argument("--energy-density", type=float, required=True)
    p_cls.add_argument("--tol", type=float, default=1e-6)
    p_cls.set_defaults(func=cmd_classify)

    p_eq = sub.add_parser("equilibrium", help="invert moments or evaluate equilibrium moments")
    p_eq.add_argument("--particle-density", type=float)
    p_eq.add_argument("--energy-density", type=float)
    p_eq.add_argument("--alpha", type=float, default=0.0)
    p_eq.add_argument("--beta", type=float)
    p_eq.add_argument("--m0", type=float, default=0.0)
    p_eq.set_defaults(func=cmd_equilibrium)

    p_chk = sub.add_parser("check", help="evaluate the detectors on a snapshot")
    p_chk.add_argument("--snapshot", required=True)
    p_chk.add_argument("--nu", type=float, default=1.0)
    p_chk.add_argument("--k-star", type=float, default=1.0)
    p_chk.add_argument("--theta-star", type=float, default=0.5)
    p_chk.add_argument("--rho0", type=float, default=None)
    p_chk.add_argument("--rho1", type=float, default=None)
    p_chk.add_argument("--k-low", type=float, default=1.0)
    p_chk.set_defaults(func=cmd_check)

    p_plot = sub.add_parser("plot", help="emit SVG panels for a finished run")
    p_plot.add_argument("--run-dir", required=True)
    p_plot.add_argument("--csv-name", default="timeseries.csv")
    p_plot.add_argument("--panels", nargs="*", default=None)
    p_plot.add_argument("--log-log", action="store_true")
    p_plot.set_defaults(func=cmd_plot)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
