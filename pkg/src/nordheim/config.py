"""Run configuration, snapshots, CSV output, and the run manifest.

The configuration is one JSON file with nested sections and explicit units in
field names; nothing is read from the environment, so a run is reproducible
from the file alone.  Snapshots store the grid spec together with the
realized nodes/weights so a loader can verify the rebuild bit-for-bit.
Floats are serialized with repr (shortest round-trip), which makes every
output byte-stable across repeated runs.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .collision import Distribution, DistributionKind
from .diagnostics import DetectorParams
from .errors import ConfigurationError
from .grid import EnergyGrid, GridSpec, build_grid
from .initial import InitialSpec
from .integrator import DiagnosticsConfig, StepControl

SNAPSHOT_VERSION = 1
SCHEMES = ("strong_f", "weak_g")


@dataclass(frozen=True)
class OutputConfig:
    directory: str
    csv_name: str = "timeseries.csv"
    manifest_name: str = "manifest.json"
    snapshot_prefix: str = "snapshot"


@dataclass(frozen=True)
class RunConfig:
    grid: GridSpec
    initial: InitialSpec
    scheme: str
    control: StepControl
    detector: DetectorParams
    output: OutputConfig
    mass_below_radii: tuple[float, ...] = ()
    snapshot_times: tuple[float, ...] = ()
    diagnostics_every: int = 1
    entropy_every: int = 1
    workers: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.diagnostics_every < 1 or self.entropy_every < 1:
            raise ConfigurationError("diagnostics cadences must be >= 1")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")

    def kind(self) -> DistributionKind:
        return DistributionKind.MASS if self.scheme == "weak_g" else DistributionKind.OCCUPATION

    def diagnostics(self) -> DiagnosticsConfig:
        return DiagnosticsConfig(
            mass_below_radii=self.mass_below_radii,
            detector=self.detector,
            every=self.diagnostics_every,
            entropy_every=self.entropy_every,
            snapshot_times=self.snapshot_times,
        )


def _get(section: dict, key: str, where: str, default=None, required: bool = False):
    if key in section:
        return section[key]
    if required:
        raise ConfigurationError(f"missing field {key!r} in section {where!r}")
    return default


def config_from_dict(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigurationError("configuration root must be an object")
    gsec = _get(raw, "grid", "root", required=True)
    grid_spec = GridSpec(
        n_nodes=int(_get(gsec, "n_nodes", "grid", required=True)),
        cutoff=float(_get(gsec, "cutoff_energy", "grid", required=True)),
        clustering=float(_get(gsec, "clustering_exponent", "grid", default=2.0)),
    )
    isec = _get(raw, "initial", "root", required=True)
    initial = InitialSpec(
        family=str(_get(isec, "family", "initial", required=True)),
        params=dict(_get(isec, "params", "initial", default={})),
        criticality_ratio=(
            float(isec["criticality_ratio"])
            if isec.get("criticality_ratio") is not None
            else None
        ),
    )
    ssec = _get(raw, "stepping", "root", required=True)
    blowup = _get(ssec, "blowup_linf_threshold", "stepping", default=None)
    control = StepControl(
        dt=float(_get(ssec, "dt_initial", "stepping", required=True)),
        stop_time=float(_get(ssec, "stop_time", "stepping", required=True)),
        dt_min=float(_get(ssec, "dt_min", "stepping", default=1e-9)),
        dt_max=float(_get(ssec, "dt_max", "stepping", default=1.0)),
        safety=float(_get(ssec, "safety", "stepping", default=0.9)),
        max_relative_change=float(_get(ssec, "max_relative_change", "stepping", default=0.1)),
        blowup_linf_threshold=float(blowup) if blowup is not None else None,
    )
    dsec = _get(raw, "detectors", "root", default={})
    L = grid_spec.cutoff
    detector = DetectorParams(
        nu=float(_get(dsec, "nu", "detectors", default=1.0)),
        k_star=float(_get(dsec, "k_star", "detectors", default=1.0)),
        theta_star=float(_get(dsec, "theta_star", "detectors", default=0.5)),
        rho0=float(_get(dsec, "rho0_energy", "detectors", default=0.1 * L)),
        rho1=float(_get(dsec, "rho1_energy", "detectors", default=0.05 * L)),
        k_low=float(_get(dsec, "k_low", "detectors", default=1.0)),
    )
    osec = _get(raw, "output", "root", required=True)
    output = OutputConfig(
        directory=str(_get(osec, "directory", "output", required=True)),
        csv_name=str(_get(osec, "csv_name", "output", default="timeseries.csv")),
        manifest_name=str(_get(osec, "manifest_name", "output", default="manifest.json")),
        snapshot_prefix=str(_get(osec, "snapshot_prefix", "output", default="snapshot")),
    )
    diag = _get(raw, "diagnostics", "root", default={})
    return RunConfig(
        grid=grid_spec,
        initial=initial,
        scheme=str(_get(raw, "scheme", "root", required=True)),
        control=control,
        detector=detector,
        output=output,
        mass_below_radii=tuple(float(r) for r in _get(diag, "mass_below_radii", "diagnostics", default=())),
        snapshot_times=tuple(float(t) for t in _get(diag, "snapshot_times", "diagnostics", default=())),
        diagnostics_every=int(_get(diag, "every", "diagnostics", default=1)),
        entropy_every=int(_get(diag, "entropy_every", "diagnostics", default=1)),
        workers=int(_get(raw, "workers", "root", default=1)),
        seed=int(_get(raw, "seed", "root", default=0)),
    )


def config_to_dict(cfg: RunConfig) -> dict:
    return {
        "grid": {
            "n_nodes": cfg.grid.n_nodes,
            "cutoff_energy": cfg.grid.cutoff,
            "clustering_exponent": cfg.grid.clustering,
        },
        "initial": {
            "family": cfg.initial.family,
            "params": dict(cfg.initial.params),
            "criticality_ratio": cfg.initial.criticality_ratio,
        },
        "scheme": cfg.scheme,
        "stepping": {
            "dt_initial": cfg.control.dt,
            "stop_time": cfg.control.stop_time,
            "dt_min": cfg.control.dt_min,
            "dt_max": cfg.control.dt_max,
            "safety": cfg.control.safety,
            "max_relative_change": cfg.control.max_relative_change,
            "blowup_linf_threshold": cfg.control.blowup_linf_threshold,
        },
        "detectors": {
            "nu": cfg.detector.nu,
            "k_star": cfg.detector.k_star,
            "theta_star": cfg.detector.theta_star,
            "rho0_energy": cfg.detector.rho0,
            "rho1_energy": cfg.detector.rho1,
            "k_low": cfg.detector.k_low,
        },
        "diagnostics": {
            "mass_below_radii": list(cfg.mass_below_radii),
            "snapshot_times": list(cfg.snapshot_times),
            "every": cfg.diagnostics_every,
            "entropy_every": cfg.entropy_every,
        },
        "output": {
            "directory": cfg.output.directory,
            "csv_name": cfg.output.csv_name,
            "manifest_name": cfg.output.manifest_name,
            "snapshot_prefix": cfg.output.snapshot_prefix,
        },
        "workers": cfg.workers,
        "seed": cfg.seed,
    }


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read configuration {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"configuration {path!r} is not valid JSON at line {exc.lineno}: {exc.msg}"
        ) from exc
    return config_from_dict(raw)


def save_config(cfg: RunConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")


def snapshot_to_dict(dist: Distribution) -> dict:
    return {
        "version": SNAPSHOT_VERSION,
        "kind": dist.kind.value,
        "condensate": float(dist.condensate),
        "values": [float(v) for v in dist.values],
        "grid": {
            "n_nodes": dist.grid.spec.n_nodes,
            "cutoff_energy": dist.grid.spec.cutoff,
            "clustering_exponent": dist.grid.spec.clustering,
            "nodes": [float(x) for x in dist.grid.nodes],
            "weights": [float(w) for w in dist.grid.weights],
        },
    }


def snapshot_from_dict(raw: dict) -> Distribution:
    if raw.get("version") != SNAPSHOT_VERSION:
        raise ConfigurationError(
            f"unsupported snapshot version {raw.get('version')!r}"
        )
    gsec = raw["grid"]
    spec = GridSpec(
        n_nodes=int(gsec["n_nodes"]),
        cutoff=float(gsec["cutoff_energy"]),
        clustering=float(gsec["clustering_exponent"]),
    )
    kind = DistributionKind(raw["kind"])
    grid = build_grid(spec, has_condensate_slot=kind is DistributionKind.MASS)
    stored_nodes = np.asarray(gsec["nodes"], dtype=np.float64)
    if stored_nodes.shape != grid.nodes.shape or not np.allclose(
        stored_nodes, grid.nodes, rtol=1e-14, atol=0.0
    ):
        raise ConfigurationError("snapshot nodes do not match the rebuilt grid")
    return Distribution(
        kind=kind,
        values=np.asarray(raw["values"], dtype=np.float64),
        grid=grid,
        condensate=float(raw.get("condensate", 0.0)),
    )


def save_snapshot(dist: Distribution, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(snapshot_to_dict(dist), fh, sort_keys=True)
        fh.write("\n")


def load_snapshot(path: str) -> Distribution:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read snapshot {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"snapshot {path!r} is not valid JSON: {exc.msg}") from exc
    return snapshot_from_dict(raw)


def write_csv(path: str, columns: list[str], rows: list[list[float]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def file_sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(
    cfg: RunConfig,
    outputs: list[str],
    accepted_steps: int,
    csv_rows: int,
    status_kind: str,
    status_time: float,
    clipped_mass_total: float,
    conservation_residual: float,
) -> str:
    out_dir = cfg.output.directory
    manifest = {
        "config": config_to_dict(cfg),
        "accepted_steps": accepted_steps,
        "csv_rows": csv_rows,
        "status": {"kind": status_kind, "time": status_time},
        "clipped_mass_total": clipped_mass_total,
        "conservation_residual": conservation_residual,
        "outputs": {
            os.path.basename(p): file_sha256(p) for p in sorted(outputs)
        },
    }
    path = os.path.join(out_dir, cfg.output.manifest_name)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
