"""Named initial-datum families realized on a grid.

Families are specified in the run configuration:

* ``bose_einstein``     params alpha, beta, m0 (m0 is placed in the first cell)
* ``gaussian_bump``     params amplitude, center, width
* ``power_bump``        params amplitude, rho (f = amplitude on [0, rho])
* ``constant``          params value
* ``from_snapshot``     params path

An optional ``criticality_ratio`` rescales the amplitude so that the grid
moments satisfy M = ratio * M_c(E) exactly: both moments are linear in the
amplitude while M_c scales like E**(3/5), so the required factor is
(ratio * M_c(E) / M)**(5/2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .collision import Distribution, DistributionKind, to_mass_density
from .equilibrium import bose_density, critical_mass
from .errors import ConfigurationError
from .grid import EnergyGrid

FAMILIES = ("bose_einstein", "gaussian_bump", "power_bump", "constant", "from_snapshot")


@dataclass(frozen=True)
class InitialSpec:
    family: str
    params: dict = field(default_factory=dict)
    criticality_ratio: float | None = None

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ConfigurationError(
                f"unknown initial-datum family {self.family!r}; expected one of {FAMILIES}"
            )
        if self.criticality_ratio is not None and self.criticality_ratio <= 0.0:
            raise ConfigurationError("criticality_ratio must be positive")


def _require(params: dict, *names: str) -> list[float]:
    out = []
    for name in names:
        if name not in params:
            raise ConfigurationError(f"initial-datum family is missing field {name!r}")
        out.append(float(params[name]))
    return out


def _occupation_values(spec: InitialSpec, grid: EnergyGrid) -> tuple[np.ndarray, float]:
    """Nodal f values plus extra mass to add to the first cell."""
    eps = grid.nodes
    if spec.family == "bose_einstein":
        alpha, beta, m0 = _require(spec.params, "alpha", "beta", "m0")
        if m0 < 0.0:
            raise ConfigurationError("m0 must be nonnegative")
        return np.asarray(bose_density(eps, alpha, beta)), m0
    if spec.family == "gaussian_bump":
        amplitude, center, width = _require(spec.params, "amplitude", "center", "width")
        if amplitude < 0.0 or width <= 0.0:
            raise ConfigurationError("gaussian bump needs amplitude >= 0 and width > 0")
        return amplitude * np.exp(-(((eps - center) / width) ** 2)), 0.0
    if spec.family == "power_bump":
        amplitude, rho = _require(spec.params, "amplitude", "rho")
        if amplitude < 0.0 or rho <= 0.0:
            raise ConfigurationError("power bump needs amplitude >= 0 and rho > 0")
        return np.where(eps <= rho, amplitude, 0.0), 0.0
    if spec.family == "constant":
        (value,) = _require(spec.params, "value")
        if value < 0.0:
            raise ConfigurationError("constant value must be nonnegative")
        return np.full_like(eps, value), 0.0
    raise ConfigurationError(f"family {spec.family!r} has no nodal realization")


def build_initial(spec: InitialSpec, grid: EnergyGrid, kind: DistributionKind) -> Distribution:
    """Realize the named family on ``grid`` in the requested representation."""
    if spec.family == "from_snapshot":
        from .config import load_snapshot

        (path,) = (spec.params.get("path"),)
        if not path:
            raise ConfigurationError("from_snapshot needs a 'path' field")
        dist = load_snapshot(path)
        if dist.kind is not kind:
            if kind is DistributionKind.MASS:
                dist = to_mass_density(dist)
            else:
                from .collision import to_occupation

                dist = to_occupation(dist)
        return dist

    values, first_cell_mass = _occupation_values(spec, grid)
    if spec.criticality_ratio is not None:
        f_dist = Distribution(kind=DistributionKind.OCCUPATION, values=values, grid=grid)
        mom = f_dist.moments()
        if mom.M <= 0.0:
            raise ConfigurationError("cannot rescale a zero datum to a criticality ratio")
        scale = (spec.criticality_ratio * critical_mass(mom.E) / mom.M) ** 2.5
        values = values * scale

    dist = Distribution(kind=DistributionKind.OCCUPATION, values=values, grid=grid)
    if kind is DistributionKind.MASS:
        dist = to_mass_density(dist)
        if first_cell_mass > 0.0:
            g = dist.values.copy()
            g[0] += first_cell_mass / grid.weights[0]
            dist = Distribution(
                kind=DistributionKind.MASS, values=g, grid=dist.grid, condensate=0.0
            )
    elif first_cell_mass > 0.0:
        from .collision import FOUR_PI_ROOT2

        f = dist.values.copy()
        f[0] += first_cell_mass / (grid.weights[0] * FOUR_PI_ROOT2 * np.sqrt(grid.nodes[0]))
        dist = Distribution(kind=DistributionKind.OCCUPATION, values=f, grid=grid)
    return dist
