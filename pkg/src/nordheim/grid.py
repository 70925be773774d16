"""Energy discretization of [0, L] with positive quadrature weights.

The grid is a graded cell partition: cell edges b_k = L * (k/n)**p, nodes at
cell midpoints, weights equal to cell widths (midpoint rule).  Clustering
exponent p > 1 concentrates cells near eps = 0, where condensation dynamics
and the R**(3/2) low-energy diagnostics live.  An optional condensate slot at
eps = 0 (a point mass, separate from the continuum nodes) is flagged here and
carried by Distribution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ContractError, DomainError

WEIGHT_SUM_RTOL = 1e-12


@dataclass(frozen=True)
class GridSpec:
    """Build recipe for an energy grid."""

    n_nodes: int
    cutoff: float
    clustering: float = 2.0

    def validate(self) -> None:
        if self.n_nodes < 8:
            raise ConfigurationError(f"n_nodes must be >= 8, got {self.n_nodes}")
        if not np.isfinite(self.cutoff) or self.cutoff <= 0.0:
            raise ConfigurationError(f"cutoff must be positive, got {self.cutoff}")
        if not np.isfinite(self.clustering) or self.clustering <= 0.0:
            raise ConfigurationError(f"clustering must be positive, got {self.clustering}")


@dataclass(frozen=True)
class EnergyGrid:
    """Immutable energy discretization.

    nodes are strictly increasing cell midpoints (all > 0), weights are the
    cell widths (all > 0, summing to the cutoff), boundaries are the n+1 cell
    edges with boundaries[0] = 0 and boundaries[-1] = cutoff.
    """

    nodes: np.ndarray
    weights: np.ndarray
    boundaries: np.ndarray
    cutoff: float
    spec: GridSpec
    has_condensate_slot: bool = False

    def __post_init__(self) -> None:
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)
        self.boundaries.setflags(write=False)

    @property
    def n(self) -> int:
        return self.nodes.size

    def with_condensate_slot(self) -> "EnergyGrid":
        return EnergyGrid(
            nodes=self.nodes,
            weights=self.weights,
            boundaries=self.boundaries,
            cutoff=self.cutoff,
            spec=self.spec,
            has_condensate_slot=True,
        )

    def validate(self) -> None:
        if self.nodes.ndim != 1 or self.weights.shape != self.nodes.shape:
            raise ConfigurationError("nodes/weights must be 1-d arrays of equal length")
        if self.nodes[0] <= 0.0 or np.any(np.diff(self.nodes) <= 0.0):
            raise ConfigurationError("nodes must be strictly increasing and start above 0")
        if np.any(self.weights <= 0.0):
            raise ConfigurationError("all quadrature weights must be positive")
        wsum = float(np.sum(self.weights))
        if abs(wsum - self.cutoff) > WEIGHT_SUM_RTOL * self.cutoff:
            raise ConfigurationError(
                f"weights sum to {wsum!r}, expected cutoff {self.cutoff!r}"
            )


def build_grid(spec: GridSpec, has_condensate_slot: bool = False) -> EnergyGrid:
    """Build the graded midpoint grid described by ``spec``."""
    spec.validate()
    n, L, p = spec.n_nodes, float(spec.cutoff), float(spec.clustering)
    k = np.arange(n + 1, dtype=np.float64)
    boundaries = L * (k / n) ** p
    boundaries[0] = 0.0
    boundaries[-1] = L
    nodes = 0.5 * (boundaries[:-1] + boundaries[1:])
    weights = np.diff(boundaries)
    grid = EnergyGrid(
        nodes=nodes,
        weights=weights,
        boundaries=boundaries,
        cutoff=L,
        spec=spec,
        has_condensate_slot=has_condensate_slot,
    )
    grid.validate()
    return grid


def quadrature(grid: EnergyGrid, values: np.ndarray) -> float:
    """Midpoint-rule integral sum(w_i * values_i) over [0, L]."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape != grid.nodes.shape:
        raise ContractError(
            f"values length {values.shape} does not match node count {grid.nodes.shape}"
        )
    return float(np.sum(grid.weights * values))


def interpolate(grid: EnergyGrid, values: np.ndarray, eps) -> float | np.ndarray:
    """Piecewise-linear interpolant of nodal values, clamped at the ends.

    Exact at nodes; constant extension between 0 and the first node and
    between the last node and the cutoff.  eps outside [0, L] is a domain
    error.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.shape != grid.nodes.shape:
        raise ContractError(
            f"values length {values.shape} does not match node count {grid.nodes.shape}"
        )
    eps_arr = np.asarray(eps, dtype=np.float64)
    if np.any(eps_arr < 0.0) or np.any(eps_arr > grid.cutoff):
        raise DomainError(f"interpolation point outside [0, {grid.cutoff}]")
    out = np.interp(eps_arr, grid.nodes, values)
    if np.isscalar(eps) or eps_arr.ndim == 0:
        return float(out)
    return out
