"""Quantitative low-energy detectors evaluated on a state.

The blow-up functional tests sup over rho <= rho0 of

    min{ inf_{0<R<=rho} I(R) / (nu R^{3/2}),  I(rho) / (Kstar rho^{theta}) }

with I(R) = int_0^R f sqrt(eps) d eps for the occupation form, and the same
shape with I(R) = int_0^R g d eps (condensate included) for the mass form.
The constants (nu, Kstar, theta, rho0, rho1, K) exist but are never computed
in closed form, so they are configuration; every report carries the value
actually attained, and the detectors are instruments over a run, not proofs.

Data are integrated as piecewise-constant per cell (nodal value on the cell),
which makes every cumulative integral an exact closed form: cum(R) =
P_j + c_j R^q on cell j, with q = 1 for g and q = 3/2 for f sqrt(eps).  The
continuum sup/inf are then exact for the discrete data model: within a cell
the inner ratio is monotone or has a single interior maximum, so its infimum
sits on cell edges; the outer sup is located by adding the closed-form
interior critical points of both branches and their bracketed crossings to
the candidate set, after which min(F1, B) is monotone between neighbours.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .collision import FOUR_PI_ROOT2, Distribution, DistributionKind
from .equilibrium import (
    EquilibriumParams,
    MomentPair,
    _beta_from_energy,
    bose_density,
    critical_mass,
    invert_moments,
)
from .errors import ContractError, DomainError


@dataclass(frozen=True)
class DetectorParams:
    """Configured constants of the low-energy detectors."""

    nu: float = 1.0
    k_star: float = 1.0
    theta_star: float = 0.5
    rho0: float = 1.0
    rho1: float = 0.5
    k_low: float = 1.0

    def __post_init__(self) -> None:
        for name in ("nu", "k_star", "rho0", "rho1", "k_low"):
            if getattr(self, name) <= 0.0:
                raise ContractError(f"{name} must be positive")
        if not (0.0 < self.theta_star < 1.5):
            raise ContractError(
                f"theta_star must lie in (0, 3/2), got {self.theta_star}"
            )

    @classmethod
    def defaults_for_cutoff(cls, L: float) -> "DetectorParams":
        return cls(rho0=0.1 * L, rho1=0.05 * L)


@dataclass(frozen=True)
class LowMassReport:
    holds: bool
    worst_R: float
    margin: float


@dataclass(frozen=True)
class CriterionReport:
    satisfied: bool
    best_rho: float
    inner_min: float


@dataclass(frozen=True)
class EquilibriumFit:
    params: EquilibriumParams
    l1_distance: float
    degenerate: bool


class _Cumulative:
    """Exact cumulative integral of piecewise-constant-per-cell data.

    cum(R) = P[j] + c[j] * R**q for R in cell j = (edges[j], edges[j+1]],
    plus an atom at R = 0 included in every cum(R > 0).
    """

    def __init__(self, edges: np.ndarray, coeffs: np.ndarray, q: float, atom: float):
        self.edges = edges
        self.c = np.asarray(coeffs, dtype=np.float64)
        self.q = q
        self.atom = atom
        powers = edges**q
        self.cum_edges = np.concatenate(
            ([atom], atom + np.cumsum(self.c * np.diff(powers)))
        )
        self.P = self.cum_edges[:-1] - self.c * powers[:-1]

    def cells(self, R: np.ndarray) -> np.ndarray:
        j = np.searchsorted(self.edges, R, side="left") - 1
        return np.clip(j, 0, self.c.size - 1)

    def cum(self, R) -> np.ndarray | float:
        R_arr = np.asarray(R, dtype=np.float64)
        j = self.cells(R_arr)
        out = self.P[j] + self.c[j] * R_arr**self.q
        out = np.where(R_arr <= 0.0, self.atom, out)
        out = np.where(R_arr >= self.edges[-1], self.cum_edges[-1], out)
        if np.isscalar(R) or out.ndim == 0:
            return float(out)
        return out


def _mass_cumulative(dist: Distribution, scale: float = 1.0) -> _Cumulative:
    if dist.kind is not DistributionKind.MASS:
        raise ContractError("expected the mass-density form")
    return _Cumulative(
        edges=dist.grid.boundaries,
        coeffs=scale * dist.values,
        q=1.0,
        atom=scale * dist.condensate,
    )


def _occupation_cumulative(dist: Distribution) -> _Cumulative:
    if dist.kind is not DistributionKind.OCCUPATION:
        raise ContractError("expected the occupation form")
    return _Cumulative(
        edges=dist.grid.boundaries,
        coeffs=(2.0 / 3.0) * dist.values,
        q=1.5,
        atom=0.0,
    )


def mass_below(dist: Distribution, R: float) -> float:
    """n0 plus the continuum mass on [0, R], boundary cell prorated."""
    if R < 0.0 or R > dist.grid.cutoff:
        raise DomainError(f"R must lie in [0, {dist.grid.cutoff}], got {R}")
    return float(_mass_cumulative(dist).cum(R))


def energy_below(dist: Distribution, R: float) -> float:
    """Continuum energy on [0, R] (the condensate carries none)."""
    if dist.kind is not DistributionKind.MASS:
        raise ContractError("expected the mass-density form")
    if R < 0.0 or R > dist.grid.cutoff:
        raise DomainError(f"R must lie in [0, {dist.grid.cutoff}], got {R}")
    cumulative = _Cumulative(
        edges=dist.grid.boundaries, coeffs=0.5 * dist.values, q=2.0, atom=0.0
    )
    return float(cumulative.cum(R))


def test_function_moment(dist: Distribution, R: float) -> float:
    """int g * (1 - eps/R)+ d eps + n0, cell-exact for the data model."""
    if dist.kind is not DistributionKind.MASS:
        raise ContractError("expected the mass-density form")
    if R <= 0.0 or R > dist.grid.cutoff:
        raise DomainError(f"R must lie in (0, {dist.grid.cutoff}], got {R}")
    edges = dist.grid.boundaries
    lo = np.minimum(edges[:-1], R)
    hi = np.minimum(edges[1:], R)
    seg = (hi - lo) - (hi**2 - lo**2) / (2.0 * R)
    return float(np.sum(dist.values * seg)) + dist.condensate


def low_mass_check(dist: Distribution, K: float, rho1: float) -> LowMassReport:
    """Check mass_below(R) >= K * R**(3/2) over all resolved R <= rho1.

    Within a cell the ratio mass_below(R)/R**(3/2) is monotone or peaks at a
    single interior point, so its infimum over (0, rho1] is attained on cell
    edges or at rho1; those are evaluated exactly.
    """
    if K <= 0.0:
        raise ContractError(f"K must be positive, got {K}")
    if not (0.0 < rho1 <= dist.grid.cutoff):
        raise DomainError(f"rho1 must lie in (0, {dist.grid.cutoff}], got {rho1}")
    cumulative = _mass_cumulative(dist)
    edges = cumulative.edges
    cand = [float(b) for b in edges[1:] if b <= rho1]
    if not cand or cand[-1] < rho1:
        cand.append(rho1)
    cand_arr = np.asarray(cand)
    vals = np.asarray(cumulative.cum(cand_arr)) / cand_arr**1.5
    k_best = int(np.argmin(vals))
    margin = float(vals[k_best]) - K
    return LowMassReport(holds=margin >= 0.0, worst_R=float(cand_arr[k_best]), margin=margin)


def _criterion_value(cumulative: _Cumulative, p: DetectorParams) -> CriterionReport:
    """sup over rho in (0, rho0] of min(F1(rho), B(rho)), exact on the model."""
    nu, kstar, theta = p.nu, p.k_star, p.theta_star
    q = cumulative.q
    edges = cumulative.edges
    rho_max = min(p.rho0, float(edges[-1]))

    def ratio(R):
        return np.asarray(cumulative.cum(R)) / (nu * np.asarray(R, dtype=np.float64) ** 1.5)

    def big(rho):
        return np.asarray(cumulative.cum(rho)) / (kstar * np.asarray(rho, dtype=np.float64) ** theta)

    inner_edges = np.asarray(
        [float(b) for b in edges[1:] if b < rho_max] + [rho_max]
    )
    prefix_vals = np.minimum.accumulate(ratio(inner_edges))

    def f1(rho) -> float:
        rho = float(rho)
        k = int(np.searchsorted(inner_edges, rho, side="right")) - 1
        pref = prefix_vals[k] if k >= 0 else math.inf
        return float(min(pref, ratio(rho)))

    # interior critical points of both branches, in closed form
    cands = set(float(x) for x in inner_edges)
    j_hi = int(np.searchsorted(edges, rho_max, side="left"))
    for j in range(min(j_hi, cumulative.c.size)):
        cj, Pj = float(cumulative.c[j]), float(cumulative.P[j])
        lo_e, hi_e = float(edges[j]), min(float(edges[j + 1]), rho_max)
        if cj > 0.0 and (q - theta) != 0.0:
            t = theta * Pj / ((q - theta) * cj)
            if t > 0.0:
                r_star = t ** (1.0 / q)
                if lo_e < r_star < hi_e:
                    cands.add(r_star)
        if q == 1.0 and cj > 0.0 and Pj < 0.0:
            r_star = -3.0 * Pj / cj
            if lo_e < r_star < hi_e:
                cands.add(r_star)
    ordered = sorted(c for c in cands if 0.0 < c <= rho_max)

    # bracketed crossings between the active branches
    extra: list[float] = []
    for x0, x1 in zip(ordered[:-1], ordered[1:]):
        for fa, fb in ((f1, big), (lambda x: float(ratio(x)), big)):
            d0 = fa(x0) - float(fb(x0))
            d1 = fa(x1) - float(fb(x1))
            if d0 * d1 < 0.0:
                extra.append(float(brentq(lambda x: fa(x) - float(fb(x)), x0, x1, xtol=1e-15)))
        k = int(np.searchsorted(inner_edges, x0, side="right")) - 1
        pref = float(prefix_vals[k]) if k >= 0 else math.inf
        if math.isfinite(pref):
            d0 = float(ratio(x0)) - pref
            d1 = float(ratio(x1)) - pref
            if d0 * d1 < 0.0:
                extra.append(float(brentq(lambda x: float(ratio(x)) - pref, x0, x1, xtol=1e-15)))
    ordered.extend(extra)

    pts = np.asarray(sorted(ordered))
    vals = np.minimum([f1(x) for x in pts], big(pts))
    k_best = int(np.argmax(vals))
    best_val = float(vals[k_best])
    return CriterionReport(
        satisfied=best_val >= 1.0, best_rho=float(pts[k_best]), inner_min=best_val
    )


def blowup_criterion(dist: Distribution, p: DetectorParams) -> CriterionReport:
    """Blow-up detector on the occupation form (integrals of f sqrt(eps))."""
    return _criterion_value(_occupation_cumulative(dist), p)


def blowup_criterion_from_mass(dist: Distribution, p: DetectorParams) -> CriterionReport:
    """Blow-up detector on a mass-form state via f sqrt(eps) d eps = dg/(4 pi sqrt 2)."""
    return _criterion_value(_mass_cumulative(dist, scale=1.0 / FOUR_PI_ROOT2), p)


def condensation_criterion(dist: Distribution, p: DetectorParams) -> CriterionReport:
    """Condensation detector on the mass form (integrals of g, n0 included)."""
    return _criterion_value(_mass_cumulative(dist), p)


def equilibrium_distance(
    dist: Distribution, band: tuple[float, float]
) -> EquilibriumFit:
    """L1 distance on [R, L] between the state and its fitted equilibrium.

    The band moments are inverted with the condensate branch disabled (a
    supercritical band is fitted by the critical Planck shape); the distance
    is normalized by the band mass.
    """
    R, L = band
    if not (0.0 <= R < L <= dist.grid.cutoff):
        raise DomainError(f"band {band} must satisfy 0 <= R < L <= cutoff")
    if dist.kind is DistributionKind.MASS:
        g = dist
    else:
        from .collision import to_mass_density

        g = to_mass_density(dist)
    m_band = mass_below(g, L) - mass_below(g, R) + (g.condensate if R == 0.0 else 0.0)
    e_band = energy_below(g, L) - energy_below(g, R)
    total = g.moments().M
    if m_band <= 1e-14 * max(total, 1.0) or e_band <= 0.0:
        return EquilibriumFit(
            params=EquilibriumParams(alpha=0.0, beta=1.0, m0=0.0),
            l1_distance=0.0,
            degenerate=True,
        )
    if m_band >= critical_mass(e_band):
        params = EquilibriumParams(alpha=0.0, beta=_beta_from_energy(e_band), m0=0.0)
    else:
        fitted = invert_moments(MomentPair(M=m_band, E=e_band))
        params = EquilibriumParams(alpha=fitted.alpha, beta=fitted.beta, m0=0.0)

    nodes = g.grid.nodes
    g_fit = FOUR_PI_ROOT2 * np.sqrt(nodes) * bose_density(nodes, params.alpha, params.beta)
    lo = np.maximum(g.grid.boundaries[:-1], R)
    hi = np.minimum(g.grid.boundaries[1:], L)
    seg = np.clip(hi - lo, 0.0, None)
    l1 = float(np.sum(seg * np.abs(g.values - g_fit)))
    return EquilibriumFit(params=params, l1_distance=l1 / m_band, degenerate=False)
