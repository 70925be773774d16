"""Isotropic bosonic collision operator on the energy grid.

Two evaluations are provided:

* Strong form for the occupation density f, parameterized by the outgoing
  pair (eps3, eps4) with eps2 = eps3 + eps4 - eps1 eliminated.  It is split
  into a nonnegative gain and a nonnegative relative loss rate a so that the
  exponential (Duhamel-type) step can use them directly, and rhs = gain - a*f
  holds to round-off.

* Weak form for the mass density g = 4*pi*sqrt(2*eps)*f, including a point
  mass n0 at eps = 0.  Rates are obtained by testing the symmetrized
  transfer identity against the nodal hat basis plus the condensate
  indicator.  The increment H_phi vanishes identically for phi = 1 and
  phi = eps, so total mass (continuum + n0) and energy are conserved to
  round-off at any resolution, by construction.

Kernel ratios Phi/sqrt(eps) are extended continuously to eps = 0 arguments
(limit value 1 when that sqrt attains the min), which is how the condensate
couples back to the continuum.  The collision domain is truncated to
quadruples with all four energies inside [0, last node]; each ordered triple
conserves mass and energy on its own, so the truncation does not disturb the
conservation identities.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

try:
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a soft dependency
    _HAVE_NUMBA = False

from .errors import ContractError, DomainError, ResourceError
from .grid import EnergyGrid, quadrature
from .equilibrium import MomentPair

FOUR_PI_ROOT2 = 4.0 * math.pi * math.sqrt(2.0)
STRONG_PREFACTOR = 8.0 * math.pi**2 / math.sqrt(2.0)
CUBIC_PREFACTOR = 2.0 ** (-2.5)
QUADRATIC_PREFACTOR = math.pi / 2.0

DEFAULT_TABLE_BUDGET_BYTES = 4 * 1024**3


class DistributionKind(enum.Enum):
    OCCUPATION = "occupation"
    MASS = "mass"


@dataclass
class Distribution:
    """Grid values of f (occupation) or g (mass density) plus condensate n0."""

    kind: DistributionKind
    values: np.ndarray
    grid: EnergyGrid
    condensate: float = 0.0

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.nodes.shape:
            raise ContractError(
                f"values shape {self.values.shape} does not match grid "
                f"({self.grid.nodes.shape})"
            )
        if np.any(self.values < 0.0) or not np.all(np.isfinite(self.values)):
            raise ContractError("distribution values must be finite and nonnegative")
        if self.condensate < 0.0 or not np.isfinite(self.condensate):
            raise ContractError(f"condensate must be nonnegative, got {self.condensate}")
        if self.kind is DistributionKind.OCCUPATION and self.condensate != 0.0:
            raise ContractError("occupation form cannot carry a condensate")

    def copy(self) -> "Distribution":
        return Distribution(
            kind=self.kind,
            values=self.values.copy(),
            grid=self.grid,
            condensate=self.condensate,
        )

    def moments(self) -> MomentPair:
        eps = self.grid.nodes
        if self.kind is DistributionKind.OCCUPATION:
            M = quadrature(self.grid, FOUR_PI_ROOT2 * np.sqrt(eps) * self.values)
            E = quadrature(self.grid, FOUR_PI_ROOT2 * eps**1.5 * self.values)
            return MomentPair(M=M, E=E)
        M = quadrature(self.grid, self.values) + self.condensate
        E = quadrature(self.grid, eps * self.values)
        return MomentPair(M=M, E=E)

    def occupation_values(self) -> np.ndarray:
        """Nodal f values regardless of representation (n0 not included)."""
        if self.kind is DistributionKind.OCCUPATION:
            return self.values
        return self.values / (FOUR_PI_ROOT2 * np.sqrt(self.grid.nodes))

    def linf(self) -> float:
        """Sup norm of the occupation density f."""
        return float(np.max(self.occupation_values(), initial=0.0))


def to_mass_density(dist: Distribution) -> Distribution:
    """g = 4*pi*sqrt(2*eps) * f, nodewise."""
    if dist.kind is not DistributionKind.OCCUPATION:
        raise ContractError("to_mass_density expects the occupation form")
    g = FOUR_PI_ROOT2 * np.sqrt(dist.grid.nodes) * dist.values
    return Distribution(
        kind=DistributionKind.MASS,
        values=g,
        grid=dist.grid.with_condensate_slot(),
        condensate=0.0,
    )


def to_occupation(dist: Distribution) -> Distribution:
    """f = g / (4*pi*sqrt(2*eps)); refuses to drop a condensate."""
    if dist.kind is not DistributionKind.MASS:
        raise ContractError("to_occupation expects the mass form")
    if dist.condensate != 0.0:
        raise ContractError(
            "a condensate cannot be represented in the occupation form "
            f"(n0 = {dist.condensate})"
        )
    f = dist.values / (FOUR_PI_ROOT2 * np.sqrt(dist.grid.nodes))
    return Distribution(kind=DistributionKind.OCCUPATION, values=f, grid=dist.grid)


def kernel_W(eps1: float, eps2: float, eps3: float, eps4: float) -> float:
    """min(sqrt(eps_i)) / sqrt(eps1); symmetric in (eps3, eps4)."""
    if eps1 <= 0.0:
        raise DomainError("kernel_W requires eps1 > 0; use the mass-form kernel at 0")
    if min(eps2, eps3, eps4) < 0.0:
        raise DomainError("energies must be nonnegative")
    return min(
        math.sqrt(eps1), math.sqrt(eps2), math.sqrt(eps3), math.sqrt(eps4)
    ) / math.sqrt(eps1)


def kernel_Phi(eps1: float, eps2: float, eps3: float) -> float:
    """min{sqrt(eps1), sqrt(eps2), sqrt(eps3), sqrt((eps1+eps2-eps3)+)}."""
    if min(eps1, eps2, eps3) < 0.0:
        raise DomainError("energies must be nonnegative")
    eps4 = max(eps1 + eps2 - eps3, 0.0)
    return min(math.sqrt(eps1), math.sqrt(eps2), math.sqrt(eps3), math.sqrt(eps4))


def hat_increment(phi, eps1: float, eps2: float, eps3: float) -> float:
    """H_phi = phi(eps3) + phi(eps1+eps2-eps3) - phi(eps1) - phi(eps2)."""
    return phi(eps3) + phi(eps1 + eps2 - eps3) - phi(eps1) - phi(eps2)


def symmetrized_increment(phi, eps1: float, eps2: float, eps3: float) -> float:
    """G_phi: mean of H_phi * Phi over the six permutations of the arguments.

    Fully permutation symmetric, and nonnegative for convex phi.
    """
    acc = 0.0
    for a, b, c in permutations((eps1, eps2, eps3)):
        acc += hat_increment(phi, a, b, c) * kernel_Phi(a, b, c)
    return acc / 6.0


@dataclass
class _WeakTables:
    """Precomputed coupling arrays over (atom, atom, atom) triples.

    Atom 0 is the condensate slot at eps = 0; atoms 1..n are the grid nodes.
    cubic[a, b, c] multiplies m_a*m_b*m_c, quadratic[a, b, c] multiplies
    m_a*m_b (the third index is the Lebesgue quadrature cell of the inner
    eps3 integral).  idx_lo/idx_hi/wt_lo describe where the birth energy
    eps4 = eps_a + eps_b - eps_c lands in the slot basis.
    """

    slot_energies: np.ndarray
    cubic: np.ndarray
    quadratic: np.ndarray
    idx_lo: np.ndarray
    idx_hi: np.ndarray
    wt_lo: np.ndarray


def _reduced_cubic_ratio(ea: float, eb: np.ndarray, ec: np.ndarray) -> np.ndarray:
    """Continuous extension of Phi / sqrt(ea*eb*ec) on a (b, c) panel."""
    e4 = ea + eb - ec
    out = np.zeros(np.broadcast_shapes(eb.shape, ec.shape))
    feasible = e4 >= 0.0
    pos_b, pos_c = eb > 0.0, ec > 0.0
    if ea > 0.0:
        both = feasible & pos_b & pos_c
        phi = np.minimum(
            np.minimum(math.sqrt(ea), np.sqrt(eb)),
            np.minimum(np.sqrt(ec), np.sqrt(np.clip(e4, 0.0, None))),
        )
        denom = math.sqrt(ea) * np.sqrt(np.where(both, eb * ec, 1.0))
        out = np.where(both, phi / denom, 0.0)
        # ec = 0 with eb > 0: Phi/sqrt(ec) -> 1, leaving 1/sqrt(ea*eb).
        sel = feasible & pos_b & ~pos_c
        out = np.where(sel, 1.0 / (math.sqrt(ea) * np.sqrt(np.where(sel, eb, 1.0))), out)
        # eb = 0 with ec > 0: limit is the indicator ec <= ea over sqrt(ea*ec).
        sel = pos_c & ~pos_b & (ec <= ea)
        out = np.where(sel, 1.0 / (math.sqrt(ea) * np.sqrt(np.where(sel, ec, 1.0))), out)
        return out
    # ea = 0: indicator ec <= eb over sqrt(eb*ec); doubly degenerate -> 0.
    sel = pos_b & pos_c & (ec <= eb)
    return np.where(sel, 1.0 / np.sqrt(np.where(sel, eb * ec, 1.0)), 0.0)


def _reduced_quadratic_ratio(ea: float, eb: np.ndarray, ec: np.ndarray) -> np.ndarray:
    """Continuous extension of Phi / sqrt(ea*eb) on a (b, c) panel; ec > 0."""
    e4 = ea + eb - ec
    out = np.zeros(np.broadcast_shapes(eb.shape, ec.shape))
    feasible = e4 >= 0.0
    pos_b = eb > 0.0
    if ea > 0.0:
        sel = feasible & pos_b
        phi = np.minimum(
            np.minimum(math.sqrt(ea), np.sqrt(eb)),
            np.minimum(np.sqrt(ec), np.sqrt(np.clip(e4, 0.0, None))),
        )
        out = np.where(sel, phi / (math.sqrt(ea) * np.sqrt(np.where(sel, eb, 1.0))), 0.0)
        # eb = 0: Phi/sqrt(eb) -> indicator ec <= ea.
        sel0 = ~pos_b & (ec <= ea)
        out = np.where(sel0, 1.0 / math.sqrt(ea), out)
        return out
    # ea = 0: Phi/sqrt(ea) -> indicator ec <= eb.
    sel = pos_b & (ec <= eb)
    return np.where(sel, 1.0 / np.sqrt(np.where(sel, eb, 1.0)), 0.0)


class KernelTables:
    """Per-grid coupling tables for the weak form; built lazily, bit-stable.

    The strong-form evaluation recomputes its kernel slices on the fly (the
    (eps3, eps4) cell geometry is cheap to regenerate and keeping it out of
    memory lets the strong form run at refinement-study sizes).
    """

    def __init__(self, grid: EnergyGrid, budget_bytes: int = DEFAULT_TABLE_BUDGET_BYTES):
        self.grid = grid
        self.budget_bytes = int(budget_bytes)
        self._weak: _WeakTables | None = None

    def weak_bytes_required(self) -> int:
        m = self.grid.n + 1
        return m**3 * (8 + 8 + 8 + 4 + 4)

    @property
    def weak(self) -> _WeakTables:
        if self._weak is None:
            required = self.weak_bytes_required()
            if required > self.budget_bytes:
                raise ResourceError(
                    f"weak-form tables need {required} bytes "
                    f"(budget {self.budget_bytes}); raise the budget or coarsen the grid"
                )
            self._weak = _build_weak_tables(self.grid)
        return self._weak


def build_tables(grid: EnergyGrid, budget_bytes: int = DEFAULT_TABLE_BUDGET_BYTES) -> KernelTables:
    """Deterministic coupling tables for ``grid``."""
    return KernelTables(grid, budget_bytes=budget_bytes)


def _build_weak_tables(grid: EnergyGrid) -> _WeakTables:
    nodes = grid.nodes
    n = nodes.size
    m = n + 1
    slot_energies = np.concatenate(([0.0], nodes))
    eps_last = nodes[-1]
    w_lebesgue = np.concatenate(([0.0], grid.weights))

    cubic = np.zeros((m, m, m))
    quad = np.zeros((m, m, m))
    idx_lo = np.zeros((m, m, m), dtype=np.int32)
    idx_hi = np.zeros((m, m, m), dtype=np.int32)
    wt_lo = np.zeros((m, m, m))

    eb = slot_energies[:, None]
    ec = slot_energies[None, :]
    for a in range(m):
        ea = float(slot_energies[a])
        e4 = ea + eb - ec
        live = (e4 >= 0.0) & (e4 <= eps_last)

        c3 = CUBIC_PREFACTOR * _reduced_cubic_ratio(ea, eb, ec)
        q2 = QUADRATIC_PREFACTOR * _reduced_quadratic_ratio(ea, eb, ec) * w_lebesgue[None, :]
        cubic[a] = np.where(live, c3, 0.0)
        quad[a] = np.where(live, q2, 0.0)

        e4c = np.clip(e4, 0.0, eps_last)
        hi = np.searchsorted(slot_energies, e4c, side="right").astype(np.int64)
        hi = np.clip(hi, 1, m - 1)
        lo = hi - 1
        t = (e4c - slot_energies[lo]) / (slot_energies[hi] - slot_energies[lo])
        idx_lo[a] = np.where(live, lo, 0).astype(np.int32)
        idx_hi[a] = np.where(live, hi, 0).astype(np.int32)
        wt_lo[a] = np.where(live, 1.0 - t, 0.0)

    # enforce exact a <-> b symmetry (true analytically; rounding differs)
    cubic = 0.5 * (cubic + cubic.transpose(1, 0, 2))
    quad = 0.5 * (quad + quad.transpose(1, 0, 2))

    return _WeakTables(
        slot_energies=slot_energies,
        cubic=cubic,
        quadratic=quad,
        idx_lo=idx_lo,
        idx_hi=idx_hi,
        wt_lo=wt_lo,
    )


@dataclass(frozen=True)
class CollisionRates:
    """Nonnegative gain density and relative loss rate of the strong form."""

    gain: np.ndarray
    loss_rate: np.ndarray

    def __post_init__(self) -> None:
        if np.any(self.gain < 0.0) or np.any(self.loss_rate < 0.0):
            raise ContractError("gain and loss rate must be nonnegative")


def _strong_eval(dist: Distribution) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One pass over the (eps3, eps4) cells: gain, loss rate, and rhs.

    f is treated as piecewise constant per cell (the cell-average rule), so
    the off-grid value f2 at eps2 = eps3 + eps4 - eps1 is the value of the
    cell containing eps2.  The rhs accumulates the gain/loss difference
    inside the sum, so it vanishes exactly for constant f while
    gain - a*f reproduces it to round-off.
    """
    grid = dist.grid
    f = dist.values
    nodes = grid.nodes
    n = nodes.size
    L = grid.cutoff
    sj = np.sqrt(nodes)
    fjk = f[:, None] * f[None, :]
    one_fjfk = 1.0 + f[:, None] + f[None, :]
    wjk = grid.weights[:, None] * grid.weights[None, :]
    ejk = nodes[:, None] + nodes[None, :]
    gain = np.zeros(n)
    loss = np.zeros(n)
    rhs = np.zeros(n)
    for i in range(n):
        e1 = nodes[i]
        e2 = ejk - e1
        live = (e2 >= 0.0) & (e2 <= L)
        s2 = np.sqrt(np.clip(e2, 0.0, None))
        w_kernel = np.minimum(
            np.minimum(math.sqrt(e1), s2), np.minimum(sj[:, None], sj[None, :])
        ) / math.sqrt(e1)
        w_cell = np.where(live, w_kernel * wjk, 0.0)
        # cell-average rule: f2 is the value of the cell containing eps2; a
        # one-sided (floor) lookup would converge at a cleaner nominal rate
        # but carries a coherent gain/loss bias that wrecks equilibria
        cells = np.clip(
            np.searchsorted(grid.boundaries, e2, side="right") - 1, 0, n - 1
        )
        f2 = f[cells]
        gain_term = fjk * (1.0 + f[i] + f2)
        loss_term = f2 * one_fjfk
        gain[i] = np.sum(w_cell * gain_term)
        loss[i] = np.sum(w_cell * loss_term)
        # cubic + quadratic split of the integrand; each difference vanishes
        # termwise (exactly, in floating point) for constant f
        f12 = f[i] * f2
        q_cubic = fjk * (f[i] + f2) - f12 * (f[:, None] + f[None, :])
        q_quad = fjk - f12
        rhs[i] = np.sum(w_cell * (q_cubic + q_quad))
    return STRONG_PREFACTOR * gain, STRONG_PREFACTOR * loss, STRONG_PREFACTOR * rhs


def gain_loss_split(dist: Distribution, tables: KernelTables) -> CollisionRates:
    """Gain and loss parts of the mild-solution form, on the node set.

    gain_i integrates f3*f4*(1 + f1 + f2) * W over the outgoing pairs with
    eps2 = eps3 + eps4 - eps1 in [0, L]; the loss rate a_i integrates
    f2*(1 + f3 + f4) * W over the same region.  Both carry the 8*pi^2/sqrt(2)
    prefactor, and gain - a*f equals the strong-form right-hand side to
    round-off.
    """
    if dist.kind is not DistributionKind.OCCUPATION:
        raise ContractError("gain_loss_split expects the occupation form")
    gain, loss, _ = _strong_eval(dist)
    return CollisionRates(gain=gain, loss_rate=loss)


def collision_rhs_strong(dist: Distribution, tables: KernelTables) -> np.ndarray:
    """d f / d t on the nodes, vanishing exactly for constant f."""
    if dist.kind is not DistributionKind.OCCUPATION:
        raise ContractError("collision_rhs_strong expects the occupation form")
    _, _, rhs = _strong_eval(dist)
    return rhs


def _atom_masses(dist: Distribution) -> np.ndarray:
    m = np.empty(dist.grid.n + 1)
    m[0] = dist.condensate
    m[1:] = dist.grid.weights * dist.values
    return m


def _weak_scatter_numpy(wt: _WeakTables, m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    t3 = wt.cubic * m[:, None, None] * m[None, :, None] * m[None, None, :]
    t2 = wt.quadratic * m[:, None, None] * m[None, :, None]
    t = t3 + t2
    del t3, t2

    loss_a = t.sum(axis=(1, 2))
    loss_b = t.sum(axis=(0, 2))
    gain_c = t.sum(axis=(0, 1))

    flat = t.ravel()
    nslots = m.size
    birth_lo = flat * wt.wt_lo.ravel()
    gain_lo = np.bincount(wt.idx_lo.ravel(), weights=birth_lo, minlength=nslots)
    gain_hi = np.bincount(wt.idx_hi.ravel(), weights=flat - birth_lo, minlength=nslots)

    loss = loss_a + loss_b
    slot_rates = gain_c + gain_lo + gain_hi - loss
    return slot_rates, loss


if _HAVE_NUMBA:

    @_njit(cache=True)
    def _weak_scatter_serial(cubic, quadratic, idx_lo, idx_hi, wt_lo, m):
        nslots = m.size
        rates = np.zeros(nslots)
        loss = np.zeros(nslots)
        for a in range(nslots):
            ma = m[a]
            if ma == 0.0:
                continue
            for b in range(a, nslots):
                mab = ma * m[b]
                if mab == 0.0:
                    continue
                factor = mab if b == a else 2.0 * mab
                for c in range(nslots):
                    t = (cubic[a, b, c] * m[c] + quadratic[a, b, c]) * factor
                    if t == 0.0:
                        continue
                    rates[c] += t
                    tl = wt_lo[a, b, c] * t
                    rates[idx_lo[a, b, c]] += tl
                    rates[idx_hi[a, b, c]] += t - tl
                    rates[a] -= t
                    rates[b] -= t
                    loss[a] += t
                    loss[b] += t
        return rates, loss


def weak_slot_rates(dist: Distribution, tables: KernelTables) -> tuple[np.ndarray, np.ndarray]:
    """Mass rates per slot (slot 0 = condensate) and per-slot loss parts.

    The loss part is returned separately so the integrator can derive a
    stiffness scale; slot_rates already includes it with its sign.  The
    coupling tables are symmetric in the first two indices, so the scatter
    runs over ordered pairs with a factor of two; summation order is fixed,
    making the result reproducible run to run.
    """
    if dist.kind is not DistributionKind.MASS:
        raise ContractError("the weak form expects the mass-density distribution")
    wt = tables.weak
    m = _atom_masses(dist)
    if _HAVE_NUMBA:
        return _weak_scatter_serial(
            wt.cubic, wt.quadratic, wt.idx_lo, wt.idx_hi, wt.wt_lo, m
        )
    return _weak_scatter_numpy(wt, m)


def collision_rhs_weak_g(
    dist: Distribution, tables: KernelTables
) -> tuple[np.ndarray, float]:
    """d g / d t on the nodes and d n0 / d t of the condensate."""
    slot_rates, _ = weak_slot_rates(dist, tables)
    return slot_rates[1:] / dist.grid.weights, float(slot_rates[0])
