"""Bose-Einstein equilibrium family, moments, and the criticality threshold.

The steady states are f_s(eps; alpha, beta) = 1/(exp(beta*(eps+alpha)) - 1)
plus an optional condensate mass m0 at eps = 0, with alpha*m0 = 0.  Particle
and energy densities of the continuum part are

    M_cont = (2*pi/beta)**1.5 * Li_{3/2}(exp(-beta*alpha))
    E      = 3/(4*pi) * (2*pi/beta)**2.5 * Li_{5/2}(exp(-beta*alpha))

and the condensate adds mass but no energy.  Eliminating beta on the alpha=0,
m0=0 (Planck) family gives the critical curve M_c(E); states above it require
a condensate at equilibrium.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy import integrate
from scipy.special import gamma as _gamma

from .errors import DomainError, NumericalError

_SERIES_TOL = 1e-14
_SERIES_Z_MAX = 0.5


@lru_cache(maxsize=None)
def zeta(s: float) -> float:
    """Riemann zeta at real s != 1, via mpmath, cached as a float."""
    return float(mpmath.zeta(s))


def _polylog_series(s: float, z: float, tol: float = _SERIES_TOL) -> float:
    # Direct sum with the geometric tail bound z**(k+1) / ((k+1)**s (1-z)).
    acc = 0.0
    zk = 1.0
    for k in range(1, 100000):
        zk *= z
        acc += zk / k**s
        tail = zk * z / ((k + 1) ** s * (1.0 - z))
        if tail < tol:
            return acc
    raise NumericalError(f"polylog series did not converge for s={s}, z={z}")


def _polylog_near_one(s: float, z: float) -> float:
    # Expansion around z = 1 for non-integer s:
    #   Li_s(e^{-mu}) = Gamma(1-s) mu^(s-1) + sum_k zeta(s-k) (-mu)^k / k!
    # convergent for |mu| < 2*pi; here mu = -log z <= log 2.
    mu = -math.log(z)
    acc = _gamma(1.0 - s) * mu ** (s - 1.0)
    term = 1.0
    for k in range(0, 200):
        if k > 0:
            term *= -mu / k
        contrib = zeta(s - k) * term
        acc += contrib
        if k > 4 and abs(contrib) < _SERIES_TOL * max(abs(acc), 1.0):
            return acc
    raise NumericalError(f"polylog expansion did not converge for s={s}, z={z}")


def _polylog_any(s: float, z: float) -> float:
    # No restriction on s beyond the z=1 divergence; used internally where
    # s <= 1 derivatives of the moment ratio are needed.
    if z < 0.0 or z > 1.0:
        raise DomainError(f"polylog argument z must lie in [0, 1], got {z}")
    if z == 0.0:
        return 0.0
    if z == 1.0:
        if s <= 1.0:
            raise DomainError(f"Li_s(1) diverges for s = {s} <= 1")
        return zeta(s)
    if z <= _SERIES_Z_MAX:
        return _polylog_series(s, z)
    if abs(s - round(s)) < 1e-12:
        return float(mpmath.polylog(round(s), z))
    return _polylog_near_one(s, z)


def polylog(s: float, z: float) -> float:
    """Li_s(z) = sum_{k>=1} z**k / k**s for s > 1 and z in [0, 1]."""
    if s <= 1.0:
        raise DomainError(f"polylog requires s > 1, got s = {s}")
    return _polylog_any(s, z)


@dataclass(frozen=True)
class EquilibriumParams:
    """(alpha, beta, m0) of a Bose-Einstein steady state, alpha*m0 = 0."""

    alpha: float
    beta: float
    m0: float = 0.0

    def __post_init__(self) -> None:
        if not np.isfinite(self.beta) or self.beta <= 0.0:
            raise DomainError(f"beta must be positive, got {self.beta}")
        if not np.isfinite(self.alpha) or self.alpha < 0.0:
            raise DomainError(f"alpha must be nonnegative, got {self.alpha}")
        if not np.isfinite(self.m0) or self.m0 < 0.0:
            raise DomainError(f"m0 must be nonnegative, got {self.m0}")
        if self.alpha != 0.0 and self.m0 != 0.0:
            raise DomainError(
                f"alpha*m0 = 0 is required, got alpha={self.alpha}, m0={self.m0}"
            )


@dataclass(frozen=True)
class MomentPair:
    """Particle density M and energy density E of a state."""

    M: float
    E: float

    def __post_init__(self) -> None:
        if self.M < 0.0 or self.E < 0.0:
            raise DomainError(f"moments must be nonnegative, got {self}")
        if (self.M == 0.0) != (self.E == 0.0):
            raise DomainError(f"M = 0 iff E = 0 is required, got {self}")


class Criticality(enum.Enum):
    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"
    SUPERCRITICAL = "supercritical"


@dataclass(frozen=True)
class CriticalityClass:
    label: Criticality
    ratio: float


def bose_density(eps, alpha: float, beta: float):
    """1/(exp(beta*(eps+alpha)) - 1); accepts any alpha with eps + alpha > 0.

    This is the raw density used internally (the truncated moment integrals
    evaluate it at alpha = -R/2 < 0).  Scalar or array eps.
    """
    x = beta * (np.asarray(eps, dtype=np.float64) + alpha)
    if np.any(x <= 0.0):
        raise DomainError("beta*(eps+alpha) must be positive")
    if np.any(x < 1e-300):
        raise NumericalError("beta*(eps+alpha) underflows: density would overflow")
    out = 1.0 / np.expm1(x)
    if np.isscalar(eps) or out.ndim == 0:
        return float(out)
    return out


def bose_einstein_density(eps, params: EquilibriumParams):
    """Continuum occupation density f_s(eps; alpha, beta) of a steady state."""
    return bose_density(eps, params.alpha, params.beta)


def moments_of_equilibrium(params: EquilibriumParams) -> MomentPair:
    """Exact (M, E) of the steady state; the condensate adds mass only."""
    z = math.exp(-params.beta * params.alpha)
    pref = (2.0 * math.pi / params.beta) ** 1.5
    M = params.m0 + pref * polylog(1.5, z)
    E = 3.0 / (4.0 * math.pi) * (2.0 * math.pi / params.beta) ** 2.5 * polylog(2.5, z)
    return MomentPair(M=M, E=E)


def critical_mass(E: float) -> float:
    """M_c(E) = zeta(3/2) * zeta(5/2)**(-3/5) * (4*pi/3)**(3/5) * E**(3/5)."""
    if E < 0.0:
        raise DomainError(f"energy density must be nonnegative, got {E}")
    coef = zeta(1.5) / zeta(2.5) ** 0.6 * (4.0 * math.pi / 3.0) ** 0.6
    return coef * E**0.6


def classify(moments: MomentPair, tol: float = 1e-6) -> CriticalityClass:
    """Place (M, E) relative to the critical curve, with a band of width tol."""
    if moments.M <= 0.0 or moments.E <= 0.0:
        raise DomainError(f"classification requires M > 0 and E > 0, got {moments}")
    ratio = moments.M / critical_mass(moments.E)
    if ratio > 1.0 + tol:
        label = Criticality.SUPERCRITICAL
    elif ratio < 1.0 - tol:
        label = Criticality.SUBCRITICAL
    else:
        label = Criticality.CRITICAL
    return CriticalityClass(label=label, ratio=ratio)


def _beta_from_energy(E: float) -> float:
    # Invert E = 3/(4 pi) (2 pi / beta)^{5/2} zeta(5/2) for the alpha = 0 branch.
    return 2.0 * math.pi * (3.0 * zeta(2.5) / (4.0 * math.pi * E)) ** 0.4


def _moment_ratio(z: float) -> float:
    # G(z) = Li_{3/2}(z)^{5/3} / Li_{5/2}(z); strictly increasing on (0, 1].
    return _polylog_any(1.5, z) ** (5.0 / 3.0) / _polylog_any(2.5, z)


def invert_moments(moments: MomentPair) -> EquilibriumParams:
    """The unique (alpha, beta, m0) whose equilibrium moments are (M, E).

    Supercritical branch: alpha = 0, beta from E alone, m0 = M - M_c(E).
    Subcritical branch: m0 = 0; the beta-free ratio M**(5/3)/E fixes
    z = exp(-beta*alpha) through a monotone scalar equation, solved by
    bisection to a 1e-12 bracket plus a few Newton polish steps.
    """
    M, E = moments.M, moments.E
    if M <= 0.0 or E <= 0.0:
        raise DomainError(f"inversion requires M > 0 and E > 0, got {moments}")

    target = M ** (5.0 / 3.0) / E * 3.0 / (4.0 * math.pi)
    g_crit = zeta(1.5) ** (5.0 / 3.0) / zeta(2.5)
    if target >= g_crit:
        beta = _beta_from_energy(E)
        return EquilibriumParams(alpha=0.0, beta=beta, m0=M - critical_mass(E))

    # Solve in v = sqrt(beta*alpha): near the critical point G behaves like
    # g_crit - C*v (a square root in mu = -log z), so v is the coordinate in
    # which bisection и Newton are well conditioned; z itself spans hundreds
    # of decades for large alpha*beta.
    def ratio_of_v(v: float) -> float:
        return _moment_ratio(math.exp(-(v * v)))

    v_lo, v_hi = 0.0, math.sqrt(700.0)
    if ratio_of_v(v_hi) > target:  # pragma: no cover - absurdly dilute input
        raise NumericalError(f"ratio target {target} below bracket floor")
    for _ in range(200):
        if v_hi - v_lo <= 1e-12:
            break
        mid = 0.5 * (v_lo + v_hi)
        if ratio_of_v(mid) < target:
            v_hi = mid
        else:
            v_lo = mid
    else:
        raise NumericalError(
            f"subcritical inversion did not converge; bracket ({v_lo}, {v_hi})"
        )
    v = 0.5 * (v_lo + v_hi)
    for _ in range(4):
        z = math.exp(-(v * v))
        if z >= 1.0:
            break
        li32 = _polylog_any(1.5, z)
        li52 = _polylog_any(2.5, z)
        li12 = _polylog_any(0.5, z)
        resid = (5.0 / 3.0) * math.log(li32) - math.log(li52) - math.log(target)
        # d log G / dv = -2 v * (5/3 Li_1/2 / Li_3/2 - Li_3/2 / Li_5/2)
        deriv = -2.0 * v * ((5.0 / 3.0) * li12 / li32 - li32 / li52)
        if deriv == 0.0:
            break
        v_new = v - resid / deriv
        if not (0.0 <= v_new <= v_hi + 1.0):
            break
        v = v_new
    if v < 1e-7:
        # beta*alpha below ~1e-14 is indistinguishable from the critical
        # point in double precision (Li_{3/2} has a sqrt cusp at z = 1)
        v = 0.0
    z = math.exp(-(v * v))

    li32 = _polylog_any(1.5, z)
    beta = 2.0 * math.pi * (li32 / M) ** (2.0 / 3.0)
    alpha = -math.log(z) / beta if z < 1.0 else 0.0
    return EquilibriumParams(alpha=alpha, beta=beta, m0=0.0)


def truncated_moments(beta: float, R: float, L: float) -> MomentPair:
    """Mass and energy integrals of f_s(eps; -R/2, beta) over [R, L].

    These are the truncated counterparts of the full moment integrals; they
    converge to the Planck-family moments as R -> 0 and L -> infinity.
    """
    if beta <= 0.0:
        raise DomainError(f"beta must be positive, got {beta}")
    if R < 0.0 or R > L:
        raise DomainError(f"need 0 <= R <= L, got R={R}, L={L}")
    if R == L:
        return MomentPair(M=0.0, E=0.0)
    alpha = -0.5 * R
    root2 = math.sqrt(2.0)

    def mass_integrand(eps: float) -> float:
        return 4.0 * math.pi * root2 * math.sqrt(eps) * bose_density(eps, alpha, beta)

    def energy_integrand(eps: float) -> float:
        return 4.0 * math.pi * root2 * eps ** 1.5 * bose_density(eps, alpha, beta)

    mass, _ = integrate.quad(mass_integrand, R, L, limit=200)
    energy, _ = integrate.quad(energy_integrand, R, L, limit=200)
    return MomentPair(M=mass, E=energy)
