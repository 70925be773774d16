import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from nordheim import equilibrium as eq
from nordheim.errors import DomainError, NumericalError

# frozen oracle values (series / Euler-Maclaurin oracle below, and
# independent quadrature of the moment integrals)
ZETA_32 = 2.612375348685488
ZETA_52 = 1.341487257250917
M_PLANCK_BETA1 = 41.14389277361704
E_PLANCK_BETA1 = 31.6918515732884


def zeta_oracle(s: float, terms: int = 4000) -> float:
    """Partial sum plus Euler-Maclaurin tail; remainder far below 1e-12."""
    k = np.arange(1, terms + 1, dtype=np.float64)
    partial = float(np.sum(k**-s))
    tail = terms ** (1 - s) / (s - 1) - 0.5 * terms**-s + s / 12.0 * terms ** (-s - 1)
    return partial + tail


def polylog_series_oracle(s: float, z: float, tol: float = 1e-13) -> float:
    """Direct summation with the geometric tail bound z^(K+1)/((K+1)^s (1-z))."""
    acc, zk, k = 0.0, 1.0, 0
    while True:
        k += 1
        zk *= z
        acc += zk / k**s
        if zk * z / ((k + 1) ** s * (1.0 - z)) < tol:
            return acc


def test_zeta_oracle_values_frozen():
    assert zeta_oracle(1.5) == pytest.approx(ZETA_32, abs=1e-12)
    assert zeta_oracle(2.5) == pytest.approx(ZETA_52, abs=1e-12)


def test_polylog_trivial_and_zeta_limits():
    assert eq.polylog(1.5, 0.0) == 0.0
    assert eq.polylog(1.5, 1.0) == pytest.approx(ZETA_32, abs=1e-12)
    assert eq.polylog(2.5, 1.0) == pytest.approx(ZETA_52, abs=1e-12)


@pytest.mark.parametrize("s", [1.5, 2.2, 2.5, 3.5])
@pytest.mark.parametrize("z", [1e-6, 0.1, 0.45, 0.6, 0.8, 0.95, 0.999])
def test_polylog_matches_series_oracle(s, z):
    assert eq.polylog(s, z) == pytest.approx(polylog_series_oracle(s, z), abs=2e-12)


def test_polylog_domain_errors():
    with pytest.raises(DomainError):
        eq.polylog(1.0, 1.0)
    with pytest.raises(DomainError):
        eq.polylog(0.5, 0.3)
    with pytest.raises(DomainError):
        eq.polylog(1.5, 1.2)
    with pytest.raises(DomainError):
        eq.polylog(1.5, -0.1)


@given(z=st.floats(min_value=1e-6, max_value=1.0), s=st.floats(min_value=1.1, max_value=4.0))
@settings(max_examples=40, deadline=None)
def test_polylog_partial_sums_monotone(z, s):
    k = np.arange(1, 200, dtype=np.float64)
    partial = np.cumsum(z**k / k**s)
    assert np.all(np.diff(partial) >= 0.0)
    assert eq.polylog(s, z) >= partial[-1] - 1e-12


def test_bose_density_trivial_values():
    assert eq.bose_density(math.log(2.0), 0.0, 1.0) == pytest.approx(1.0, rel=1e-14)
    assert eq.bose_density(800.0, 0.0, 1.0) == pytest.approx(0.0, abs=1e-300)
    params = eq.EquilibriumParams(alpha=0.0, beta=1.0)
    assert eq.bose_einstein_density(1.0, params) == pytest.approx(
        1.0 / (math.e - 1.0), rel=1e-14
    )


def test_bose_density_errors():
    with pytest.raises(DomainError):
        eq.bose_density(0.0, 0.0, 1.0)
    with pytest.raises(DomainError):
        eq.bose_density(-2.0, 1.0, 1.0)
    with pytest.raises(NumericalError):
        eq.bose_density(1e-310, 0.0, 1.0)


def test_bose_density_monotone_in_arguments():
    assert eq.bose_density(1.0, 0.0, 1.0) > eq.bose_density(2.0, 0.0, 1.0)
    assert eq.bose_density(1.0, 0.0, 1.0) > eq.bose_density(1.0, 0.5, 1.0)
    assert eq.bose_density(1.0, 0.0, 1.0) > eq.bose_density(1.0, 0.0, 2.0)


def quadrature_moments_oracle(alpha: float, beta: float) -> tuple[float, float]:
    root2 = math.sqrt(2.0)
    top = 700.0 / beta  # integrand underflows long before this

    def fm(e):
        return 4.0 * math.pi * root2 * math.sqrt(e) / math.expm1(beta * (e + alpha))

    def fe(e):
        return 4.0 * math.pi * root2 * e**1.5 / math.expm1(beta * (e + alpha))

    M = integrate.quad(fm, 0.0, top, limit=400)[0]
    E = integrate.quad(fe, 0.0, top, limit=400)[0]
    return M, E


def test_planck_moments_against_independent_quadrature():
    mom = eq.moments_of_equilibrium(eq.EquilibriumParams(alpha=0.0, beta=1.0))
    M_quad, E_quad = quadrature_moments_oracle(0.0, 1.0)
    assert mom.M == pytest.approx(M_PLANCK_BETA1, rel=1e-12)
    assert mom.E == pytest.approx(E_PLANCK_BETA1, rel=1e-12)
    assert mom.M == pytest.approx(M_quad, rel=1e-6)
    assert mom.E == pytest.approx(E_quad, rel=1e-6)


def test_condensate_adds_mass_only():
    base = eq.moments_of_equilibrium(eq.EquilibriumParams(alpha=0.0, beta=1.0))
    shifted = eq.moments_of_equilibrium(eq.EquilibriumParams(alpha=0.0, beta=1.0, m0=5.5))
    assert shifted.M == pytest.approx(base.M + 5.5, rel=1e-14)
    assert shifted.E == base.E


def test_beta_scaling_powers():
    base = eq.moments_of_equilibrium(eq.EquilibriumParams(alpha=0.0, beta=1.0))
    double = eq.moments_of_equilibrium(eq.EquilibriumParams(alpha=0.0, beta=2.0))
    assert double.M == pytest.approx(base.M * 2.0**-1.5, rel=1e-12)
    assert double.E == pytest.approx(base.E * 2.0**-2.5, rel=1e-12)


def test_critical_mass_trivial_and_planck_identity():
    assert eq.critical_mass(0.0) == 0.0
    assert eq.critical_mass(E_PLANCK_BETA1) == pytest.approx(M_PLANCK_BETA1, rel=1e-8)
    with pytest.raises(DomainError):
        eq.critical_mass(-1.0)


def test_critical_mass_increasing_concave():
    es = np.linspace(0.5, 50.0, 40)
    ms = np.array([eq.critical_mass(float(e)) for e in es])
    assert np.all(np.diff(ms) > 0.0)
    assert np.all(np.diff(ms, 2) < 0.0)


def test_classify_examples():
    E = 10.0
    mc = eq.critical_mass(E)
    assert eq.classify(eq.MomentPair(M=mc, E=E)).label is eq.Criticality.CRITICAL
    sup = eq.classify(eq.MomentPair(M=2 * mc, E=E))
    assert sup.label is eq.Criticality.SUPERCRITICAL
    assert sup.ratio == pytest.approx(2.0, rel=1e-12)
    sub = eq.classify(eq.MomentPair(M=0.5 * mc, E=E))
    assert sub.label is eq.Criticality.SUBCRITICAL
    assert sub.ratio == pytest.approx(0.5, rel=1e-12)


@given(c=st.floats(min_value=0.1, max_value=10.0), E=st.floats(min_value=1e-3, max_value=1e3))
@settings(max_examples=60, deadline=None)
def test_classify_depends_only_on_ratio(c, E):
    result = eq.classify(eq.MomentPair(M=c * eq.critical_mass(E), E=E))
    assert result.ratio == pytest.approx(c, rel=1e-10)
    if c > 1.0 + 1e-5:
        assert result.label is eq.Criticality.SUPERCRITICAL
    elif c < 1.0 - 1e-5:
        assert result.label is eq.Criticality.SUBCRITICAL


def test_invert_supercritical_example():
    # derived from the Planck beta=1 moments: M = 2*M_c(E) recovers beta = 1
    moments = eq.MomentPair(M=2.0 * M_PLANCK_BETA1, E=E_PLANCK_BETA1)
    params = eq.invert_moments(moments)
    assert params.alpha == 0.0
    assert params.beta == pytest.approx(1.0, rel=1e-10)
    assert params.m0 == pytest.approx(M_PLANCK_BETA1, rel=1e-10)


def test_invert_subcritical_roundtrip_example():
    params = eq.EquilibriumParams(alpha=0.5, beta=1.0)
    roundtrip = eq.invert_moments(eq.moments_of_equilibrium(params))
    assert roundtrip.alpha == pytest.approx(0.5, rel=1e-8)
    assert roundtrip.beta == pytest.approx(1.0, rel=1e-8)
    assert roundtrip.m0 == 0.0


def test_invert_critical_point_is_branch_junction():
    E = 7.3
    params = eq.invert_moments(eq.MomentPair(M=eq.critical_mass(E), E=E))
    assert params.alpha == pytest.approx(0.0, abs=1e-7)
    assert abs(params.m0) <= 1e-8 * eq.critical_mass(E)


def test_invert_rejects_nonpositive():
    with pytest.raises(DomainError):
        eq.invert_moments(eq.MomentPair(M=0.0, E=0.0))


@given(
    beta=st.floats(min_value=0.05, max_value=20.0),
    alpha=st.floats(min_value=0.0, max_value=5.0),
    m0=st.floats(min_value=0.0, max_value=100.0),
)
@settings(max_examples=80, deadline=None)
def test_roundtrip_property_both_branches(beta, alpha, m0):
    if alpha > 0.0 and m0 > 0.0:
        m0 = 0.0
    params = eq.EquilibriumParams(alpha=alpha, beta=beta, m0=m0)
    mom = eq.moments_of_equilibrium(params)
    back = eq.invert_moments(mom)
    mom2 = eq.moments_of_equilibrium(back)
    assert mom2.M == pytest.approx(mom.M, rel=1e-8)
    assert mom2.E == pytest.approx(mom.E, rel=1e-8)


def test_params_validation():
    with pytest.raises(DomainError):
        eq.EquilibriumParams(alpha=1.0, beta=1.0, m0=1.0)
    with pytest.raises(DomainError):
        eq.EquilibriumParams(alpha=-0.1, beta=1.0)
    with pytest.raises(DomainError):
        eq.EquilibriumParams(alpha=0.0, beta=0.0)
    with pytest.raises(DomainError):
        eq.MomentPair(M=1.0, E=0.0)


def test_truncated_moments_limit_consistency():
    full = eq.moments_of_equilibrium(eq.EquilibriumParams(alpha=0.0, beta=1.0))
    trunc = eq.truncated_moments(1.0, 0.0, 60.0)
    assert trunc.M == pytest.approx(full.M, rel=1e-4)
    assert trunc.E == pytest.approx(full.E, rel=1e-4)


def test_truncated_moments_monotone_in_beta():
    lo = eq.truncated_moments(2.0, 0.5, 30.0)
    hi = eq.truncated_moments(1.0, 0.5, 30.0)
    assert lo.M < hi.M
    assert lo.E < hi.E


def test_truncated_moments_empty_interval_and_errors():
    assert eq.truncated_moments(1.0, 2.0, 2.0) == eq.MomentPair(M=0.0, E=0.0)
    with pytest.raises(DomainError):
        eq.truncated_moments(1.0, 3.0, 2.0)
    with pytest.raises(DomainError):
        eq.truncated_moments(-1.0, 0.0, 2.0)
