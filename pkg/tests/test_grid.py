import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nordheim.errors import ConfigurationError, ContractError, DomainError
from nordheim.grid import EnergyGrid, GridSpec, build_grid, interpolate, quadrature


def test_uniform_partition_is_midpoint_cells():
    grid = build_grid(GridSpec(n_nodes=8, cutoff=1.0, clustering=1.0))
    assert np.allclose(grid.weights, 1.0 / 8.0)
    assert np.allclose(grid.nodes, (np.arange(8) + 0.5) / 8.0)


def test_weight_sum_equals_cutoff():
    grid = build_grid(GridSpec(128, 20.0, 2.0))
    assert abs(grid.weights.sum() - 20.0) <= 1e-12 * 20.0


def test_sqrt_quadrature_matches_closed_form():
    # oracle: int_0^L sqrt(eps) = (2/3) L^(3/2)
    grid = build_grid(GridSpec(128, 20.0, 2.0))
    exact = (2.0 / 3.0) * 20.0**1.5
    got = quadrature(grid, np.sqrt(grid.nodes))
    assert abs(got - exact) / exact < 1e-4


def test_quadrature_of_ones_zeros_and_identity():
    grid = build_grid(GridSpec(16, 1.0, 2.0))
    assert quadrature(grid, np.ones(grid.n)) == pytest.approx(1.0, rel=1e-12)
    assert quadrature(grid, np.zeros(grid.n)) == 0.0
    uniform = build_grid(GridSpec(100, 2.0, 1.0))
    # midpoint rule is exact for linear integrands
    assert quadrature(uniform, uniform.nodes) == pytest.approx(2.0, abs=1e-3)


def test_quadrature_length_mismatch_is_contract_error():
    grid = build_grid(GridSpec(16, 1.0, 2.0))
    with pytest.raises(ContractError):
        quadrature(grid, np.ones(grid.n + 1))


@given(
    n=st.integers(min_value=8, max_value=200),
    cutoff=st.floats(min_value=1e-3, max_value=1e3),
    p=st.floats(min_value=0.25, max_value=4.0),
)
@settings(max_examples=60, deadline=None)
def test_grid_invariants_hold_for_random_specs(n, cutoff, p):
    grid = build_grid(GridSpec(n, cutoff, p))
    assert np.all(grid.weights > 0.0)
    assert abs(grid.weights.sum() - cutoff) <= 1e-12 * cutoff
    assert grid.nodes[0] > 0.0
    assert np.all(np.diff(grid.nodes) > 0.0)
    grid.validate()


@pytest.mark.parametrize(
    "bad",
    [
        GridSpec(4, 1.0, 2.0),
        GridSpec(16, 0.0, 2.0),
        GridSpec(16, -3.0, 2.0),
        GridSpec(16, 1.0, 0.0),
    ],
)
def test_invalid_specs_raise_configuration_error(bad):
    with pytest.raises(ConfigurationError):
        build_grid(bad)


@pytest.mark.parametrize("power", [0.5, 1.5])
def test_quadrature_error_decreases_at_scheme_order(power):
    # default grading p=2 resolves the sqrt singularity: nominal order 2
    exact = 20.0 ** (power + 1.0) / (power + 1.0)
    errs = []
    ns = [32, 64, 128, 256]
    for n in ns:
        grid = build_grid(GridSpec(n, 20.0, 2.0))
        errs.append(abs(quadrature(grid, grid.nodes**power) - exact))
    slope = np.polyfit(np.log(ns), np.log(errs), 1)[0]
    assert abs(-slope - 2.0) < 0.2 * 2.0


def test_interpolate_nodal_exactness_and_constants():
    grid = build_grid(GridSpec(16, 2.0, 2.0))
    values = np.sin(grid.nodes)
    for k in (0, 5, 15):
        assert interpolate(grid, values, float(grid.nodes[k])) == values[k]
    const = np.full(grid.n, 3.25)
    for eps in (0.0, 0.3, 1.9, 2.0):
        assert interpolate(grid, const, eps) == 3.25


def test_interpolate_midpoint_is_mean():
    grid = build_grid(GridSpec(16, 2.0, 2.0))
    values = np.cos(grid.nodes)
    mid = 0.5 * (grid.nodes[4] + grid.nodes[5])
    assert interpolate(grid, values, float(mid)) == pytest.approx(
        0.5 * (values[4] + values[5]), rel=1e-14
    )


def test_interpolate_outside_domain_is_domain_error():
    grid = build_grid(GridSpec(16, 2.0, 2.0))
    values = np.ones(grid.n)
    with pytest.raises(DomainError):
        interpolate(grid, values, -0.1)
    with pytest.raises(DomainError):
        interpolate(grid, values, 2.1)


def test_condensate_slot_flag_roundtrip():
    grid = build_grid(GridSpec(16, 2.0, 2.0))
    assert not grid.has_condensate_slot
    assert grid.with_condensate_slot().has_condensate_slot
