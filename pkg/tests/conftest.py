import numpy as np
import pytest

from nordheim.collision import Distribution, DistributionKind, build_tables, to_mass_density
from nordheim.grid import GridSpec, build_grid


@pytest.fixture(scope="session")
def grid48():
    return build_grid(GridSpec(48, 20.0, 2.0), has_condensate_slot=True)


@pytest.fixture(scope="session")
def tables48(grid48):
    return build_tables(grid48)


@pytest.fixture(scope="session")
def bump48(grid48):
    f = 0.8 * np.exp(-(((grid48.nodes - 3.0) / 1.5) ** 2))
    return Distribution(DistributionKind.OCCUPATION, f, grid48)


@pytest.fixture(scope="session")
def bump48_mass(bump48):
    return to_mass_density(bump48)
