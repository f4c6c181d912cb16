import numpy as np
import pytest

import levysde as lv


@pytest.fixture(scope="session")
def grid256():
    return lv.TorusGrid(n=256, dimension=1, length_factor=4.0)


@pytest.fixture(scope="session")
def grid1024():
    return lv.TorusGrid(n=1024, dimension=1, length_factor=4.0)


@pytest.fixture(scope="session")
def stable_measure():
    return lv.StableMeasure.normalized(1.5)


@pytest.fixture(scope="session")
def constant_model(stable_measure):
    return lv.SdeModel(
        sigma=lv.coefficient_preset("constant", value=1.0),
        drift=lv.coefficient_preset("constant", value=0.0),
        measure=stable_measure,
        sigma_lower_bound=0.5,
    )


@pytest.fixture(scope="session")
def variable_model(stable_measure):
    # sigma(x) = 2 + 0.2 sin x, drift 0
    return lv.SdeModel(
        sigma=lv.coefficient_preset("2+sin", offset=2.0, amplitude=0.2),
        drift=lv.coefficient_preset("constant", value=0.0),
        measure=stable_measure,
        sigma_lower_bound=1.5,
    )


@pytest.fixture(scope="session")
def symbol_const_256(constant_model, grid256):
    return lv.tabulate(constant_model, grid256)


@pytest.fixture(scope="session")
def symbol_var_256(variable_model, grid256):
    return lv.tabulate(variable_model, grid256)


@pytest.fixture(scope="session")
def symbol_const_1024(constant_model, grid1024):
    return lv.tabulate(constant_model, grid1024)


def make_mode(grid, freq):
    """Grid function with a single synthesis coefficient at frequency ~freq."""
    coeffs = np.zeros(grid.shape, dtype=complex)
    coeffs[int(np.argmin(np.abs(grid.xi - freq)))] = 1.0
    return lv.GridFunction.from_coeffs(grid, coeffs)
