from __future__ import annotations

import math

import numpy as np
import pytest

from wormproj.geometry import in_D_beta, in_D_beta_prime
from wormproj.grids import DPrimeGrid, GridFunction, StructureError
from wormproj.numerics import ConfigurationError

from conftest import SMALL_GRID


@pytest.fixture(scope="module")
def grid(params):
    return DPrimeGrid(params, SMALL_GRID)


def test_grid_volume(grid, params):
    X = SMALL_GRID.resolved_x_max(params)
    vol = 2 * X * 2 * math.pi**2 * math.sinh(params.log_modulus_bound)
    assert grid.weights.sum() == pytest.approx(vol, rel=1e-12)


def test_nodes_lie_in_the_domains(grid, params):
    assert np.all(in_D_beta_prime(grid.nodes("D_beta_prime"), params))
    assert np.all(in_D_beta(grid.nodes("D_beta"), params))


def test_change_of_variables_is_an_isometry(grid):
    rng = np.random.default_rng(1)
    vals = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    f = GridFunction(grid, vals, "D_beta")
    g = GridFunction(grid, rng.normal(size=grid.shape) + 0j, "D_beta")
    assert f.to_prime().norm() == pytest.approx(f.norm(), rel=1e-13)
    assert f.to_prime().inner(g.to_prime()) == pytest.approx(f.inner(g), rel=1e-12)
    assert np.allclose(f.to_prime().to_beta().values, f.values)
    assert f.to("D_beta") is f


def test_sample_and_arithmetic(grid):
    f = GridFunction.sample(lambda p: p.z1, grid, "D_beta")
    g = GridFunction.sample(lambda p: 1.0 / p.z2, grid, "D_beta")
    assert np.allclose((f + g).values, f.values + g.values)
    assert np.allclose((f - g).values, f.values - g.values)
    assert np.allclose((2.0 * f).values, (f * 2.0).values)
    assert (3.0 * f).norm() == pytest.approx(3.0 * f.norm())
    assert f.func is not None


def test_structure_errors(grid, params):
    with pytest.raises(StructureError):
        GridFunction(grid, np.zeros(3))
    with pytest.raises(ConfigurationError):
        GridFunction(grid, np.zeros(grid.shape), "elsewhere")
    other = DPrimeGrid(params, SMALL_GRID)
    with pytest.raises(StructureError):
        GridFunction(grid, np.zeros(grid.shape)).inner(GridFunction(other, np.zeros(grid.shape)))
    with pytest.raises(StructureError):
        GridFunction(grid, np.zeros(grid.shape)) + GridFunction(grid, np.zeros(grid.shape), "D_beta_prime")


def test_refined_grid(grid):
    r = grid.refined()
    assert r.x.size > grid.x.size and r.u.size > grid.u.size
    assert r.theta.size == grid.theta.size
