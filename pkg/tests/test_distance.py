import numpy as np
import pytest

from ballspace.distance import (
    LevelSetSpec,
    distance_estimate,
    epsilon_grid,
    level_scale,
    level_set_carleson,
    level_trace,
)
from ballspace.errors import BallspaceError
from ballspace.geometry import SpaceParams
from ballspace.holo import Lacunary, Polynomial
from ballspace.spaces import DELTA_GRID

from oracles import level_set_tube_sup_constant

PRM = SpaceParams(1, 2, 1, 0.8)


def test_constant_level_sets_against_radial_oracle():
    c = 2.0
    eps = np.array([0.05, 0.2, 0.5, 1.0, 1.5])
    vals, _ = level_trace(Polynomial.constant(c, 1), PRM, "d2", eps, 200_000, 0)
    exact = np.array([level_set_tube_sup_constant(c, e, PRM.p, PRM.q, PRM.s, list(DELTA_GRID)) for e in eps])
    # a max over many noisy tube estimates sits slightly above the true sup
    assert np.all(vals >= 0.97 * exact) and np.all(vals <= 1.12 * exact)


def test_empty_level_sets_above_the_scale():
    f = Polynomial({(0,): 1.0, (2,): 0.5j})
    scale = level_scale(f, "value", PRM)
    vals, _ = level_trace(f, PRM, "d2", [1.01 * scale, 3 * scale], 50_000, 0)
    assert np.all(vals == 0)
    assert level_set_carleson(LevelSetSpec(f, 1.01 * scale, "value", PRM), 50_000).value == 0


def test_trace_is_monotone_in_epsilon():
    f = Lacunary.from_source({"freqs": "2^k", "coeffs": "2^(k/2)", "kmax": 10})
    scale = level_scale(f, "value", PRM)
    for which in ("d2", "d4"):
        vals, _ = level_trace(f, PRM, which, epsilon_grid(scale), 50_000, 0)
        assert np.all(np.diff(vals) <= 0)


def test_polynomial_distance_is_smallest_grid_point():
    f = Polynomial({(0,): 1.0, (3,): 2.0})
    rep = distance_estimate(f, PRM, "d2", eps_grid=[0.01, 0.1, 0.5])
    assert rep["value"] == 0.01 and not rep["bracketed"]
    assert rep["value"] <= rep["scale"]


def test_zero_function_has_zero_distance():
    rep = distance_estimate(Polynomial.zero(2), SpaceParams(2, 2, 1, 0.8), "d3")
    assert rep["value"] == 0.0 and rep["bracketed"]


def test_grid_contains_the_scale():
    grid = epsilon_grid(3.0)
    assert 3.0 in grid and grid[0] == pytest.approx(3e-4) and grid[-1] == pytest.approx(6.0)


def test_validation():
    with pytest.raises(BallspaceError):
        distance_estimate(Polynomial.constant(1.0, 1), PRM, "d1")
    with pytest.raises(BallspaceError):
        LevelSetSpec(Polynomial.constant(1.0, 1), 0.0, "value", PRM)
    with pytest.raises(BallspaceError):
        LevelSetSpec(Polynomial.constant(1.0, 1), 1.0, "modulus", PRM)
