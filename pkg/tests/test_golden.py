"""Recompute the seeded runs behind tests/golden/calibration.json and compare.

The runs are deterministic, so agreement is to rounding; a mismatch means a
numerical change that should be reviewed and, if intended, regenerated."""
import json
import pathlib

import numpy as np
import pytest

import scenarios

GOLDEN = json.loads((pathlib.Path(__file__).parent / "golden" / "calibration.json").read_text())


def test_carleson_pairs():
    got = scenarios.carleson_pairs()
    for name, pair in GOLDEN["carleson"]["pairs"].items():
        assert got[name] == pytest.approx(pair, rel=1e-9)


def test_geometric_growth():
    assert scenarios.geometric_growth() == pytest.approx(GOLDEN["geometric"]["growth"], rel=1e-9)


def test_kernel_profile_is_bounded_and_frozen():
    vals = scenarios.kernel_profile(tuple(GOLDEN["kernel_profile"]["radii"]))
    assert vals == pytest.approx(GOLDEN["kernel_profile"]["values"], rel=1e-9)
    assert max(vals) < 10


def test_distance_trend_is_positive_and_frozen():
    vals = scenarios.distance_trend(tuple(GOLDEN["distance_trend"]["truncations"]))
    assert vals == pytest.approx(GOLDEN["distance_trend"]["d2"], rel=1e-9)
    tail = vals[1:]
    assert min(tail) > 0.5 and all(b >= a for a, b in zip(tail, tail[1:]))


def test_s_convergence_trend():
    errors = scenarios.s_convergence(tuple(GOLDEN["s_convergence"]["radii"]))
    assert errors == pytest.approx(GOLDEN["s_convergence"]["errors"], rel=1e-9)
    assert np.all(np.diff(errors) < 0)


def test_frozen_constants_are_consistent():
    eq = GOLDEN["equivalence"]
    flat = [r for rows in eq["ratios"].values() for row in rows for r in row.values()]
    assert max(flat) <= eq["constant"] and min(flat) >= 1 / eq["constant"]
    lo, hi = GOLDEN["collapse"]["interval"]
    assert 0 < lo <= hi < np.inf
