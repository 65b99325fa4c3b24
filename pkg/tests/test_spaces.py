import math

import numpy as np
import pytest

from ballspace.geometry import SpaceParams
from ballspace.holo import Polynomial, kernel_K
from ballspace.integrate import sample_ball
from ballspace.spaces import (
    Bergman,
    BergmanType,
    Bloch,
    DiscreteMeasure,
    GridSpec,
    MoebiusIntegrator,
    NSpace,
    NstarSpace,
    TentSpace,
    WeightedHardy,
    carleson_norm,
    decay_profile,
    function_measure,
    growth_norm,
    korenblum_profile,
    membership_report,
    moebius_norms,
    norm,
)

from oracles import tube_sup_radial

DELTAS = [2.0 ** (1 - j) for j in range(12)]
ONE = Polynomial.constant(1.0, 1)


def test_constant_in_bergman_type_space():
    for n in (1, 2):
        assert norm(BergmanType(1.5), Polynomial.constant(1.0, n)).value == pytest.approx(1.0, abs=1e-12)


def test_growth_norm_of_monomial():
    # sup r (1 - r^2)^(1/2) = 1/2 at r^2 = 1/2
    assert growth_norm(Polynomial.monomial((1,)), SpaceParams(1, 2, 1, 0.5)) == pytest.approx(0.5, rel=1e-6)


def test_divergent_by_theory():
    est = norm(NSpace(SpaceParams(2, 2, 1, 0.4)), Polynomial.constant(1.0, 2))
    assert est.verdict == "divergent-by-theory" and math.isinf(est.value)


@pytest.mark.parametrize("q,s", [(1.0, 0.8), (2.0, 0.5), (1.0, 1.5)])
def test_constant_N_norm_closed_form(q, s):
    prm = SpaceParams(1, 2, q, s)
    est = norm(NSpace(prm), ONE, budget=200_000, seed=3)
    exact = 1.0 / (q + s - 1.0)
    assert abs(est.power_value - exact) <= 3 * est.power_std_error + 1e-3 * exact
    assert np.max(np.abs(est.argmax)) < 0.35


def test_zero_function_norms():
    zero = Polynomial.zero(2)
    est = moebius_norms(zero, SpaceParams(2, 2, 1, 0.8), ("I1", "I3"))
    assert all(e.value == 0 and e.verdict == "zero-function" for e in est.values())


def test_norm_is_homogeneous():
    prm = SpaceParams(1, 2, 1, 0.8)
    f = Polynomial({(0,): 0.3, (2,): 1.0 - 0.5j})
    a = norm(NSpace(prm), f, budget=50_000, seed=1)
    b = norm(NSpace(prm), f.scale(3.0), budget=50_000, seed=1)
    assert b.value == pytest.approx(3 * a.value, rel=1e-12)


def test_bergman_bloch_hardy_values():
    z = Polynomial.monomial((1,))
    est = norm(Bergman(2, 0.0), z, budget=200_000)
    assert abs(est.power_value - 0.5) <= 3 * est.power_std_error
    assert norm(Bergman(2, 0.0), ONE).value == pytest.approx(1.0, abs=1e-12)
    # sup r (1 - r^2) = 2 / (3 sqrt 3)
    assert norm(Bloch(1.0), z).value == pytest.approx(2 / (3 * math.sqrt(3)), rel=1e-7)
    assert norm(WeightedHardy(2.0, 0.5), ONE).value == pytest.approx(1.0)


def test_tent_space_of_constant_matches_radial_oracle():
    est = norm(TentSpace(1.0, 0.8, 1.8), ONE, budget=100_000)
    assert est.power_value == pytest.approx(tube_sup_radial(1.8, 1.0, 0.8, DELTAS), rel=1e-6)


def test_nstar_out_by_theory_and_zero():
    prm = SpaceParams(2, 2, 1, 2.0)
    assert membership_report(NstarSpace(prm), Polynomial.constant(1.0, 2)).verdict == "out-by-theory"
    assert membership_report(NSpace(prm), Polynomial.zero(2)).verdict == "in-by-theory"
    assert membership_report(NSpace(SpaceParams(2, 2, 1, 0.6)), Polynomial.monomial((1, 1))).verdict == "in-by-theory"
    assert membership_report(NSpace(SpaceParams(2, 2, 0.5, 0.6)), Polynomial.monomial((1, 1))).verdict == "out-by-theory"


def test_nstar_norm_is_finite_below_threshold():
    prm = SpaceParams(2, 2, 1, 0.9)
    est = norm(NstarSpace(prm), Polynomial.monomial((1, 0)), budget=50_000, grid=GridSpec(refine=False))
    assert est.reliable and 0 < est.value < math.inf


class TestCarleson:
    def test_point_mass_at_origin(self):
        mu = DiscreteMeasure(np.zeros((1, 2)), [1.0])
        assert carleson_norm(mu, 1.0, "tent_sup").value == pytest.approx(1.0, abs=0.05)
        assert carleson_norm(mu, 1.0, "moebius_sup").value == pytest.approx(1.0, abs=1e-12)

    def test_empty_measure(self):
        mu = DiscreteMeasure(np.zeros((0, 1)), [])
        assert carleson_norm(mu, 1.0).value == 0.0

    def test_function_measure_against_radial_oracle(self):
        mu = function_measure(ONE, SpaceParams(1, 2, 1, 0.8))
        est = carleson_norm(mu, 0.8, "tent_sup", budget=100_000)
        assert est.value == pytest.approx(tube_sup_radial(1.8, 1.0, 0.8, DELTAS), rel=1e-6)

    def test_modes_agree_up_to_constant(self):
        rng = np.random.default_rng(0)
        pts = rng.uniform(0.2, 0.95, 6) * np.exp(2j * np.pi * rng.uniform(size=6))
        mu = DiscreteMeasure(pts.reshape(-1, 1), (1 - np.abs(pts) ** 2) ** 1.0)
        tent = carleson_norm(mu, 1.0, "tent_sup").value
        moeb = carleson_norm(mu, 1.0, "moebius_sup").value
        assert 0.1 < moeb / tent < 10


class TestProfiles:
    prm = SpaceParams(1, 2, 1, 0.8)

    def test_polynomial_decay_profile_decreases(self):
        f = Polynomial({(0,): 1.0, (3,): 2.0})
        rows = decay_profile(NSpace(self.prm), f, [0.5, 0.9, 0.99, 0.999], budget=50_000)
        vals = [r["value"] for r in rows]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 0.2 * vals[0]

    def test_zero_profile(self):
        rows = decay_profile(NSpace(self.prm), Polynomial.zero(1), [0.0, 0.5])
        assert all(r["value"] == 0 for r in rows)

    def test_kernel_profile_bounded(self):
        rows = decay_profile(NSpace(self.prm), kernel_K([0.6], 2, 1), [0.0, 0.6, 0.9, 0.99], budget=50_000)
        assert all(np.isfinite(r["value"]) and r["value"] < 10 for r in rows)

    def test_korenblum_constant_slope_zero(self):
        prof = korenblum_profile(self.prm, Polynomial.constant(2.0, 1), [0.0, 0.5, 0.8, 0.9], budget=50_000)
        assert abs(prof["slope"]) < 0.05
        base = norm(NSpace(self.prm), ONE, budget=50_000).value
        assert prof["rows"][0]["norm"] == pytest.approx(2.0 * base, rel=1e-12)

    def test_korenblum_skips_zero_norm_at_origin(self):
        prof = korenblum_profile(self.prm, Polynomial.monomial((3,)), [0.0, 0.5, 0.8, 0.9], budget=50_000)
        assert prof["rows"][0]["norm"] == 0 and math.isfinite(prof["slope"]) and prof["slope"] <= 0


def test_monotone_in_s_on_shared_samples():
    rng = np.random.default_rng(8)
    f = Polynomial.random(rng, 2, 4)
    sample = sample_ball(2, 20_000, 0, -0.5)
    lo = MoebiusIntegrator(f, SpaceParams(2, 2, 1, 0.7), ("I1",), sample)
    hi = MoebiusIntegrator(f, SpaceParams(2, 2, 1, 0.9), ("I1",), sample)
    a = np.array([0.3, -0.2j])
    assert np.all(lo.contributions(a)[2]["I1"] >= hi.contributions(a)[2]["I1"])
