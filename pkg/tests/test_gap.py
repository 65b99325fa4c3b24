import math

import numpy as np
import pytest

from ballspace.dsl import parse_series
from ballspace.errors import InvalidGapSequence
from ballspace.gap import GapSeries, dyadic_block_sum, gap_verdict_hardy, gap_verdict_N, holder_block_check
from ballspace.geometry import SpaceParams
from ballspace.holo import Lacunary


def direct_terms(freqs, values, prm):
    """t_k summed in plain floating point, block by block."""
    top = int(math.log2(max(freqs)))
    return [sum(v**prm.p for f, v in zip(freqs, values) if 2**k <= f < 2 ** (k + 1)) / 2 ** (k * prm.excess)
            for k in range(top + 1)]


def witness(exponent, kmax=30):
    """coefficients 2^{k * exponent} on frequencies 2^k."""
    return GapSeries(tuple(2**k for k in range(kmax + 1)), np.array([2.0 ** (k * exponent) for k in range(kmax + 1)]))


@pytest.mark.parametrize("s", [0.5, 0.8, 1.0])
def test_first_witness_diverges_with_exact_ratio(s):
    prm = SpaceParams(1, 2, 1, s)
    res = dyadic_block_sum(witness(prm.q / prm.p), prm)
    assert res.verdict == "diverges"
    assert np.allclose(res.ratio_trace, 2 ** (1 - s), rtol=1e-12)
    assert np.allclose(res.terms, [2.0 ** (k * (1 - s)) for k in range(31)], rtol=1e-12)


def test_second_witness_separates_the_two_spaces():
    s1, s2 = 0.6, 0.9
    base = SpaceParams(1, 2, 1, s1)
    series = witness(base.excess / base.p)
    assert dyadic_block_sum(series, base).verdict == "diverges"
    upper = SpaceParams(1, 2, 1, s2)
    res = dyadic_block_sum(series, upper)
    assert res.verdict == "converges"
    assert np.allclose(res.ratio_trace, 2 ** (-(s2 - s1)), rtol=1e-12)


def test_terms_match_direct_summation():
    prm = SpaceParams(1, 2, 1, 0.7)
    freqs = (1, 3, 7, 17, 40, 90, 200, 500)
    vals = np.array([1.0, 0.5, 2.0, 0.3, 1.2, 0.8, 3.0, 0.1])
    res = dyadic_block_sum(GapSeries(freqs, vals), prm)
    assert np.allclose(res.terms, direct_terms(freqs, vals, prm), rtol=1e-12)


def test_zero_and_empty_series():
    prm = SpaceParams(1, 2, 1, 0.8)
    zero = GapSeries((1, 2, 4), np.zeros(3))
    assert dyadic_block_sum(zero, prm).verdict == "converges"
    assert gap_verdict_N(GapSeries(()), prm)["verdict"] == "in"


def test_short_series_is_inconclusive():
    prm = SpaceParams(1, 2, 1, 0.8)
    assert dyadic_block_sum(witness(0.5, kmax=2), prm).reason == "insufficient-data"


def test_large_frequencies_do_not_overflow():
    prm = SpaceParams(1, 2, 1, 0.8)
    res = dyadic_block_sum(witness(0.5, kmax=40), prm)
    assert res.verdict == "diverges" and all(math.isfinite(t) for t in res.log_terms)


def test_flag_for_large_s():
    assert dyadic_block_sum(witness(0.5), SpaceParams(1, 2, 1, 1.5)).flags


def test_membership_from_monomial_blocks_is_exact():
    f = Lacunary.from_source({"freqs": "2^k", "coeffs": "2^(k*t/2)", "kmax": 30, "params": {"t": 0.6}})
    series = GapSeries.from_lacunary(f, 2.0)
    assert series.monomial_blocks
    for s, verdict in ((0.6, "out"), (0.9, "in")):
        prm = SpaceParams(1, 2, 1, s)
        rec = gap_verdict_N(series, prm)
        assert rec["verdict"] == verdict and rec["exact"]
        assert rec["M"]["verdict"] == dyadic_block_sum(series, prm).verdict


def test_divergent_block_means_exclude():
    prm = SpaceParams(2, 2, 1, 0.8)
    freqs = tuple(2**k for k in range(25))
    sup = np.array([2.0 ** (0.7 * k) for k in range(25)])
    means = sup * 0.5
    rec = gap_verdict_N(GapSeries(freqs, sup, means, 2.0), prm)
    assert rec["verdict"] == "out" and not rec["exact"]


def test_mean_order_must_match():
    series = GapSeries((1, 2), np.ones(2), np.ones(2), 3.0)
    with pytest.raises(InvalidGapSequence):
        gap_verdict_N(series, SpaceParams(1, 2, 1, 0.8))


def test_validation():
    with pytest.raises(InvalidGapSequence):
        GapSeries((1, 2), np.ones(2), np.array([1.0, 2.0]), 2.0)
    with pytest.raises(InvalidGapSequence):
        GapSeries((2, 2))
    with pytest.raises(InvalidGapSequence):
        GapSeries((1, 2 ** 41))


class TestHardy:
    freqs = tuple(2**k for k in range(1, 25))
    beta = 0.5

    def series(self, factor):
        means = [f**self.beta * factor(k) for k, f in enumerate(self.freqs, start=1)]
        return GapSeries(self.freqs, None, np.array(means), 2.0)

    def test_exact_growth_is_in_but_not_little(self):
        rec = gap_verdict_hardy(self.series(lambda k: 1.0), 2.0, self.beta)
        assert rec["verdict"] == "in" and rec["in_space"] and not rec["in_little"]

    def test_unbounded_ratio_is_out(self):
        assert gap_verdict_hardy(self.series(lambda k: k), 2.0, self.beta)["verdict"] == "out"

    def test_vanishing_ratio_is_little(self):
        assert gap_verdict_hardy(self.series(lambda k: 1 / k), 2.0, self.beta)["verdict"] == "little"


def test_holder_block_inequality():
    freqs = (1, 2, 3, 5, 8, 13, 21, 34, 55, 89)
    rng = np.random.default_rng(0)
    rec = holder_block_check(GapSeries(freqs, rng.uniform(0.1, 2.0, len(freqs))), 3.0)
    ratio = min(b / a for a, b in zip(freqs, freqs[1:]))
    assert rec["holds"] and rec["block_capacity"] == math.floor(math.log(2) / math.log(ratio) + 1e-12) + 1


def test_series_dsl_forms():
    s = parse_series({"freqs": [1, 2, 4], "sup_norms": [1, 1, 1]})
    assert s.gap_ratio == 2
    lac = parse_series({"lacunary": {"freqs": "3^k", "coeffs": "1", "kmax": 4}}, p=2.0)
    assert lac.freqs == (1, 3, 9, 27, 81) and lac.mean_order == 2.0
