"""Acceptance criteria, one test each.  Every test records a PASS/FAIL line
(printed in the pytest terminal summary) and then asserts it."""
import json
import math
import pathlib
import time

import numpy as np

import scenarios
from ballspace.gap import GapSeries, dyadic_block_sum
from ballspace.geometry import SpaceParams, bergman_distance, moebius, one_minus_phi_sq, pseudo_distance
from ballspace.holo import (
    Lacunary,
    Polynomial,
    atomic_synthesize,
    gleason_reconstruct,
    hadamard_product,
    riemann_stieltjes,
)
from ballspace.integrate import MeasureSpec, integrate, moebius_pullback, sample_ball
from ballspace.lattice import generate_lattice
from ballspace.spaces import DEFAULT_RADII, GridSpec, MoebiusIntegrator, base_centers, growth_norm, korenblum_profile

GOLDEN = json.loads((pathlib.Path(__file__).parent / "golden" / "calibration.json").read_text())
WIDEN = 1.25
RESULTS = []


def record(number, title, ok, detail, started, limit):
    elapsed = time.time() - started
    ok = bool(ok) and elapsed <= limit
    line = f"criterion {number:>2} {title}: {'PASS' if ok else 'FAIL'} ({detail}; {elapsed:.1f}s of {limit:g}s)"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_exact_algebra():
    start = time.time()
    rng = np.random.default_rng(101)
    worst = 0.0
    for i in range(100):
        n = 1 + i % 3
        f, g, h = (Polynomial.random(rng, n, 8) for _ in range(3))
        a, b = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
        d = rng.uniform(0.2, 3.0)
        r = rng.uniform(0.1, 0.99)
        at_zero = Polynomial.constant(g.value_at_zero() * f.value_at_zero(), n)
        mixed = f.scale(a) + g.scale(b)
        checks = [
            (gleason_reconstruct(f), f),
            (at_zero + riemann_stieltjes("T", g, f) + riemann_stieltjes("L", g, f), riemann_stieltjes("M", g, f)),
            (hadamard_product(f, g, d), hadamard_product(g, f, d)),
            (hadamard_product(mixed, h, d), hadamard_product(f, h, d).scale(a) + hadamard_product(g, h, d).scale(b)),
            (f.dilate(r).radial_derivative(), f.radial_derivative().dilate(r)),
        ]
        for lhs, rhs in checks:
            scale = max([1.0] + [abs(v) for v in rhs.coeffs.values()])
            worst = max(worst, lhs.max_coeff_diff(rhs) / scale)
    record(1, "exact algebra", worst <= 1e-12, f"max relative coefficient gap {worst:.1e}", start, 5)


def test_geometry():
    start = time.time()
    rng = np.random.default_rng(202)
    worst = {"involution": 0.0, "product": 0.0, "schwarz_pick": 0.0, "symmetry": 0.0, "triangle": 0.0}

    def points(n, size, rmax=0.98):
        v = rng.normal(size=(size, n)) + 1j * rng.normal(size=(size, n))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return v * (rmax * rng.uniform(size=(size, 1)) ** (1 / (2 * n)))

    for block in range(100):
        n = 1 + block % 3
        a = points(n, 1)[0]
        z, w, u = points(n, 100), points(n, 100), points(n, 100)
        worst["involution"] = max(worst["involution"], np.max(np.abs(moebius(a, moebius(a, z)) - z)))
        exact = (1 - np.vdot(a, a).real) * (1 - np.sum(np.abs(z) ** 2, axis=1)) / np.abs(1 - z @ np.conj(a)) ** 2
        worst["product"] = max(worst["product"], np.max(np.abs(one_minus_phi_sq(a, z) - exact)))
        r = rng.uniform(0.05, 1.0)
        worst["schwarz_pick"] = max(worst["schwarz_pick"], np.max(pseudo_distance(r * z, r * w) - pseudo_distance(z, w)))
        dzw, dwz = bergman_distance(z, w), bergman_distance(w, z)
        worst["symmetry"] = max(worst["symmetry"], np.max(np.abs(dzw - dwz)))
        worst["triangle"] = max(worst["triangle"], np.max(dzw - bergman_distance(z, u) - bergman_distance(u, w)))
    ok = all(v <= 1e-10 for v in worst.values())
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    record(2, "geometry", ok, f"10^4 tuples, worst excess {detail}", start, 5)


def test_measures():
    start = time.time()
    one = lambda z: np.ones(len(z))  # noqa: E731
    misses = []
    for n in (1, 2, 3):
        for spec in (MeasureSpec("volume"), MeasureSpec("weighted_volume", 1.5), MeasureSpec("surface")):
            est = integrate(one, spec, n, 200_000, seed=n)
            if abs(est.value - 1.0) > 3 * est.std_error + 1e-12:
                misses.append(f"{spec.kind} n={n}")
    product_gap = 0.0
    for spec in (MeasureSpec("volume"), MeasureSpec("weighted_volume", 0.5), MeasureSpec("weighted_volume", 3.0),
                 MeasureSpec("surface")):
        product_gap = max(product_gap, abs(integrate(one, spec, 1, method="product").value - 1.0))
    n = 2
    h = lambda z: (1 - np.sum(np.abs(z) ** 2, axis=1)) ** (n + 2)  # noqa: E731
    base = integrate(h, MeasureSpec("invariant"), n, 200_000, seed=1)
    rng = np.random.default_rng(303)
    for i in range(5):
        a = rng.normal(size=n) + 1j * rng.normal(size=n)
        a *= 0.9 * rng.uniform() / np.linalg.norm(a)
        moved = integrate(moebius_pullback(h, a), MeasureSpec("invariant"), n, 200_000, seed=10 + i)
        if abs(moved.value - base.value) > 3 * math.hypot(moved.std_error, base.std_error):
            misses.append(f"invariance a#{i}")
    ok = not misses and product_gap <= 1e-10
    record(3, "measures", ok, f"product-rule mass gap {product_gap:.1e}, 3-sigma misses {misses or 'none'}", start, 60)


def test_membership_witnesses():
    start = time.time()
    first = GapSeries(tuple(2**k for k in range(31)), np.array([2.0 ** (k / 2) for k in range(31)]))
    second = GapSeries(tuple(2**k for k in range(31)), np.array([2.0 ** (0.3 * k) for k in range(31)]))
    verdicts = {f"f1 s={s}": dyadic_block_sum(first, SpaceParams(1, 2, 1, s)).verdict for s in (0.5, 0.8, 1.0)}
    verdicts["f2 s=0.6"] = dyadic_block_sum(second, SpaceParams(1, 2, 1, 0.6)).verdict
    verdicts["f2 s=0.9"] = dyadic_block_sum(second, SpaceParams(1, 2, 1, 0.9)).verdict
    expected = {"f1 s=0.5": "diverges", "f1 s=0.8": "diverges", "f1 s=1.0": "diverges",
                "f2 s=0.6": "diverges", "f2 s=0.9": "converges"}
    grow = scenarios.witness_ladder("2^(k/2)", 0.5)
    flat = scenarios.witness_ladder("2^(k*0.3)", 0.9)
    ok = verdicts == expected and grow.verdict == "numerically-growing" and flat.verdict == "numerically-bounded"
    ladders = [round(e["power_value"], 3) for e in grow.evidence], [round(e["power_value"], 3) for e in flat.evidence]
    record(4, "gap verdicts and truncation ladders", ok,
           f"gap {'ok' if verdicts == expected else verdicts}; f1 ladder {ladders[0]} {grow.verdict}; "
           f"f2 ladder {ladders[1]} {flat.verdict}", start, 600)


def test_norm_equivalence():
    start = time.time()
    frozen = GOLDEN["equivalence"]["constant"]
    run = scenarios.equivalence_table(scenarios.RESEED)
    flat = [r for rows in run["ratios"].values() for row in rows for r in row.values()]
    lo, hi = 1 / (WIDEN * frozen), WIDEN * frozen
    ok = lo <= min(flat) and max(flat) <= hi
    record(5, "equivalence of norms", ok,
           f"frozen C={frozen:.3f}; reseeded ratios in [{min(flat):.3f}, {max(flat):.3f}] vs [{lo:.3f}, {hi:.3f}]",
           start, 900)


def test_large_s_collapse():
    start = time.time()
    lo, hi = GOLDEN["collapse"]["interval"]
    ratios = scenarios.collapse_ratios(scenarios.RESEED)
    ok = lo / WIDEN <= min(ratios) and max(ratios) <= hi * WIDEN and all(math.isfinite(r) for r in ratios)
    record(6, "s>1 collapse", ok,
           f"frozen [{lo:.3f}, {hi:.3f}]; reseeded ratios in [{min(ratios):.3f}, {max(ratios):.3f}]", start, 300)


def test_carleson_modes():
    start = time.time()
    factor = GOLDEN["carleson"]["factor"]
    pairs = scenarios.carleson_pairs()
    spread = max(max(t / m, m / t) for t, m in pairs.values())
    tent_delta = pairs["delta_0"][0]
    ok = spread <= factor * (1 + 1e-9) and abs(tent_delta - 1) <= 0.05 and len(pairs) == 6
    record(7, "Carleson modes", ok, f"max mode ratio {spread:.3f} vs frozen {factor:.3f}; tent(delta_0)={tent_delta:.4f}",
           start, 300)


def test_lattice_and_atomic():
    start = time.time()
    lattice_ok = True
    notes = []
    for n, r, cap in ((1, 1.0, 0.95), (1, 0.5, 0.9), (2, 1.0, 0.8)):
        lat = generate_lattice(n, r, cap, seed=0)
        sep = lat.check_separation()
        cover = lat.check_covering(10_000)
        lattice_ok &= sep >= r / 2 - 1e-9 and cover["covered"]
        notes.append(f"n={n} r={r}: {len(lat)} centers sep {sep:.3f}")
    data = scenarios.geometric_family()
    f = atomic_synthesize(data, scenarios.GEOMETRIC_PARAMS)
    growth = growth_norm(f, scenarios.GEOMETRIC_PARAMS)
    # each atom is bounded by 2^b |c_k| because 1 - |a|^2 <= 2 |1 - <z, a>|
    bound = 2**data.b * float(np.sum(np.abs(data.coeffs)))
    ladder = scenarios.geometric_ladder()
    ok = lattice_ok and growth <= bound and ladder.verdict == "numerically-bounded"
    record(8, "lattice and atomic", ok,
           f"{'; '.join(notes)}; growth {growth:.3f} <= {bound:.2f}; ladder {ladder.verdict}", start, 300)


def test_monotone_in_s():
    start = time.time()
    rng = np.random.default_rng(909)
    n = 2
    sample = sample_ball(n, 50_000, 0, -0.5)
    centers, _ = base_centers(n, GridSpec())
    violations, compared = 0, 0
    for _ in range(5):
        f = Polynomial.random(rng, n, 6)
        lo = MoebiusIntegrator(f, SpaceParams(n, 2, 1, 0.7), ("I1",), sample).evaluate(centers)["I1"][0]
        hi = MoebiusIntegrator(f, SpaceParams(n, 2, 1, 0.9), ("I1",), sample).evaluate(centers)["I1"][0]
        violations += int(np.sum(lo < hi))
        compared += len(centers)
    record(9, "monotonicity in s", violations == 0, f"{violations} violations over {compared} grid points",
           start, 600)


def test_korenblum_slope():
    start = time.time()
    prm = SpaceParams(1, 2, 1, 0.8)
    f = Lacunary.from_source({"freqs": "2^k", "coeffs": "2^(k/2)", "kmax": 12})
    prof = korenblum_profile(prm, f, DEFAULT_RADII, 100_000)
    floor = -2 * (prm.n + 1 - prm.n * prm.s) / prm.p - 0.3
    const = korenblum_profile(prm, Polynomial.constant(1.5, 1), DEFAULT_RADII, 100_000)
    ok = floor <= prof["slope"] <= 0 and abs(const["slope"]) < 0.05
    record(10, "Korenblum slope", ok,
           f"truncated f1 slope {prof['slope']:.3f} in [{floor:.2f}, 0]; constant slope {const['slope']:.1e}",
           start, 600)

