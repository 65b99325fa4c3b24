"""Norm functionals, Carleson-measure norms and membership diagnostics.

Moebius-type norms are sup over a of integrals against
(1-|Phi_a(z)|^2)^{ns} d lambda(z).  Each integral is computed after the
substitution z = Phi_a(w), so one set of weighted ball samples w serves
every grid point a (common random numbers) and the sampling density can be
fitted to the boundary behaviour of the integrand in w.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import qr
from scipy.special import ndtri
from scipy.stats import qmc

from .errors import BallspaceError, UnsupportedDimension
from .geometry import SpaceParams, as_points, green_table, inner, moebius, norm_sq
from .holo import (
    Dilation,
    FnSum,
    HoloFn,
    KernelSum,
    Lacunary,
    Polynomial,
    invariant_gradient_from,
)
from .integrate import (
    DEFAULT_BALL_BUDGET,
    DEFAULT_SPHERE_BUDGET,
    BallSample,
    chunk_rng,
    mc_summary,
    parallel_map,
    radial_mean,
    sample_ball,
    sample_sphere,
    weight_constant,
)

FORMS = ("I1", "I2", "I3", "I4", "I5")
DEFAULT_RADII = (0.0, 0.3, 0.6, 0.8, 0.9, 0.95, 0.99)
DELTA_GRID = tuple(2.0 ** (1 - j) for j in range(12))  # 2, 1, ..., 2^-10


# ---------------------------------------------------------------- grids


def direction_grid(n: int, count: int | None = None) -> np.ndarray:
    """Fixed low-discrepancy directions on the sphere: equispaced angles for
    n = 1, an unscrambled Halton set pushed through the Gaussian quantile and
    normalized for n >= 2."""
    if n == 1:
        count = 16 if count is None else count
        return np.exp(2j * np.pi * np.arange(count) / count)[:, None]
    count = 64 if count is None else count
    u = qmc.Halton(d=2 * n, scramble=False).random(count + 1)[1:]
    g = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
    z = g[:, :n] + 1j * g[:, n:]
    return z / np.sqrt(norm_sq(z))[:, None]


@dataclass(frozen=True)
class GridSpec:
    dirs: int | None = None
    radii: tuple = DEFAULT_RADII
    refine: bool = True

    def directions(self, n: int) -> np.ndarray:
        return direction_grid(n, self.dirs)

    def to_dict(self) -> dict:
        return {"dirs": self.dirs, "radii": list(self.radii), "refine": self.refine}


def _neighbour_dirs(n: int, dirs: np.ndarray, j: int) -> np.ndarray:
    d = dirs[j]
    if n == 1:
        step = 2 * np.pi / len(dirs)
        offsets = np.array([-4, -3, -2, -1, 1, 2, 3, 4]) * step / 8
        return d[None, :] * np.exp(1j * offsets)[:, None]
    sim = np.abs(dirs @ np.conj(d))
    sim[j] = -np.inf
    near = np.argsort(-sim, kind="stable")[:8]
    out = []
    for k in near:
        e = dirs[k]
        # align phase before averaging so the midpoint lies between the two
        ph = np.vdot(e, d)
        ph = ph / abs(ph) if abs(ph) > 0 else 1.0
        m = d + ph * e
        out.append(m / math.sqrt(norm_sq(m)))
    return np.array(out)


@dataclass
class SupResult:
    value: float
    std_error: float
    argmax: np.ndarray
    grid_size: int
    points: np.ndarray
    values: np.ndarray
    errors: np.ndarray


def base_centers(n: int, grid: GridSpec, extra=None) -> tuple[np.ndarray, list]:
    """Structured a-grid (origin, then radius x direction) plus optional extra
    centers; the index list records (radius slot, direction slot) per point."""
    dirs = grid.directions(n)
    radii = sorted(set(float(r) for r in grid.radii))
    pts = [np.zeros(n, dtype=complex)] if 0.0 in radii else []
    index = [(0, -1)] if 0.0 in radii else []
    for i, r in enumerate(radii):
        if r == 0:
            continue
        for j, d in enumerate(dirs):
            pts.append(r * d)
            index.append((i, j))
    if extra is not None and len(extra):
        for a in np.asarray(extra, dtype=complex).reshape(-1, n):
            pts.append(a)
            index.append((-1, -1))
    return np.array(pts), index


def sup_over_centers(evaluate, n: int, grid: GridSpec, extra=None) -> SupResult:
    """Max of evaluate(a) over the structured a-grid plus one refinement pass.

    ``evaluate`` maps an array of centers (k, n) to (values, errors).
    """
    res = sup_over_centers_multi(lambda c: {"_": evaluate(c)}, n, grid, extra)
    return res["_"]


def sup_over_centers_multi(evaluate, n: int, grid: GridSpec, extra=None) -> dict:
    """As sup_over_centers for several integrands sharing one evaluation.

    ``evaluate`` returns {key: (values, errors)}.  Each key refines around its
    own argmax; the union of refinement candidates is evaluated once and
    every key takes the max over all evaluated centers.
    """
    dirs = grid.directions(n)
    radii = sorted(set(float(r) for r in grid.radii))
    pts, index = base_centers(n, grid, extra)
    base = evaluate(pts)
    if grid.refine:
        cands = []
        for vals, _ in base.values():
            c = _refinement(n, dirs, radii, index[int(np.argmax(vals))], vals, index)
            if len(c):
                cands.append(c)
        if cands:
            cand = np.concatenate(cands)
            extra_res = evaluate(cand)
            pts = np.concatenate([pts, cand])
            base = {k: (np.concatenate([v, extra_res[k][0]]), np.concatenate([e, extra_res[k][1]]))
                    for k, (v, e) in base.items()}
    out = {}
    for k, (vals, errs) in base.items():
        best = int(np.argmax(vals))
        out[k] = SupResult(float(vals[best]), float(errs[best]), pts[best], len(pts), pts, vals, errs)
    return out


def _refinement(n, dirs, radii, where, vals, index) -> np.ndarray:
    i, j = where
    if i < 0:
        return np.zeros((0, n), dtype=complex)
    if radii[i] == 0.0:
        # at the origin: go half way to the next shell along its best direction
        if len(radii) < 2:
            return np.zeros((0, n), dtype=complex)
        shell = [k for k, (ii, _) in enumerate(index) if ii == 1]
        j = index[shell[int(np.argmax(vals[shell]))]][1]
        new_r = [radii[1] / 2]
    else:
        new_r = [radii[i]]
        if i > 0:
            new_r.append((radii[i - 1] + radii[i]) / 2)
        if i + 1 < len(radii):
            new_r.append((radii[i] + radii[i + 1]) / 2)
    cdirs = np.concatenate([dirs[j:j + 1], _neighbour_dirs(n, dirs, j)])
    out = []
    for r in new_r:
        for k, d in enumerate(cdirs):
            if r == radii[i] and k == 0:
                continue
            out.append(r * d)
    return np.array(out)


def _zgrid_dirs(n: int) -> np.ndarray:
    if n == 1:
        return np.exp(2j * np.pi * np.arange(256) / 256)[:, None]
    return np.concatenate([np.eye(n, dtype=complex), direction_grid(n, 512)])


ZGRID_RADII = np.concatenate([[0.0], 1.0 - 10.0 ** (-np.arange(1, 49) / 8.0)])


def sup_over_points(fun, n: int, rounds: int = 8) -> tuple[float, np.ndarray]:
    """Max of a real function of z over a radial x directional grid, then a
    deterministic pattern search around the best point."""
    dirs = _zgrid_dirs(n)
    pts = (ZGRID_RADII[:, None, None] * dirs[None, :, :]).reshape(-1, n)
    vals = fun(pts)
    k = int(np.argmax(vals))
    best, best_val = pts[k], float(vals[k])
    r = math.sqrt(norm_sq(best))
    logd = math.log(max(1.0 - r, 1e-300))
    d = best / r if r > 0 else dirs[0]
    step_r, step_d = 0.3, (2 * math.pi / 256 if n == 1 else 0.2)
    basis = [np.eye(n, dtype=complex)[m] * ph for m in range(n) for ph in (1, 1j)]
    for _ in range(rounds):
        trials = []
        for sr in (-step_r, 0.0, step_r):
            rr = 1.0 - math.exp(min(logd + sr, 0.0))
            dd = [d] + [d * np.exp(1j * sd) for sd in (-step_d, step_d)]
            if n > 1:
                for b in basis:
                    for sgn in (-1, 1):
                        m = d + sgn * step_d * b
                        dd.append(m / math.sqrt(norm_sq(m)))
            trials.extend(rr * x for x in dd)
        trials = np.array(trials)
        tv = fun(trials)
        k = int(np.argmax(tv))
        if tv[k] > best_val:
            best, best_val = trials[k], float(tv[k])
            r = math.sqrt(norm_sq(best))
            logd = math.log(max(1.0 - r, 1e-300))
            d = best / r if r > 0 else d
        step_r /= 2
        step_d /= 2
    return best_val, best


# ---------------------------------------------------------------- space specs


@dataclass(frozen=True)
class NSpace:
    params: SpaceParams
    form: str = "I1"

    def __post_init__(self):
        if self.form not in FORMS:
            raise BallspaceError(f"unknown form {self.form!r}; expected one of {FORMS}")

    label = property(lambda self: f"N({self.params.p:g},{self.params.q:g},{self.params.s:g})/{self.form}")


@dataclass(frozen=True)
class NstarSpace:
    params: SpaceParams

    def __post_init__(self):
        if self.params.n < 2:
            raise UnsupportedDimension("the Green's-function space needs n >= 2")

    label = property(lambda self: f"Nstar({self.params.p:g},{self.params.q:g},{self.params.s:g})")


@dataclass(frozen=True)
class BergmanType:
    l: float

    label = property(lambda self: f"A^-{self.l:g}")

    def __post_init__(self):
        if not self.l > 0:
            raise BallspaceError("A^-l needs l > 0")


@dataclass(frozen=True)
class Bergman:
    p: float
    alpha: float

    label = property(lambda self: f"A^{self.p:g}_{self.alpha:g}")

    def __post_init__(self):
        if not self.p > 0:
            raise BallspaceError("Bergman exponent p must be positive")

    @property
    def derivative_order(self) -> int:
        """Smallest N with pN + alpha > -1."""
        if self.alpha > -1:
            return 0
        return int(math.floor((-1 - self.alpha) / self.p)) + 1


@dataclass(frozen=True)
class Bloch:
    alpha: float

    label = property(lambda self: f"Bloch^{self.alpha:g}")

    def __post_init__(self):
        if not self.alpha > 0:
            raise BallspaceError("the alpha-Bloch space needs alpha > 0")


@dataclass(frozen=True)
class WeightedHardy:
    alpha: float
    beta: float

    label = property(lambda self: f"H^{self.alpha:g}_{self.beta:g}")


@dataclass(frozen=True)
class TentSpace:
    m: float
    l: float
    mu_exponent: float
    """mu = (1-|z|^2)^mu_exponent d lambda."""

    label = property(lambda self: f"T^inf_{self.m:g},{self.l:g}")


# ---------------------------------------------------------------- estimates


@dataclass
class NormEstimate:
    value: float
    std_error: float
    argmax: object = None
    grid_size: int = 0
    reliable: bool = True
    verdict: str | None = None
    power: float = 1.0
    power_value: float | None = None
    power_std_error: float | None = None
    samples: int = 0
    space: str = ""

    def to_dict(self) -> dict:
        am = self.argmax
        if isinstance(am, np.ndarray):
            am = [[float(x.real), float(x.imag)] for x in am.reshape(-1)]
        return {"space": self.space, "value": self.value, "std_error": self.std_error, "argmax": am,
                "grid_size": self.grid_size, "reliable": self.reliable, "verdict": self.verdict,
                "power_value": self.power_value, "power_std_error": self.power_std_error,
                "samples": self.samples}


def _rooted(power_value: float, power_err: float, p: float) -> tuple[float, float]:
    v = power_value ** (1.0 / p)
    e = v * power_err / (p * power_value) if power_value > 0 else 0.0
    return v, e


def is_zero_function(f: HoloFn) -> bool:
    if isinstance(f, Polynomial):
        return f.is_zero()
    if isinstance(f, Lacunary):
        return not np.any(f.coeffs)
    if isinstance(f, KernelSum):
        return not np.any(f.weights)
    if isinstance(f, Dilation):
        return is_zero_function(f.inner)
    if isinstance(f, FnSum):
        return all(is_zero_function(t) for t in f.terms)
    return False


# ---------------------------------------------------------------- Moebius integrals


FORM_WEIGHT = {"I1": lambda p, q: q, "I2": lambda p, q: p + q, "I3": lambda p, q: p + q,
               "I4": lambda p, q: q, "I5": lambda p, q: p / 2 + q}


def default_bias(params: SpaceParams) -> float:
    return min(params.q + params.n * params.s - params.n - 1.0, 0.0)


def form_terms(f: HoloFn, z: np.ndarray, forms, p: float) -> dict:
    """|f|^p, |grad f|^p, |Rf|^p, |grad~ f|^p, sum |T_ij f|^p at the points z."""
    out = {}
    if "I1" in forms:
        out["I1"] = np.abs(f._eval(z)) ** p
    if any(k != "I1" for k in forms):
        g = f._grad(z)
        radial = np.sum(z * g, axis=-1)
        if "I2" in forms:
            out["I2"] = norm_sq(g) ** (p / 2)
        if "I3" in forms:
            out["I3"] = np.abs(radial) ** p
        if "I4" in forms:
            out["I4"] = norm_sq(invariant_gradient_from(g, radial, z)) ** (p / 2)
        if "I5" in forms:
            n = z.shape[-1]
            acc = np.zeros(len(z))
            for i in range(n):
                for j in range(i + 1, n):
                    t = np.conj(z[:, j]) * g[:, i] - np.conj(z[:, i]) * g[:, j]
                    acc += np.abs(t) ** p
            out["I5"] = acc
    return out


@dataclass
class MoebiusIntegrator:
    """Per-center integrals sup_a int F(z) (1-|z|^2)^{q'} (1-|Phi_a|^2)^{ns} d lambda
    for every requested form, sharing one ball sample across centers."""

    f: HoloFn
    params: SpaceParams
    forms: tuple
    sample: BallSample
    green: bool = False
    mask_fn: object = None  # optional level-set restriction, a function of z and 1-|z|^2
    _green_s: np.ndarray | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.green:
            rho = np.sqrt(1.0 - self.sample.gap)
            self._green_s = green_table(self.params.n)(rho) ** self.params.s

    def contributions(self, a: np.ndarray) -> tuple[np.ndarray, np.ndarray, dict]:
        """(z, 1-|z|^2, form -> per-sample terms whose mean is the integral) at center a."""
        prm = self.params
        w, u = self.sample.points, self.sample.gap
        z = moebius(a, w)
        d = 1.0 - inner(w, a)
        ratio = (1.0 - norm_sq(a)) / (d.real**2 + d.imag**2)  # (1-|z|^2) = ratio * u
        terms = form_terms(self.f, z, self.forms, prm.p)
        scale = self.sample.weights * len(u)
        if self.mask_fn is not None:
            scale = scale * self.mask_fn(z, ratio * u)
        out = {}
        for form, vals in terms.items():
            qq = FORM_WEIGHT[form](prm.p, prm.q)
            if self.green:
                tail = u ** (qq - prm.n - 1.0) * self._green_s
            else:
                tail = u ** (qq + prm.n * prm.s - prm.n - 1.0)
            out[form] = scale * vals * ratio**qq * tail
        return z, ratio * u, out

    def at(self, a: np.ndarray) -> dict:
        """form -> (mean, std_error) at center a."""
        return {form: mc_summary(c) for form, c in self.contributions(a)[2].items()}

    def evaluate(self, centers: np.ndarray) -> dict:
        res = parallel_map(self.at, list(centers))
        return {form: (np.array([r[form][0] for r in res]), np.array([r[form][1] for r in res]))
                for form in self.forms}


def moebius_norms(f: HoloFn, params: SpaceParams, forms=("I1",), budget: int | None = None, seed: int = 0,
                  grid: GridSpec = GridSpec(), radial_bias: float | None = None, green: bool = False,
                  mask_fn=None, include_f0: bool = True) -> dict:
    """NormEstimate per form from one shared sample; each form refines around its own argmax."""
    if f.n != params.n:
        raise BallspaceError(f"function lives in C^{f.n} but the space in C^{params.n}")
    forms = tuple(forms)
    label = "Nstar" if green else "N"
    if is_zero_function(f):
        return {k: NormEstimate(0.0, 0.0, None, 0, True, "zero-function", params.p, 0.0, 0.0, 0, f"{label}/{k}")
                for k in forms}
    if not params.polynomial_ok and not green:
        return {k: NormEstimate(math.inf, 0.0, None, 0, True, "divergent-by-theory", params.p, math.inf, 0.0, 0,
                                f"{label}/{k}") for k in forms}
    budget = DEFAULT_BALL_BUDGET if budget is None else budget
    bias = default_bias(params) if radial_bias is None else radial_bias
    sample = sample_ball(params.n, budget, seed, bias)
    f0p = abs(f.value_at_zero()) ** params.p
    integ = MoebiusIntegrator(f, params, forms, sample, green, mask_fn)
    sups = sup_over_centers_multi(integ.evaluate, params.n, grid)
    out = {}
    for form in forms:
        res = sups[form]
        extra = f0p if (form != "I1" and include_f0) else 0.0
        pv, pe = res.value + extra, res.std_error
        v, e = _rooted(pv, pe, params.p)
        out[form] = NormEstimate(v, e, res.argmax, res.grid_size, not (res.std_error > res.value),
                                 None, params.p, pv, pe, budget, f"{label}/{form}")
    return out


def all_form_values(f: HoloFn, params: SpaceParams, centers: np.ndarray, budget: int, seed: int,
                    forms=FORMS, radial_bias: float | None = None) -> dict:
    """Per-center integrals of several forms at once on shared samples."""
    bias = default_bias(params) if radial_bias is None else radial_bias
    sample = sample_ball(params.n, budget, seed, bias)
    return MoebiusIntegrator(f, params, tuple(forms), sample).evaluate(np.asarray(centers))


# ---------------------------------------------------------------- sup-type and integral norms


def weighted_modulus_sup(f: HoloFn, weight_exponent: float, use_radial: bool = False) -> tuple[float, np.ndarray]:
    """sup |f(z)| (1-|z|^2)^c, or with Rf in place of f."""
    def fun(z):
        v = np.abs(f.radial(z)) if use_radial else np.abs(f._eval(z))
        return v * (1.0 - norm_sq(z)) ** weight_exponent
    return sup_over_points(fun, f.n)


def _bergman_norm(space: Bergman, f: HoloFn, budget: int, seed: int) -> NormEstimate:
    order = space.derivative_order
    g = f
    for _ in range(order):
        g = g.radial_derivative()
    expo = space.alpha + space.p * order
    sample = sample_ball(f.n, budget, seed, expo)
    vals = np.abs(g(sample.points)) ** space.p
    pv, pe = mc_summary(sample.weights * len(vals) * weight_constant(f.n, expo) * sample.gap**expo * vals)
    v, e = _rooted(pv, pe, space.p)
    if order:
        v += abs(f.value_at_zero())
    return NormEstimate(v, e, None, 0, not (pe > pv), None, space.p, pv, pe, budget, space.label)


def hardy_radii() -> np.ndarray:
    return np.concatenate([[0.0], 1.0 - 2.0 ** (-np.arange(1, 41) / 2.0)])


def _weighted_hardy_norm(space: WeightedHardy, f: HoloFn, seed: int) -> NormEstimate:
    radii = hardy_radii()
    vals = np.array([(1 - r) ** space.beta * radial_mean(f, r, space.alpha, seed=seed) for r in radii])
    k = int(np.argmax(vals))
    return NormEstimate(float(vals[k]), 0.0, float(radii[k]), len(radii), True, None, 1.0, float(vals[k]), 0.0,
                        0, space.label)


def norm(space, f: HoloFn, budget: int | None = None, seed: int = 0, grid: GridSpec = GridSpec(),
         radial_bias: float | None = None) -> NormEstimate:
    if isinstance(space, NSpace):
        return moebius_norms(f, space.params, (space.form,), budget, seed, grid, radial_bias)[space.form]
    if isinstance(space, NstarSpace):
        prm = space.params
        if not prm.green_ok and not is_zero_function(f):
            return NormEstimate(math.inf, 0.0, None, 0, True, "divergent-by-theory", prm.p, math.inf, 0.0, 0,
                                space.label)
        return moebius_norms(f, prm, ("I1",), budget, seed, grid, radial_bias, green=True)["I1"]
    if isinstance(space, BergmanType):
        v, z = weighted_modulus_sup(f, space.l)
        return NormEstimate(v, 0.0, z, 0, True, None, 1.0, v, 0.0, 0, space.label)
    if isinstance(space, Bloch):
        v, z = weighted_modulus_sup(f, space.alpha, use_radial=True)
        v += abs(f.value_at_zero())
        return NormEstimate(v, 0.0, z, 0, True, None, 1.0, v, 0.0, 0, space.label)
    if isinstance(space, Bergman):
        return _bergman_norm(space, f, DEFAULT_BALL_BUDGET if budget is None else budget, seed)
    if isinstance(space, WeightedHardy):
        return _weighted_hardy_norm(space, f, seed)
    if isinstance(space, TentSpace):
        return tent_space_norm(space, f, budget, seed)
    raise BallspaceError(f"unsupported space {space!r}")


def growth_norm(f: HoloFn, params: SpaceParams) -> float:
    """|f|_{q/p} = sup |f(z)| (1-|z|^2)^{q/p}."""
    return weighted_modulus_sup(f, params.q / params.p)[0]


# ---------------------------------------------------------------- Carleson measures


@dataclass(frozen=True)
class DiscreteMeasure:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        if pts.ndim == 1:
            pts = pts.reshape(len(self.weights), -1) if len(self.weights) else pts.reshape(0, 1)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(w) != len(pts):
            raise BallspaceError("one weight per atom is required")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise BallspaceError("atom weights must be finite and nonnegative")
        if len(pts) and np.any(norm_sq(pts) >= 1):
            raise BallspaceError("atoms must lie inside the ball")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class SampledMeasure:
    """h(z) d lambda(z); ``density(z, gap)`` gets 1-|z|^2 separately for accuracy."""

    n: int
    density: object
    radial_bias: float = 0.0


def _unitary_with_first_column(xi: np.ndarray) -> np.ndarray:
    n = xi.size
    q, r = qr(np.column_stack([xi, np.eye(n, dtype=complex)]))
    q = q[:, :n].copy()
    q[:, 0] *= r[0, 0]
    return q


@dataclass(frozen=True)
class TubeSample:
    points: np.ndarray
    weights: np.ndarray
    gap: np.ndarray


def sample_tube(n: int, xi, delta: float, count: int, seed: int, stream: int, radial_bias: float = 0.0) -> TubeSample:
    """Weighted samples with sum(w h(z)) ~ integral of h over Q_delta(xi) in dV.

    Proposals fill the tent {1-2delta < |z| < 1, |1-<z/|z|,xi>| < 2delta},
    which contains the tube, using radial density prop. to (1-|z|^2)^bias
    and the exact law of <zeta, xi> for uniform zeta on the sphere.
    """
    xi = as_points(xi).reshape(-1)
    rng = chunk_rng(seed, stream, 0)
    rho = 2.0 * delta
    u_hi = 1.0 - max(0.0, 1.0 - rho) ** 2
    g1 = radial_bias + 1.0
    u = u_hi * rng.random(count) ** (1.0 / g1)
    u = np.maximum(u, np.finfo(float).tiny)
    w_rad = n * (1.0 - u) ** (n - 1) * u_hi**g1 / (g1 * u**radial_bias)
    if rho >= 2.0:
        zeta = random_sphere(rng, n, count)
        w_dir = np.ones(count)
    elif n == 1:
        tmax = 2.0 * math.asin(rho / 2.0)
        theta = rng.uniform(-tmax, tmax, count)
        zeta = (xi[0] * np.exp(1j * theta))[:, None]
        w_dir = np.full(count, tmax / math.pi)
    else:
        rr = rho * np.sqrt(rng.random(count))
        w1 = 1.0 - rr * np.exp(2j * np.pi * rng.random(count))
        inside = norm_sq(w1[:, None]) < 1.0
        rest = np.sqrt(np.clip(1.0 - np.abs(w1) ** 2, 0.0, None))
        v = random_sphere(rng, n - 1, count) * rest[:, None]
        local = np.column_stack([w1, v])
        zeta = local @ _unitary_with_first_column(xi).T
        w_dir = np.where(inside, rho**2 * (n - 1) * rest ** (2 * (n - 2)), 0.0)
    z = np.sqrt(1.0 - u)[:, None] * zeta
    keep = (np.abs(1.0 - z @ np.conj(xi)) < delta) & (w_dir > 0)
    return TubeSample(z[keep], (w_rad * w_dir)[keep] / count, u[keep])


def random_sphere(rng, n, count):
    g = rng.standard_normal((count, 2 * n))
    zz = g[:, :n] + 1j * g[:, n:]
    return zz / np.sqrt(norm_sq(zz))[:, None]


@dataclass
class TubeBank:
    """Shared tube samples over a (xi, delta) grid."""

    n: int
    xis: np.ndarray
    deltas: tuple
    per_cell: int
    seed: int
    radial_bias: float
    cells: list = field(default_factory=list)

    def __post_init__(self):
        specs = [(i, j) for i in range(len(self.xis)) for j in range(len(self.deltas))]

        def make(k):
            i, j = specs[k]
            return (i, j, sample_tube(self.n, self.xis[i], self.deltas[j], self.per_cell, self.seed, 1000 + k,
                                      self.radial_bias))
        self.cells = parallel_map(make, range(len(specs)))

    def sup_ratio(self, values_fn, t: float) -> tuple[float, float, tuple]:
        """max over cells of mu(Q)/delta^t, mu(Q) = sum w * values_fn(cell)."""
        best, err, where = 0.0, 0.0, None
        for i, j, cell in self.cells:
            vals = values_fn(cell)
            contrib = cell.weights * vals
            mass = float(np.sum(contrib))
            var = float(np.sum(contrib**2)) - mass**2 / self.per_cell
            se = math.sqrt(max(var, 0.0))
            ratio = mass / self.deltas[j] ** t
            if ratio > best or where is None:
                best, err, where = ratio, se / self.deltas[j] ** t, (i, j)
        return best, err, where


def _tube_bank(n: int, budget: int | None, seed: int, radial_bias: float, extra_dirs=None) -> TubeBank:
    xis = direction_grid(n)
    if extra_dirs is not None and len(extra_dirs):
        xis = np.concatenate([xis, extra_dirs])
    budget = DEFAULT_BALL_BUDGET if budget is None else budget
    per_cell = max(2000, budget // (len(xis) * len(DELTA_GRID)))
    return TubeBank(n, xis, DELTA_GRID, per_cell, seed, radial_bias)


def _atom_tent_sup(mu: DiscreteMeasure, t: float, xis: np.ndarray) -> tuple[float, tuple]:
    """Exact sup over delta in (0, 2] of mu(Q_delta(xi))/delta^t for each xi:
    the sup is approached as delta decreases to an atom distance."""
    best, where = 0.0, None
    for xi in xis:
        d = np.abs(1.0 - mu.points @ np.conj(xi))
        order = np.argsort(d, kind="stable")
        ds, cum = d[order], np.cumsum(mu.weights[order])
        # groups of equal distance count together
        last = np.r_[ds[1:] != ds[:-1], True]
        ds, cum = ds[last], cum[last]
        ok = ds < 2.0
        if not np.any(ok):
            continue
        ratios = cum[ok] / ds[ok] ** t
        k = int(np.argmax(ratios))
        if ratios[k] > best or where is None:
            best, where = float(ratios[k]), (xi, float(ds[ok][k]))
    return best, where


def _atom_directions(mu: DiscreteMeasure) -> np.ndarray:
    r = np.sqrt(norm_sq(mu.points))
    nz = r > 0
    return mu.points[nz] / r[nz, None]


def carleson_norm(mu, exponent: float, mode: str = "tent_sup", grid: GridSpec = GridSpec(),
                  budget: int | None = None, seed: int = 0) -> NormEstimate:
    if not exponent > 0:
        raise BallspaceError("Carleson exponent must be positive")
    if mode not in ("tent_sup", "moebius_sup"):
        raise BallspaceError(f"unknown Carleson mode {mode!r}")
    label = f"CM_{exponent:g}/{mode}"
    if isinstance(mu, DiscreteMeasure):
        if len(mu.weights) == 0 or not np.any(mu.weights):
            return NormEstimate(0.0, 0.0, None, 0, True, None, 1.0, 0.0, 0.0, 0, label)
        n = mu.n
        if mode == "tent_sup":
            xis = np.concatenate([direction_grid(n, grid.dirs), _atom_directions(mu)])
            v, where = _atom_tent_sup(mu, exponent, xis)
            arg = None if where is None else {"xi": where[0], "delta": where[1]}
            return NormEstimate(v, 0.0, arg, len(xis), True, None, 1.0, v, 0.0, 0, label)

        def evaluate(centers):
            d = 1.0 - mu.points @ np.conj(centers).T  # (atoms, centers)
            k = (1.0 - norm_sq(centers))[None, :] / (d.real**2 + d.imag**2)
            vals = (mu.weights[:, None] * k**exponent).sum(axis=0)
            return vals, np.zeros_like(vals)
        res = sup_over_centers(evaluate, n, grid, extra=mu.points)
        return NormEstimate(res.value, 0.0, res.argmax, res.grid_size, True, None, 1.0, res.value, 0.0, 0, label)

    n = mu.n
    if mode == "tent_sup":
        bank = _tube_bank(n, budget, seed, mu.radial_bias)
        v, e, where = bank.sup_ratio(lambda c: mu.density(c.points, c.gap) * c.gap ** (-(n + 1.0)), exponent)
        arg = None if where is None else {"xi": bank.xis[where[0]], "delta": bank.deltas[where[1]]}
        return NormEstimate(v, e, arg, len(bank.cells), not (e > v), None, 1.0, v, e, bank.per_cell, label)
    budget = DEFAULT_BALL_BUDGET if budget is None else budget
    sample = sample_ball(n, budget, seed, mu.radial_bias)

    def evaluate(centers):
        vals, errs = [], []
        for a in centers:
            z = moebius(a, sample.points)
            d = 1.0 - inner(sample.points, a)
            ratio = (1.0 - norm_sq(a)) / (d.real**2 + d.imag**2)
            gz = ratio * sample.gap
            # ((1-|a|^2)/|1-<z,a>|^2) = |1-<w,a>|^2/(1-|a|^2) after z = Phi_a(w)
            kern = (1.0 / ratio) ** exponent
            m, s = mc_summary(sample.weights * budget * kern * mu.density(z, gz) * sample.gap ** (-(n + 1.0)))
            vals.append(m)
            errs.append(s)
        return np.array(vals), np.array(errs)
    res = sup_over_centers(evaluate, n, grid)
    return NormEstimate(res.value, res.std_error, res.argmax, res.grid_size, not (res.std_error > res.value), None,
                        1.0, res.value, res.std_error, budget, label)


def function_measure(f: HoloFn, params: SpaceParams) -> SampledMeasure:
    """|f|^p (1-|z|^2)^{q+ns} d lambda, an (ns)-Carleson measure exactly when f is in N."""
    c = params.q + params.n * params.s

    def density(z, gap):
        return np.abs(f._eval(z)) ** params.p * gap**c
    return SampledMeasure(params.n, density, min(c - params.n - 1.0, 0.0))


def tent_space_norm(space: TentSpace, f: HoloFn, budget: int | None, seed: int) -> NormEstimate:
    n = f.n
    c = space.mu_exponent
    bank = _tube_bank(n, budget, seed, max(min(c - n - 1.0, 0.0), -0.95))
    v, e, where = bank.sup_ratio(lambda cell: np.abs(f._eval(cell.points)) ** space.m * cell.gap ** (c - n - 1.0),
                                 n * space.l)
    val, err = _rooted(v, e, space.m)
    arg = None if where is None else {"xi": bank.xis[where[0]], "delta": bank.deltas[where[1]]}
    return NormEstimate(val, err, arg, len(bank.cells), not (e > v), None, space.m, v, e, bank.per_cell, space.label)


# ---------------------------------------------------------------- membership and profiles

LADDER = (8, 12, 16)


@dataclass
class MembershipReport:
    verdict: str
    reason: str
    evidence: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "reason": self.reason, "evidence": self.evidence}


def ladder_verdict(estimates: list) -> str:
    """numerically-growing: >= 2x per rung with disjoint 3-sigma intervals;
    numerically-bounded: every successive ratio within [0.8, 1.25]."""
    vals = [e.power_value for e in estimates]
    errs = [e.power_std_error or 0.0 for e in estimates]
    if any(not e.reliable for e in estimates) or any(v is None or not math.isfinite(v) for v in vals):
        return "inconclusive"
    growing = all(b >= 2 * a and b - 3 * eb > a + 3 * ea for a, b, ea, eb in zip(vals, vals[1:], errs, errs[1:]))
    if growing:
        return "numerically-growing"
    if all(a > 0 and 0.8 <= b / a <= 1.25 for a, b in zip(vals, vals[1:])):
        return "numerically-bounded"
    return "inconclusive"


def _has_generator(f) -> bool:
    return isinstance(f, Lacunary) and f.source is not None


def membership_report(space, f: HoloFn, budget: int | None = None, seed: int = 0, grid: GridSpec = GridSpec(),
                      family=None, ladder=LADDER) -> MembershipReport:
    """Theory short-circuits first, then a truncation ladder when f stands for
    an infinite family (a generated lacunary series or an explicit ``family``
    callable K -> HoloFn)."""
    if family is None and _has_generator(f):
        family = lambda k: f.with_terms(k + 1)  # noqa: E731  (terms k = 0..K)
    if isinstance(space, (NSpace, NstarSpace)):
        prm = space.params
        zero = family is None and is_zero_function(f)
        if zero:
            return MembershipReport("in-by-theory", "zero function")
        if isinstance(space, NstarSpace) and not prm.green_ok:
            return MembershipReport("out-by-theory", "s >= n/(n-1): the Green's-function space is {0}")
        if not prm.polynomial_ok:
            return MembershipReport("out-by-theory", "ns + q <= n: only the zero function has a finite norm")
        if family is None and isinstance(f, (Polynomial, Lacunary)):
            return MembershipReport("in-by-theory", "polynomials lie in N when ns + q > n")
        if family is None and isinstance(f, KernelSum) and len(f.weights) and np.all(norm_sq(f.centers) < 1):
            return MembershipReport("in-by-theory", "finite kernel sums are bounded holomorphic on the closed ball")
    if family is None:
        est = norm(space, f, budget, seed, grid)
        verdict = "numerically-bounded" if est.reliable and math.isfinite(est.value) else "inconclusive"
        return MembershipReport(verdict, "single estimate", [est.to_dict()])
    estimates = []
    for k in ladder:
        e = norm(space, family(k), budget, seed, grid)
        estimates.append(e)
    rows = [dict(e.to_dict(), truncation=k) for k, e in zip(ladder, estimates)]
    return MembershipReport(ladder_verdict(estimates), "truncation ladder", rows)


def decay_profile(space: NSpace, f: HoloFn, radii, budget: int | None = None, seed: int = 0,
                  dirs: int | None = None) -> list:
    """Per shell |a| = r, the max over directions of the Moebius integral."""
    prm = space.params
    if is_zero_function(f):
        return [{"r": float(r), "value": 0.0, "std_error": 0.0} for r in radii]
    if not prm.polynomial_ok:
        raise BallspaceError("the Moebius integrals diverge when ns + q <= n")
    budget = DEFAULT_BALL_BUDGET if budget is None else budget
    sample = sample_ball(prm.n, budget, seed, default_bias(prm))
    integ = MoebiusIntegrator(f, prm, (space.form,), sample)
    d = direction_grid(prm.n, dirs)
    rows = []
    for r in radii:
        centers = np.zeros((1, prm.n), dtype=complex) if r == 0 else r * d
        vals, errs = integ.evaluate(centers)[space.form]
        k = int(np.argmax(vals))
        rows.append({"r": float(r), "value": float(vals[k]), "std_error": float(errs[k])})
    return rows


def korenblum_profile(params: SpaceParams, f: HoloFn, radii, budget: int | None = None, seed: int = 0,
                      grid: GridSpec = GridSpec()) -> dict:
    """norm(f_r) against r with the least-squares slope of log norm on log(1-r^2)."""
    rows = []
    for r in radii:
        fr = Polynomial.constant(f.value_at_zero(), f.n) if r == 0 else f.dilate(r)
        est = norm(NSpace(params), fr, budget, seed, grid)
        rows.append({"r": float(r), "norm": est.value, "std_error": est.std_error, "reliable": est.reliable})
    # rows with zero norm (f(0) = 0 at r = 0, or f = 0) carry no log information
    fit = [row for row in rows if row["norm"] > 0]
    x = np.log(1.0 - np.asarray([row["r"] for row in fit]) ** 2)
    y = np.log(np.asarray([row["norm"] for row in fit]))
    slope = float(np.polyfit(x, y, 1)[0]) if len(fit) >= 2 and np.ptp(x) > 0 else 0.0
    bound = -2.0 * (params.n + 1 - params.n * params.s) / params.p
    return {"rows": rows, "slope": slope, "bound_exponent": bound}
