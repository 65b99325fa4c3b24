"""Level sets of the weighted modulus and the distance from f to N(p,q,s).

Each distance is the infimum of the epsilons for which a level-set quantity
is finite.  Finiteness is operationalized by comparing against a cap taken
from a calibration family of polynomials (which lie in N) at the same
relative level eps / sup(weighted modulus).  All epsilons share one set of
samples, so every trace is exactly monotone in eps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import BallspaceError
from .geometry import SpaceParams
from .holo import HoloFn, Polynomial
from .integrate import DEFAULT_BALL_BUDGET, sample_ball
from .spaces import (
    GridSpec,
    MoebiusIntegrator,
    NormEstimate,
    _tube_bank,
    base_centers,
    default_bias,
    is_zero_function,
    weighted_modulus_sup,
)

KINDS = ("value", "radial_derivative")
DISTANCES = {
    "d2": ("value", None),
    "d3": ("value", "I1"),
    "d4": ("radial_derivative", None),
    "d5": ("radial_derivative", "I3"),
    "d6": ("radial_derivative", "I2"),
    "d7": ("radial_derivative", "I4"),
}
GRID_POINTS = 25
GRID_FLOOR = 1e-4
CAP_FACTOR = 4.0
CAP_PERCENTILE = 99.0
CALIBRATION_SIZE = 8
CALIBRATION_DEGREE = 6
CALIBRATION_LEVELS = np.geomspace(1e-5, 4.0, 121)


@dataclass(frozen=True)
class LevelSetSpec:
    f: HoloFn
    eps: float
    kind: str
    params: SpaceParams

    def __post_init__(self):
        if self.kind not in KINDS:
            raise BallspaceError(f"level-set kind must be one of {KINDS}")
        if not self.eps > 0:
            raise BallspaceError("level-set epsilon must be positive")

    @property
    def weight_exponent(self) -> float:
        return level_weight(self.kind, self.params)

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex).reshape(-1, self.params.n)
        gap = 1.0 - np.sum(np.abs(z) ** 2, axis=-1)
        return level_values(self.f, self.kind, self.params, z, gap) >= self.eps


def level_weight(kind: str, params: SpaceParams) -> float:
    return params.q / params.p + (1.0 if kind == "radial_derivative" else 0.0)


def level_values(f: HoloFn, kind: str, params: SpaceParams, z: np.ndarray, gap: np.ndarray) -> np.ndarray:
    """|f|(1-|z|^2)^{q/p} or |Rf|(1-|z|^2)^{q/p+1}, with 1-|z|^2 passed in exactly."""
    mod = np.abs(f.radial(z)) if kind == "radial_derivative" else np.abs(f._eval(z))
    return mod * gap ** level_weight(kind, params)


def level_scale(f: HoloFn, kind: str, params: SpaceParams) -> float:
    """Sup of the weighted modulus; above it every level set is empty."""
    return weighted_modulus_sup(f, level_weight(kind, params), use_radial=kind == "radial_derivative")[0]


def _masses(values: np.ndarray, contrib: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """sum of contrib over {values >= e} for every e, by one sort."""
    order = np.argsort(-values, kind="stable")
    sv = values[order]
    cum = np.concatenate([[0.0], np.cumsum(contrib[order])])
    counts = np.searchsorted(-sv, -eps, side="right")
    return cum[counts]


def _tube_trace(f: HoloFn, kind: str, params: SpaceParams, eps: np.ndarray, budget, seed) -> tuple[np.ndarray, list]:
    """max over tubes of mu_eps(Q)/delta^{ns}, mu_eps = chi_Omega (1-|z|^2)^{ns} d lambda."""
    n, t = params.n, params.n * params.s
    bank = _tube_bank(n, budget, seed, max(min(t - n - 1.0, 0.0), -0.9))
    best = np.zeros(len(eps))
    where = [None] * len(eps)
    for i, j, cell in bank.cells:
        if not len(cell.weights):
            continue
        vals = level_values(f, kind, params, cell.points, cell.gap)
        contrib = cell.weights * cell.gap ** (t - n - 1.0)
        ratio = _masses(vals, contrib, eps) / bank.deltas[j] ** t
        better = ratio > best
        best = np.where(better, ratio, best)
        for k in np.flatnonzero(better):
            where[k] = {"xi": bank.xis[i], "delta": bank.deltas[j]}
    return best, where


def _moebius_trace(f: HoloFn, kind: str, form: str, params: SpaceParams, eps: np.ndarray, budget, seed,
                   grid: GridSpec) -> tuple[np.ndarray, list]:
    """max over the a-grid of the form integral restricted to the level set."""
    budget = DEFAULT_BALL_BUDGET if budget is None else budget
    sample = sample_ball(params.n, budget, seed, default_bias(params))
    integ = MoebiusIntegrator(f, params, (form,), sample)
    centers, _ = base_centers(params.n, grid)
    best = np.zeros(len(eps))
    where = [None] * len(eps)
    for a in centers:
        z, gz, contrib = integ.contributions(a)
        vals = level_values(f, kind, params, z, gz)
        m = _masses(vals, contrib[form], eps) / len(vals)
        better = m > best
        best = np.where(better, m, best)
        for k in np.flatnonzero(better):
            where[k] = a
    return best, where


def level_trace(f: HoloFn, params: SpaceParams, which: str, eps, budget=None, seed: int = 0,
                grid: GridSpec = GridSpec()) -> tuple[np.ndarray, list]:
    if which not in DISTANCES:
        raise BallspaceError(f"unknown distance {which!r}; expected one of {sorted(DISTANCES)}")
    kind, form = DISTANCES[which]
    eps = np.asarray(eps, dtype=float)
    if form is None:
        return _tube_trace(f, kind, params, eps, budget, seed)
    if not params.polynomial_ok:
        raise BallspaceError("the Moebius integrals diverge when ns + q <= n")
    return _moebius_trace(f, kind, form, params, eps, budget, seed, grid)


def level_set_carleson(spec: LevelSetSpec, budget=None, seed: int = 0) -> NormEstimate:
    """(ns)-Carleson tent norm of chi_{Omega_eps} (1-|z|^2)^{ns} d lambda."""
    which = "d2" if spec.kind == "value" else "d4"
    vals, where = level_trace(spec.f, spec.params, which, [spec.eps], budget, seed)
    return NormEstimate(float(vals[0]), 0.0, where[0], 0, True, None, 1.0, float(vals[0]), 0.0,
                        0 if budget is None else budget, f"CM_{spec.params.n * spec.params.s:g}/level-{spec.kind}")


@lru_cache(maxsize=32)
def _calibration(params: SpaceParams, which: str, budget, seed: int, dirs) -> np.ndarray:
    kind, _ = DISTANCES[which]
    rng = np.random.default_rng(np.random.SeedSequence([seed, 4242]))
    grid = GridSpec(dirs=dirs, refine=False)
    rows = []
    for _ in range(CALIBRATION_SIZE):
        h = Polynomial.random(rng, params.n, CALIBRATION_DEGREE)
        scale = level_scale(h, kind, params)
        vals, _ = level_trace(h, params, which, CALIBRATION_LEVELS * scale, budget, seed, grid)
        rows.append(vals)
    return CAP_FACTOR * np.percentile(np.array(rows), CAP_PERCENTILE, axis=0)


def calibrated_cap(params: SpaceParams, which: str, relative_eps, budget=None, seed: int = 0,
                   dirs: int | None = None) -> np.ndarray:
    """Cap at relative levels eps/scale, interpolated in log level."""
    caps = _calibration(params, which, budget, seed, dirs)
    x = np.log(np.clip(np.asarray(relative_eps, dtype=float), CALIBRATION_LEVELS[0], CALIBRATION_LEVELS[-1]))
    return np.interp(x, np.log(CALIBRATION_LEVELS), caps)


def epsilon_grid(scale: float, points: int = GRID_POINTS) -> np.ndarray:
    """Log-spaced over [1e-4 scale, 2 scale] with the scale itself inserted."""
    grid = np.geomspace(GRID_FLOOR * scale, 2.0 * scale, points)
    return np.unique(np.concatenate([grid, [scale]]))


def distance_estimate(f: HoloFn, params: SpaceParams, which: str = "d2", eps_grid=None, budget=None,
                      seed: int = 0, grid: GridSpec = GridSpec(refine=False)) -> dict:
    """Infimum of the epsilons whose level-set quantity stays under the calibrated cap.

    The grid is scanned, then one bisection point (the geometric midpoint of
    the bracketing pair) refines the transition.  Every epsilon above the
    transition must pass; if all grid points pass the value is the smallest
    grid epsilon, an upper bound.
    """
    if which not in DISTANCES:
        raise BallspaceError(f"unknown distance {which!r}; expected one of {sorted(DISTANCES)}")
    kind, _ = DISTANCES[which]
    if is_zero_function(f):
        return {"which": which, "epsilon_grid": [], "carleson_trace": [], "cap_trace": [],
                "transition_interval": [0.0, 0.0], "value": 0.0, "bracketed": True, "scale": 0.0}
    scale = level_scale(f, kind, params)
    if not scale > 0:
        return {"which": which, "epsilon_grid": [], "carleson_trace": [], "cap_trace": [],
                "transition_interval": [0.0, 0.0], "value": 0.0, "bracketed": True, "scale": 0.0}
    eps = epsilon_grid(scale) if eps_grid is None else np.sort(np.asarray(eps_grid, dtype=float))
    mids = np.sqrt(eps[1:] * eps[:-1])
    every = np.concatenate([eps, mids])
    trace_all, _ = level_trace(f, params, which, every, budget, seed, grid)
    caps_all = calibrated_cap(params, which, every / scale, budget, seed, grid.dirs)
    trace, caps = trace_all[: len(eps)], caps_all[: len(eps)]
    finite = trace <= caps
    failing = np.flatnonzero(~finite)
    report = {"which": which, "epsilon_grid": eps.tolist(), "carleson_trace": trace.tolist(),
              "cap_trace": caps.tolist(), "scale": scale}
    if not len(failing):
        return dict(report, transition_interval=[0.0, float(eps[0])], value=float(eps[0]), bracketed=False)
    last = int(failing[-1])
    if last == len(eps) - 1:
        return dict(report, transition_interval=[float(eps[-1]), math.inf], value=None, bracketed=False)
    lo, hi = float(eps[last]), float(eps[last + 1])
    k = len(eps) + last
    if trace_all[k] <= caps_all[k]:
        hi = float(every[k])
    else:
        lo = float(every[k])
    return dict(report, transition_interval=[lo, hi], value=math.sqrt(lo * hi), bracketed=True)
