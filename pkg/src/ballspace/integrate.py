"""Monte-Carlo and product-rule integration on the ball and the sphere.

All samplers draw in fixed-size chunks; chunk ``c`` of stream ``s`` under
seed ``seed`` is generated from ``SeedSequence([seed, s, c])``.  Results
therefore do not depend on how many worker threads process the chunks, and
partial sums are always combined in chunk order.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import betaln, gammaln, roots_jacobi

from .errors import BallspaceError, EmptyBudget, InvalidBias
from .geometry import as_points, moebius, norm_sq

CHUNK = 8192
DEFAULT_BALL_BUDGET = 200_000
DEFAULT_SPHERE_BUDGET = 20_000

_threads: int | None = None


def set_threads(count: int | None) -> None:
    global _threads
    if count is not None and count < 1:
        raise BallspaceError("thread count must be >= 1")
    _threads = count


def worker_count() -> int:
    if _threads is not None:
        return _threads
    env = os.environ.get("BALLSPACE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise BallspaceError(f"BALLSPACE_THREADS must be an integer, got {env!r}") from None
    return 1


def parallel_map(fn, items) -> list:
    """Map preserving input order; the worker count never changes results."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def chunk_rng(seed: int, stream: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, stream, chunk]))


def _chunk_sizes(count: int):
    full, rest = divmod(count, CHUNK)
    return [CHUNK] * full + ([rest] if rest else [])


def random_directions(rng: np.random.Generator, n: int, size: int) -> np.ndarray:
    g = rng.standard_normal((size, 2 * n))
    z = g[:, :n] + 1j * g[:, n:]
    return z / np.sqrt(norm_sq(z))[:, None]


# ---------------------------------------------------------------- samples


@dataclass(frozen=True)
class BallSample:
    """Weighted ball samples: sum(weights * h(points)) estimates the integral
    of h against normalized volume.  ``gap`` holds 1 - |z|^2 exactly as drawn."""

    points: np.ndarray
    weights: np.ndarray
    gap: np.ndarray
    radial_bias: float
    seed: int

    def __len__(self):
        return len(self.weights)


def _ball_chunk(n: int, size: int, gamma: float, rng: np.random.Generator):
    # 1 - |z|^2 ~ Beta(gamma + 1, n) has density prop. to t^(n-1) (1-t)^gamma in t = |z|^2
    u = rng.beta(gamma + 1.0, n, size=size)
    u = np.maximum(u, np.finfo(float).tiny)
    directions = random_directions(rng, n, size)
    points = np.sqrt(1.0 - u)[:, None] * directions
    return points, u


def sample_ball(n: int, count: int, seed: int = 0, radial_bias: float = 0.0, stream: int = 0) -> BallSample:
    """Importance samples with radial density prop. to r^(2n-1) (1-r^2)^radial_bias."""
    if count < 1:
        raise EmptyBudget("sample count must be >= 1")
    if not radial_bias > -1:
        raise InvalidBias(f"radial_bias must exceed -1, got {radial_bias}")
    sizes = _chunk_sizes(count)
    parts = parallel_map(lambda c: _ball_chunk(n, sizes[c], radial_bias, chunk_rng(seed, stream, c)), range(len(sizes)))
    points = np.concatenate([p for p, _ in parts])
    gap = np.concatenate([u for _, u in parts])
    scale = n * math.exp(betaln(n, radial_bias + 1.0)) / count
    weights = scale * gap ** (-radial_bias)
    return BallSample(points, weights, gap, radial_bias, seed)


def sample_sphere(n: int, count: int, seed: int = 0, stream: int = 1) -> np.ndarray:
    if count < 1:
        raise EmptyBudget("sample count must be >= 1")
    sizes = _chunk_sizes(count)
    parts = parallel_map(lambda c: random_directions(chunk_rng(seed, stream, c), n, sizes[c]), range(len(sizes)))
    return np.concatenate(parts)


def disk_product_rule(radial: int = 64, angular: int = 64, radial_bias: float = 0.0):
    """Nodes and weights on the unit disk for the normalized area measure.

    Gauss-Jacobi in t = |z|^2 with weight (1-t)^radial_bias (plain
    Gauss-Legendre when the bias is 0) times a uniform angular grid.
    Returns (points of shape (m, 1), weights, gap).
    """
    x, w = roots_jacobi(radial, radial_bias, 0.0)
    t = 0.5 * (x + 1.0)
    gap = 0.5 * (1.0 - x)
    wt = w * 2.0 ** (-radial_bias - 1.0) * gap ** (-radial_bias)
    theta = 2.0 * np.pi * np.arange(angular) / angular
    points = (np.sqrt(t)[:, None] * np.exp(1j * theta)[None, :]).reshape(-1, 1)
    weights = np.repeat(wt / angular, angular)
    return points, weights, np.repeat(gap, angular)


# ---------------------------------------------------------------- measures


@dataclass(frozen=True)
class MeasureSpec:
    kind: str  # volume | weighted_volume | invariant | surface
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind not in ("volume", "weighted_volume", "invariant", "surface"):
            raise BallspaceError(f"unknown measure kind {self.kind!r}")
        if self.kind == "weighted_volume" and not self.alpha > -1:
            raise BallspaceError("weighted volume needs alpha > -1")


def weight_constant(n: int, alpha: float) -> float:
    """c_alpha making (1-|z|^2)^alpha dV a probability measure."""
    return math.exp(gammaln(n + alpha + 1) - gammaln(n + 1) - gammaln(alpha + 1))


@dataclass(frozen=True)
class IntegralEstimate:
    value: float
    std_error: float
    samples: int
    method: str
    order: str | None = None

    @property
    def reliable(self) -> bool:
        return not (self.std_error > abs(self.value))

    def to_dict(self) -> dict:
        return {"value": self.value, "std_error": self.std_error, "samples": self.samples,
                "method": self.method, "order": self.order, "reliable": self.reliable}


def mc_summary(contrib: np.ndarray) -> tuple[float, float]:
    """Mean and standard error of per-sample contributions already scaled by count."""
    count = contrib.size
    partial = np.array([c.sum() for c in np.array_split(contrib, max(1, math.ceil(count / CHUNK)))])
    value = float(partial.sum()) / count
    if count < 2:
        return value, 0.0
    return value, float(np.std(contrib, ddof=1) / math.sqrt(count))


def _density(measure: MeasureSpec, n: int, gap: np.ndarray) -> np.ndarray:
    if measure.kind == "volume":
        return np.ones_like(gap)
    if measure.kind == "weighted_volume":
        return weight_constant(n, measure.alpha) * gap**measure.alpha
    return gap ** (-(n + 1.0))


def default_bias(measure: MeasureSpec) -> float:
    if measure.kind == "weighted_volume":
        return measure.alpha
    return 0.0


def integrate(f, measure: MeasureSpec, n: int, budget: int | None = None, seed: int = 0,
              method: str = "mc", radial_bias: float | None = None, order: int = 64) -> IntegralEstimate:
    """Integrate a real integrand f(points) against the given measure."""
    if measure.kind == "surface":
        budget = DEFAULT_SPHERE_BUDGET if budget is None else budget
        if n == 1 and method == "product":
            theta = 2.0 * np.pi * np.arange(order) / order
            vals = np.asarray(f(np.exp(1j * theta)[:, None]), dtype=float)
            return IntegralEstimate(float(vals.mean()), 0.0, order, "product_quadrature", f"trapezoid-{order}")
        pts = sample_sphere(n, budget, seed)
        value, err = mc_summary(np.asarray(f(pts), dtype=float))
        return IntegralEstimate(value, err, budget, "mc")

    bias = default_bias(measure) if radial_bias is None else radial_bias
    if method == "product":
        if n != 1:
            raise BallspaceError("the product rule is available for n = 1 only")
        pts, w, gap = disk_product_rule(order, order, bias)
        vals = np.asarray(f(pts), dtype=float) * _density(measure, n, gap)
        return IntegralEstimate(float(np.sum(w * vals)), 0.0, w.size, "product_quadrature",
                                f"gauss-jacobi-{order}x{order}")
    budget = DEFAULT_BALL_BUDGET if budget is None else budget
    sample = sample_ball(n, budget, seed, bias)
    vals = np.asarray(f(sample.points), dtype=float) * _density(measure, n, sample.gap)
    value, err = mc_summary(sample.weights * budget * vals)
    return IntegralEstimate(value, err, budget, "mc")


def moebius_pullback(h, a):
    """h o Phi_a, for invariance checks."""
    a = as_points(a)
    return lambda z: h(moebius(a, z))


# ---------------------------------------------------------------- sphere quantities


def sphere_moment(alpha, k: float, method: str = "exact", budget: int = DEFAULT_SPHERE_BUDGET, seed: int = 0) -> float:
    """omega_{alpha,k} = (integral over S of |xi^alpha|^k)^(1/k).

    The vector (|xi_1|^2, ..., |xi_n|^2) is uniform on the simplex, so the
    k-th moment is a Dirichlet moment with a closed form for every k > 0.
    """
    alpha = np.asarray(alpha, dtype=float)
    n = alpha.size
    if not k > 0:
        raise BallspaceError("moment order k must be positive")
    if method == "exact":
        half = alpha * k / 2.0
        log_m = gammaln(n) + np.sum(gammaln(1.0 + half)) - gammaln(n + half.sum())
        return float(math.exp(log_m / k))
    pts = sample_sphere(n, budget, seed)
    vals = np.prod(np.abs(pts) ** alpha, axis=1) ** k
    return float(vals.mean() ** (1.0 / k))


def radial_mean(f, r: float, k: float, n: int | None = None, budget: int = DEFAULT_SPHERE_BUDGET,
                seed: int = 0, angular: int = 1024) -> float:
    """M_k(r, f).  Exact for polynomials when k = 2; an angular grid for
    n = 1; shared-seed sphere samples otherwise."""
    if not 0 <= r < 1 and not (r == 1 and hasattr(f, "coeffs")):
        raise BallspaceError("radial mean needs 0 <= r < 1")
    n = getattr(f, "n", n)
    if k == 2 and hasattr(f, "sphere_l2_sq"):
        return math.sqrt(f.sphere_l2_sq(r))
    if n == 1:
        theta = 2.0 * np.pi * np.arange(angular) / angular
        vals = np.abs(f(r * np.exp(1j * theta)[:, None])) ** k
        return float(vals.mean() ** (1.0 / k))
    pts = sample_sphere(n, budget, seed)
    vals = np.abs(f(r * pts)) ** k
    return float(vals.mean() ** (1.0 / k))
