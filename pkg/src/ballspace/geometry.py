"""Points of the unit ball in C^n, Moebius maps, the Bergman metric,
Carleson regions and the invariant Green's function.

Points are complex numpy arrays whose last axis has length n, so every
function here works on a single point of shape ``(n,)`` or on a batch of
shape ``(m, n)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import warnings

import numpy as np
from scipy import integrate as _quad
from scipy.interpolate import CubicSpline

from .errors import BallspaceError, DivergentGreen, InvalidAutomorphismCenter, UnsupportedDimension

BOUNDARY_TOL = 1e-12


def as_points(z) -> np.ndarray:
    arr = np.asarray(z, dtype=complex)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    return arr


def inner(z, w) -> np.ndarray:
    """Hermitian product <z, w> = sum z_k conj(w_k) over the last axis."""
    return np.sum(np.asarray(z) * np.conj(np.asarray(w)), axis=-1)


def norm_sq(z) -> np.ndarray:
    z = np.asarray(z)
    return np.sum(z.real**2 + z.imag**2, axis=-1)


def normalize(z) -> np.ndarray:
    """Project onto the unit sphere; boundary points are kept unnormalized
    until this explicit step."""
    z = as_points(z)
    r = np.sqrt(norm_sq(z))
    if np.any(r == 0):
        raise BallspaceError("cannot normalize the origin")
    return z / r[..., None] if z.ndim > 1 else z / r


def is_boundary(z, tol: float = BOUNDARY_TOL) -> np.ndarray:
    return np.abs(np.sqrt(norm_sq(z)) - 1.0) <= tol


@dataclass(frozen=True)
class SpaceParams:
    n: int
    p: float
    q: float
    s: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise BallspaceError(f"dimension n must be a positive integer, got {self.n}")
        if not self.p >= 1:
            raise BallspaceError(f"p must be >= 1, got {self.p}")
        if not self.q > 0:
            raise BallspaceError(f"q must be > 0, got {self.q}")
        if not self.s > 0:
            raise BallspaceError(f"s must be > 0, got {self.s}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def excess(self) -> float:
        """ns + q - n, positive exactly when polynomials belong to N."""
        return self.n * self.s + self.q - self.n

    @property
    def polynomial_ok(self) -> bool:
        return self.excess > 0

    @property
    def big_s(self) -> bool:
        return self.s > 1

    @property
    def green_threshold(self) -> float | None:
        return None if self.n < 2 else self.n / (self.n - 1)

    @property
    def green_ok(self) -> bool | None:
        t = self.green_threshold
        return None if t is None else self.s < t

    def to_dict(self) -> dict:
        return {"n": self.n, "p": self.p, "q": self.q, "s": self.s}


def _check_center(a) -> np.ndarray:
    a = as_points(a)
    if np.any(norm_sq(a) >= 1.0):
        raise InvalidAutomorphismCenter("automorphism center must satisfy |a| < 1")
    return a


def moebius(a, z) -> np.ndarray:
    """Phi_a(z), the involution of the ball exchanging 0 and a.

    Uses (1 - s_a)/|a|^2 = 1/(1 + s_a) so that a = 0 needs no special case.
    """
    a = _check_center(a)
    z = as_points(z)
    if np.any(norm_sq(z) > 1.0 + BOUNDARY_TOL):
        raise BallspaceError("moebius argument must lie in the closed ball")
    aa = norm_sq(a)
    s = np.sqrt(1.0 - aa)
    za = inner(z, a)
    num = a - s[..., None] * z - (za / (1.0 + s))[..., None] * a
    return num / (1.0 - za)[..., None]


def one_minus_phi_sq(a, z) -> np.ndarray:
    """1 - |Phi_a(z)|^2 by the quotient identity (no cancellation near S)."""
    a = _check_center(a)
    z = as_points(z)
    d = 1.0 - inner(z, a)
    return (1.0 - norm_sq(a)) * (1.0 - norm_sq(z)) / (d.real**2 + d.imag**2)


def pseudo_distance(z, w) -> np.ndarray:
    """|Phi_z(w)|."""
    return np.sqrt(norm_sq(moebius(z, w)))


def bergman_distance(z, w) -> np.ndarray:
    t = pseudo_distance(z, w)
    v = np.minimum(one_minus_phi_sq(z, w), 1.0)
    # 1/2 log((1+t)/(1-t)) with 1 - t = (1 - t^2)/(1 + t)
    beta = np.log1p(t) - 0.5 * np.log(v)
    same = np.all(as_points(z) == as_points(w), axis=-1)
    return np.where(same, 0.0, beta)


def tanh_radius(r: float) -> float:
    """Euclidean radius R of D(a, R) equal to the metric ball E(a, r)."""
    return float(np.tanh(r))


# ---------------------------------------------------------------- regions


@dataclass(frozen=True)
class Tube:
    xi: np.ndarray
    delta: float

    def contains(self, z) -> np.ndarray:
        return np.abs(1.0 - inner(as_points(z), self.xi)) < self.delta


@dataclass(frozen=True)
class Tent:
    xi: np.ndarray
    delta: float

    def contains(self, z) -> np.ndarray:
        z = as_points(z)
        r = np.sqrt(norm_sq(z))
        shell = (r > 1.0 - self.delta) & (r < 1.0)
        safe = np.where(r > 0, r, 1.0)
        direction = np.abs(1.0 - inner(z, self.xi) / safe) < self.delta
        # the origin has no direction; it sits in the tent only when the
        # direction cap is the whole sphere
        direction = np.where(r > 0, direction, self.delta > 2.0)
        return shell & direction


@dataclass(frozen=True)
class MetricBall:
    a: np.ndarray
    r: float

    def contains(self, z) -> np.ndarray:
        return bergman_distance(self.a, z) < self.r


@dataclass(frozen=True)
class EuclidBallD:
    a: np.ndarray
    R: float

    def contains(self, z) -> np.ndarray:
        return pseudo_distance(self.a, z) < self.R


def region_contains(region, z) -> np.ndarray:
    return region.contains(z)


# ---------------------------------------------------------------- Green


def _green_integrand(t: float, n: int) -> float:
    return (1.0 - t * t) ** (n - 1) * t ** (1 - 2 * n)


def green_radial(rho: float, n: int, epsabs: float = 1e-10) -> float:
    """g as a function of rho = |z|, by adaptive Gauss-Kronrod quadrature."""
    if n < 2:
        raise UnsupportedDimension("the invariant Green's function needs n >= 2")
    if rho <= 0:
        raise DivergentGreen("the Green's function is singular at the origin")
    if rho >= 1:
        return 0.0
    val, _ = _quad.quad(_green_integrand, rho, 1.0, args=(n,), epsabs=epsabs, epsrel=1e-12, limit=200)
    return (n + 1) / (2 * n) * val


def green_function(z) -> float:
    z = as_points(z)
    return green_radial(float(np.sqrt(norm_sq(z))), z.shape[-1])


def green_invariant(z, a) -> float:
    w = moebius(a, z)
    if norm_sq(w) == 0:
        raise DivergentGreen("G(z, a) is singular at z = a")
    return green_function(w)


def green_envelope(rho, n: int) -> np.ndarray:
    """(1 - rho^2)^n rho^(-2(n-1)), the two-sided comparison function for g."""
    rho = np.asarray(rho, dtype=float)
    return (1.0 - rho * rho) ** n * rho ** (-2.0 * (n - 1))


@dataclass(frozen=True)
class GreenTable:
    """Vectorised g for sampling loops.

    g/envelope is smooth and bounded on (0, 1], so it is tabulated from the
    quadrature at Chebyshev nodes and spline-interpolated.
    """

    n: int
    nodes: int = 400
    _spline: CubicSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 2:
            raise UnsupportedDimension("the invariant Green's function needs n >= 2")
        k = np.arange(self.nodes)
        rho = 0.5 * (1.0 - np.cos(np.pi * k / (self.nodes - 1)))
        rho[0] = 1e-6
        rho[-1] = 1.0
        ratio = np.empty_like(rho)
        with warnings.catch_warnings():
            # pure relative tolerance; roundoff notices near rho = 1 are harmless
            warnings.simplefilter("ignore")
            for i, r in enumerate(rho[:-1]):
                ratio[i] = green_radial(r, self.n, epsabs=0.0) / green_envelope(r, self.n)
        # limit at rho -> 1: g ~ (n+1)/(2n) 2^(n-1) (1-rho)^n / n, envelope ~ 2^n (1-rho)^n
        ratio[-1] = (self.n + 1) / (4 * self.n * self.n)
        object.__setattr__(self, "_spline", CubicSpline(rho, ratio))

    def __call__(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        return self._spline(np.clip(rho, 1e-6, 1.0)) * green_envelope(rho, self.n)

    @cached_property
    def bounds(self) -> tuple[float, float]:
        grid = np.linspace(1e-3, 1.0, 2000)
        vals = self._spline(grid)
        return float(vals.min()), float(vals.max())


@lru_cache(maxsize=None)
def green_table(n: int) -> GreenTable:
    return GreenTable(n)
