"""Holomorphic functions on the ball with exact derivative rules.

Variants: multi-index polynomials (the exact backend), lacunary series,
kernel sums (test kernels, atoms and atomic sums), sums of these, and
dilations.  Every variant evaluates on batches of points of shape (m, n).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product

import numpy as np
from scipy.special import comb, gammaln

from .errors import BallspaceError, BoundarySingularity, DSLError, InvalidAtomicExponent, InvalidGapSequence
from .formula import compile_formula
from .geometry import SpaceParams, as_points, norm_sq

MAX_FREQUENCY = 2**40
TAIL_CUTOFF = 1e-14


# ---------------------------------------------------------------- multi-indices


def degree(eta) -> int:
    return int(sum(eta))


def mi_factorial(eta) -> int:
    return math.prod(math.factorial(e) for e in eta)


def mi_add(a, b) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


def mi_sub(a, b) -> tuple[tuple, bool]:
    """Difference and a flag telling whether it is a valid multi-index."""
    d = tuple(x - y for x, y in zip(a, b))
    return d, all(x >= 0 for x in d)


def unit(n: int, k: int) -> tuple:
    return tuple(1 if j == k else 0 for j in range(n))


def _batch(z, n: int) -> tuple[np.ndarray, tuple]:
    z = as_points(z)
    if z.shape[-1] != n:
        raise BallspaceError(f"expected points in C^{n}, got last axis {z.shape[-1]}")
    lead = z.shape[:-1]
    return z.reshape(-1, n), lead


# ---------------------------------------------------------------- base class


class HoloFn:
    n: int

    def __call__(self, z) -> np.ndarray:
        flat, lead = _batch(z, self.n)
        return self._eval(flat).reshape(lead)

    def gradient(self, z) -> np.ndarray:
        flat, lead = _batch(z, self.n)
        return self._grad(flat).reshape(lead + (self.n,))

    def radial(self, z) -> np.ndarray:
        """Rf evaluated at z (may be cheaper than building Rf)."""
        flat, lead = _batch(z, self.n)
        return np.sum(flat * self._grad(flat), axis=-1).reshape(lead)

    def radial_derivative(self) -> "HoloFn":
        raise NotImplementedError

    def scale(self, c: complex) -> "HoloFn":
        raise NotImplementedError

    def dilate(self, r: float) -> "HoloFn":
        _check_dilation(r)
        return self if r == 1 else Dilation(self, float(r))

    def value_at_zero(self) -> complex:
        return complex(self(np.zeros(self.n))) if self.n else 0.0

    def __mul__(self, c):
        if isinstance(c, (int, float, complex, np.number)):
            return self.scale(c)
        return NotImplemented

    __rmul__ = __mul__

    def __add__(self, other):
        if isinstance(other, HoloFn):
            return FnSum((self, other))
        return NotImplemented


def _check_dilation(r: float) -> None:
    if not 0 < r <= 1:
        raise BallspaceError(f"dilation radius must lie in (0, 1], got {r}")


# ---------------------------------------------------------------- polynomials


class Polynomial(HoloFn):
    """Finite sum of a_eta z^eta, stored as {eta: a_eta} with zeros dropped."""

    def __init__(self, coeffs: dict, n: int | None = None):
        items = {}
        for eta, c in dict(coeffs).items():
            eta = tuple(int(e) for e in eta)
            if any(e < 0 for e in eta):
                raise BallspaceError(f"negative exponent in multi-index {eta}")
            c = complex(c)
            if c != 0:
                items[eta] = items.get(eta, 0) + c
        if n is None:
            if not coeffs:
                raise BallspaceError("dimension needed for an empty polynomial")
            n = len(next(iter(coeffs)))
        for eta in items:
            if len(eta) != n:
                raise BallspaceError(f"multi-index {eta} does not have length {n}")
        self.n = int(n)
        self.coeffs = {k: v for k, v in sorted(items.items()) if v != 0}

    # --- constructors
    @classmethod
    def constant(cls, c: complex, n: int) -> "Polynomial":
        return cls({(0,) * n: c}, n)

    @classmethod
    def monomial(cls, eta, c: complex = 1.0) -> "Polynomial":
        return cls({tuple(eta): c}, len(eta))

    @classmethod
    def zero(cls, n: int) -> "Polynomial":
        return cls({}, n)

    @classmethod
    def random(cls, rng: np.random.Generator, n: int, max_degree: int, terms: int | None = None) -> "Polynomial":
        pool = [eta for eta in product(range(max_degree + 1), repeat=n) if sum(eta) <= max_degree]
        terms = min(len(pool), terms or rng.integers(1, 9))
        picks = rng.choice(len(pool), size=terms, replace=False)
        vals = rng.standard_normal(terms) + 1j * rng.standard_normal(terms)
        return cls({pool[i]: v for i, v in zip(sorted(picks), vals)}, n)

    # --- data views
    @cached_property
    def exponents(self) -> np.ndarray:
        if not self.coeffs:
            return np.zeros((0, self.n), dtype=np.int64)
        return np.array(list(self.coeffs), dtype=np.int64).reshape(-1, self.n)

    @cached_property
    def values(self) -> np.ndarray:
        return np.array(list(self.coeffs.values()), dtype=complex)

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.coeffs), default=0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e in self.coeffs)

    def __repr__(self):
        return f"Polynomial(n={self.n}, terms={len(self.coeffs)}, degree={self.degree})"

    def __eq__(self, other):
        return isinstance(other, Polynomial) and self.n == other.n and self.coeffs == other.coeffs

    __hash__ = None

    def max_coeff_diff(self, other: "Polynomial") -> float:
        keys = set(self.coeffs) | set(other.coeffs)
        return max((abs(self.coeffs.get(k, 0) - other.coeffs.get(k, 0)) for k in keys), default=0.0)

    def allclose(self, other: "Polynomial", tol: float = 1e-12) -> bool:
        scale = max([1.0] + [abs(v) for v in self.coeffs.values()] + [abs(v) for v in other.coeffs.values()])
        return self.max_coeff_diff(other) <= tol * scale

    # --- arithmetic
    def __add__(self, other):
        if isinstance(other, Polynomial):
            out = dict(self.coeffs)
            for k, v in other.coeffs.items():
                out[k] = out.get(k, 0) + v
            return Polynomial(out, self.n)
        if isinstance(other, (int, float, complex)):
            return self + Polynomial.constant(other, self.n)
        return HoloFn.__add__(self, other)

    __radd__ = __add__

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        if isinstance(other, (int, float, complex)):
            return self + (-other)
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            out: dict = {}
            for ka, va in self.coeffs.items():
                for kb, vb in other.coeffs.items():
                    k = mi_add(ka, kb)
                    out[k] = out.get(k, 0) + va * vb
            return Polynomial(out, self.n)
        return HoloFn.__mul__(self, other)

    __rmul__ = __mul__

    def scale(self, c):
        return Polynomial({k: c * v for k, v in self.coeffs.items()}, self.n)

    # --- evaluation
    def _eval(self, z: np.ndarray) -> np.ndarray:
        if not self.coeffs:
            return np.zeros(len(z), dtype=complex)
        out = np.empty(len(z), dtype=complex)
        exps = self.exponents
        top = exps.max(axis=0)
        step = 8192
        for lo in range(0, len(z), step):
            block = z[lo:lo + step]
            acc = np.ones((len(block), len(exps)), dtype=complex)
            for j in range(self.n):
                if top[j] == 0:
                    continue
                table = np.ones((len(block), top[j] + 1), dtype=complex)
                for e in range(1, top[j] + 1):
                    table[:, e] = table[:, e - 1] * block[:, j]
                acc *= table[:, exps[:, j]]
            out[lo:lo + step] = acc @ self.values
        return out

    def partial(self, k: int) -> "Polynomial":
        out = {}
        for eta, c in self.coeffs.items():
            if eta[k] > 0:
                out[eta[:k] + (eta[k] - 1,) + eta[k + 1:]] = c * eta[k]
        return Polynomial(out, self.n)

    @cached_property
    def _partials(self):
        return [self.partial(k) for k in range(self.n)]

    def _grad(self, z: np.ndarray) -> np.ndarray:
        return np.stack([p._eval(z) for p in self._partials], axis=-1)

    def radial_derivative(self) -> "Polynomial":
        return Polynomial({k: sum(k) * v for k, v in self.coeffs.items()}, self.n)

    def radial(self, z) -> np.ndarray:
        return self.radial_derivative()(z)

    def dilate(self, r: float) -> "Polynomial":
        _check_dilation(r)
        if r == 1:
            return self
        return Polynomial({k: v * r ** sum(k) for k, v in self.coeffs.items()}, self.n)

    def value_at_zero(self) -> complex:
        return self.coeffs.get((0,) * self.n, 0j)

    def translate(self, b) -> "Polynomial":
        """g(u) = f(b + u) as a polynomial in u (binomial expansion)."""
        b = np.asarray(b, dtype=complex).reshape(self.n)
        out: dict = {}
        for eta, c in self.coeffs.items():
            factors = []
            for j, e in enumerate(eta):
                factors.append([(m, comb(e, m, exact=True) * b[j] ** (e - m)) for m in range(e + 1)])
            for combo in product(*factors):
                k = tuple(m for m, _ in combo)
                out[k] = out.get(k, 0) + c * math.prod(w for _, w in combo)
        return Polynomial(out, self.n)

    def sphere_l2_sq(self, r: float = 1.0) -> float:
        """M_2(r, f)^2 by orthogonality of monomials on the sphere."""
        total = 0.0
        for eta, c in self.coeffs.items():
            d = sum(eta)
            log_w = gammaln(self.n) + sum(gammaln(e + 1) for e in eta) - gammaln(self.n + d)
            total += abs(c) ** 2 * r ** (2 * d) * math.exp(log_w)
        return total

    def to_dsl(self) -> dict:
        return {"poly": [[list(k), float(v.real), float(v.imag)] for k, v in self.coeffs.items()], "n": self.n}


# ---------------------------------------------------------------- lacunary series


def _monomial_block_mean(freq: int, n: int, p: float) -> float:
    """L^p(sigma) norm of z_1^freq."""
    half = freq * p / 2.0
    return math.exp((gammaln(n) + gammaln(1.0 + half) - gammaln(n + half)) / p)


class Lacunary(HoloFn):
    """sum_k c_k P_k(z) with P_k homogeneous of degree n_k.

    Blocks default to z_1^{n_k}; user blocks are homogeneous polynomials
    whose sup norm over the sphere must be supplied as ``block_sup``.
    """

    def __init__(self, freqs, coeffs, n: int = 1, blocks=None, block_sup=None, source: dict | None = None):
        freqs = [int(f) for f in freqs]
        coeffs = np.asarray(coeffs, dtype=complex).reshape(-1)
        if len(freqs) != len(coeffs):
            raise InvalidGapSequence("frequencies and coefficients differ in length")
        if any(f < 1 for f in freqs):
            raise InvalidGapSequence("frequencies must be positive integers")
        if any(f > MAX_FREQUENCY for f in freqs):
            raise InvalidGapSequence("frequencies are capped at 2^40")
        ratios = [b / a for a, b in zip(freqs, freqs[1:])]
        if any(r <= 1 for r in ratios):
            raise InvalidGapSequence("frequencies must grow with a gap ratio c > 1")
        self.n = int(n)
        self.freqs = freqs
        self.coeffs = coeffs
        self.gap_ratio = min(ratios) if ratios else math.inf
        if blocks is not None:
            if len(blocks) != len(freqs):
                raise InvalidGapSequence("one block per frequency is required")
            for f, b in zip(freqs, blocks):
                if any(sum(k) != f for k in b.coeffs):
                    raise InvalidGapSequence(f"block for frequency {f} is not homogeneous of that degree")
            if block_sup is None:
                raise InvalidGapSequence("user blocks need their sup norms")
        self.blocks = blocks
        self.block_sup = np.ones(len(freqs)) if block_sup is None else np.asarray(block_sup, dtype=float)
        self.source = source

    @classmethod
    def from_source(cls, source: dict, path: str = "lacunary") -> "Lacunary":
        """Build sum_{k=kmin}^{kmax} coeffs(k) z_1^{freqs(k)} from formula strings."""
        if not isinstance(source, dict):
            raise DSLError("expected an object", path)
        for key in ("freqs", "coeffs", "kmax"):
            if key not in source:
                raise DSLError(f"missing field {key!r}", path)
        known = {"freqs", "coeffs", "kmax", "kmin", "n", "params"}
        extra = set(source) - known
        if extra:
            raise DSLError(f"unknown fields {sorted(extra)}", path)
        params = source.get("params", {})
        if not isinstance(params, dict) or not all(isinstance(v, (int, float)) for v in params.values()):
            raise DSLError("params must map names to numbers", f"{path}.params")
        kmin, kmax = source.get("kmin", 0), source["kmax"]
        if not (isinstance(kmin, int) and isinstance(kmax, int)) or kmax < kmin:
            raise DSLError("kmin and kmax must be integers with kmax >= kmin", path)
        freq_fn = compile_formula(source["freqs"], f"{path}.freqs")
        coeff_fn = compile_formula(source["coeffs"], f"{path}.coeffs")
        freqs, coeffs = [], []
        for k in range(kmin, kmax + 1):
            fk = freq_fn(k=k, **params)
            if abs(fk - round(fk)) > 1e-9 * max(1.0, abs(fk)):
                raise DSLError(f"frequency {fk} at k={k} is not an integer", f"{path}.freqs")
            freqs.append(int(round(fk)))
            coeffs.append(coeff_fn(k=k, **params))
        try:
            return cls(freqs, coeffs, int(source.get("n", 1)), source=dict(source))
        except InvalidGapSequence as exc:
            raise DSLError(str(exc), path) from None

    def with_terms(self, count: int) -> "Lacunary":
        """The generated family member with ``count`` terms (regenerated from
        the formulas when available, otherwise a truncation)."""
        if self.source is not None and self.blocks is None:
            return Lacunary.from_source(dict(self.source, kmax=self.source.get("kmin", 0) + count - 1))
        return self.truncate(count)

    def __repr__(self):
        return f"Lacunary(n={self.n}, terms={len(self.freqs)})"

    def _rebuild(self, coeffs, freqs=None, blocks=None, keep_source=False):
        return Lacunary(self.freqs if freqs is None else freqs, coeffs, self.n,
                        self.blocks if blocks is None else blocks,
                        None if self.blocks is None and blocks is None else self.block_sup[: len(coeffs)],
                        self.source if keep_source else None)

    def truncate(self, count: int) -> "Lacunary":
        """Keep the first ``count`` terms."""
        src = None
        if self.source is not None:
            src = dict(self.source, kmax=self.source.get("kmin", 0) + count - 1)
        blocks = None if self.blocks is None else self.blocks[:count]
        out = Lacunary(self.freqs[:count], self.coeffs[:count], self.n, blocks,
                       None if self.blocks is None else self.block_sup[:count], src)
        return out

    def block_sup_norms(self) -> np.ndarray:
        return np.abs(self.coeffs) * self.block_sup

    def block_p_means(self, p: float, budget: int = 20000, seed: int = 0) -> np.ndarray:
        if self.blocks is None:
            means = np.array([_monomial_block_mean(f, self.n, p) for f in self.freqs])
            return np.abs(self.coeffs) * means
        from .integrate import sample_sphere

        pts = sample_sphere(self.n, budget, seed)
        return np.array([abs(c) * np.mean(np.abs(b(pts)) ** p) ** (1.0 / p) for c, b in zip(self.coeffs, self.blocks)])

    def _power_iter(self, w: np.ndarray, exps):
        """Yield w^e for increasing exponents, squaring when they double."""
        prev, prev_e = None, None
        for e in exps:
            if prev is not None and e == 2 * prev_e:
                cur = prev * prev
            elif e == 0:
                cur = np.ones_like(w)
            elif e == 1:
                cur = w.copy()
            else:
                cur = w**e
            yield cur
            prev, prev_e = cur, e

    def _log_bounds(self, z: np.ndarray):
        """Per-term test: block bound times |z|^{n_k} above the tail cutoff."""
        with np.errstate(divide="ignore"):
            logr = 0.5 * np.log(norm_sq(z))
            bound = np.log(np.abs(self.coeffs) * self.block_sup + 1e-300)
        cut = math.log(TAIL_CUTOFF)
        return lambda k: bound[k] + self.freqs[k] * logr >= cut

    def _check(self, z):
        if np.any(norm_sq(z) > 1.0 + 1e-12):
            raise BallspaceError("lacunary series are evaluated inside the ball")

    def _eval(self, z: np.ndarray) -> np.ndarray:
        self._check(z)
        out = np.zeros(len(z), dtype=complex)
        if not self.freqs:
            return out
        active = self._log_bounds(z)
        if self.blocks is None:
            for k, cur in enumerate(self._power_iter(z[:, 0], self.freqs)):
                out += np.where(active(k), self.coeffs[k] * cur, 0)
        else:
            for k, (c, b) in enumerate(zip(self.coeffs, self.blocks)):
                out += np.where(active(k), c * b._eval(z), 0)
        return out

    def _grad(self, z: np.ndarray) -> np.ndarray:
        self._check(z)
        out = np.zeros((len(z), self.n), dtype=complex)
        if not self.freqs:
            return out
        active = self._log_bounds(z)
        if self.blocks is None:
            lower = [f - 1 for f in self.freqs]
            for k, cur in enumerate(self._power_iter(z[:, 0], lower)):
                out[:, 0] += np.where(active(k), self.coeffs[k] * self.freqs[k] * cur, 0)
            return out
        for k, (c, b) in enumerate(zip(self.coeffs, self.blocks)):
            out += np.where(active(k)[:, None], c * b._grad(z), 0)
        return out

    def radial_derivative(self) -> "Lacunary":
        return self._rebuild(self.coeffs * np.asarray(self.freqs, dtype=float))

    def radial(self, z) -> np.ndarray:
        return self.radial_derivative()(z)

    def scale(self, c):
        return self._rebuild(self.coeffs * c)

    def to_polynomial(self) -> Polynomial:
        if self.blocks is None:
            return Polynomial({(f,) + (0,) * (self.n - 1): c for f, c in zip(self.freqs, self.coeffs)}, self.n)
        total = Polynomial.zero(self.n)
        for c, b in zip(self.coeffs, self.blocks):
            total = total + b.scale(c)
        return total

    def to_dsl(self) -> dict:
        if self.source is not None and self.blocks is None:
            return {"lacunary": dict(self.source)}
        out = {"freqs": list(self.freqs), "coeffs": [[c.real, c.imag] for c in self.coeffs], "n": self.n}
        if self.blocks is not None:
            out["blocks"] = [b.to_dsl()["poly"] for b in self.blocks]
            out["block_sup"] = list(self.block_sup)
        return {"lacunary": out}


# ---------------------------------------------------------------- kernel sums


class KernelSum(HoloFn):
    """sum_k c_k (1 - <z, w_k>)^(-exponent), principal branch (Re > 0 in B)."""

    def __init__(self, weights, centers, exponent: float, label: dict | None = None):
        centers = np.asarray(centers, dtype=complex)
        if centers.ndim == 1:
            centers = centers.reshape(1, -1)
        self.centers = centers
        self.n = centers.shape[1]
        self.weights = np.asarray(weights, dtype=complex).reshape(-1)
        if len(self.weights) != len(centers):
            raise BallspaceError("one weight per kernel center is required")
        if len(centers) and np.any(norm_sq(centers) >= 1):
            raise BallspaceError("kernel centers must lie inside the ball")
        self.exponent = float(exponent)
        self.label = label

    def __repr__(self):
        return f"KernelSum(n={self.n}, terms={len(self.weights)}, exponent={self.exponent})"

    def _denominators(self, z: np.ndarray) -> np.ndarray:
        d = 1.0 - z @ np.conj(self.centers).T
        if np.any(d == 0):
            raise BoundarySingularity("kernel evaluated at its singular boundary point")
        return d

    def _eval(self, z: np.ndarray) -> np.ndarray:
        if len(self.weights) == 0:
            return np.zeros(len(z), dtype=complex)
        d = self._denominators(z)
        return np.exp(-self.exponent * np.log(d)) @ self.weights

    def _grad(self, z: np.ndarray) -> np.ndarray:
        if len(self.weights) == 0:
            return np.zeros((len(z), self.n), dtype=complex)
        d = self._denominators(z)
        coef = np.exp(-(self.exponent + 1.0) * np.log(d)) * (self.exponent * self.weights)[None, :]
        return coef @ np.conj(self.centers)

    def radial(self, z) -> np.ndarray:
        flat, lead = _batch(z, self.n)
        if len(self.weights) == 0:
            return np.zeros(lead, dtype=complex)
        d = self._denominators(flat)
        coef = np.exp(-(self.exponent + 1.0) * np.log(d)) * (1.0 - d)
        return (coef @ (self.exponent * self.weights)).reshape(lead)

    def radial_derivative(self) -> HoloFn:
        # <z,w> (1-<z,w>)^(-e-1) = (1-<z,w>)^(-e-1) - (1-<z,w>)^(-e)
        cw = self.exponent * self.weights
        return FnSum((KernelSum(cw, self.centers, self.exponent + 1.0), KernelSum(-cw, self.centers, self.exponent)))

    def scale(self, c):
        return KernelSum(self.weights * c, self.centers, self.exponent)

    def to_dsl(self) -> dict:
        if self.label is not None:
            return dict(self.label)
        return {"kernel_sum": {"exponent": self.exponent,
                               "terms": [[c.real, c.imag, [[x.real, x.imag] for x in w]]
                                         for c, w in zip(self.weights, self.centers)]}}


def _center(w) -> np.ndarray:
    w = as_points(w).reshape(-1)
    if norm_sq(w) >= 1:
        raise BallspaceError("kernel parameter w must satisfy |w| < 1")
    return w


def kernel_K(w, p: float, q: float) -> KernelSum:
    """(1-|w|^2) / (1-<z,w>)^(1+q/p)."""
    w = _center(w)
    return KernelSum([1.0 - norm_sq(w)], [w], 1.0 + q / p,
                     {"kernel": {"type": "K", "w": _encode(w), "p": p, "q": q}})


def kernel_J(w, p: float, alpha: float, b: float) -> KernelSum:
    """(1-|w|^2)^(b-(n+1+alpha)/p) / (1-<z,w>)^b."""
    w = _center(w)
    n = w.size
    return KernelSum([(1.0 - norm_sq(w)) ** (b - (n + 1 + alpha) / p)], [w], b,
                     {"kernel": {"type": "J", "w": _encode(w), "p": p, "alpha": alpha, "b": b}})


def kernel_L(w, l: float) -> KernelSum:
    """(1-|w|^2)^l / (1-<z,w>)^(2l)."""
    w = _center(w)
    return KernelSum([(1.0 - norm_sq(w)) ** l], [w], 2.0 * l,
                     {"kernel": {"type": "L", "w": _encode(w), "l": l}})


def atom(a, b: float) -> KernelSum:
    """((1-|a|^2)/(1-<z,a>))^b."""
    a = _center(a)
    return KernelSum([(1.0 - norm_sq(a)) ** b], [a], b, {"kernel": {"type": "atom", "w": _encode(a), "b": b}})


def atomic_threshold(params: SpaceParams) -> float:
    if params.p == 1:
        return params.q + params.n * params.s
    conj = params.p / (params.p - 1.0)
    return (params.n + 1) / conj + (params.q + params.n * params.s) / params.p


@dataclass(frozen=True)
class AtomicData:
    coeffs: np.ndarray
    centers: np.ndarray
    b: float

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=complex).reshape(-1))
        centers = np.asarray(self.centers, dtype=complex)
        if centers.ndim == 1:
            centers = centers.reshape(len(self.coeffs), -1) if len(self.coeffs) else centers.reshape(0, 1)
        object.__setattr__(self, "centers", centers)
        if len(self.coeffs) != len(centers):
            raise BallspaceError("one coefficient per atom center is required")

    def check_exponent(self, params: SpaceParams) -> None:
        t = atomic_threshold(params)
        if not self.b > t:
            raise InvalidAtomicExponent(f"atomic exponent b={self.b} must exceed {t:.6g}")


def atomic_synthesize(data: AtomicData, params: SpaceParams | None = None) -> KernelSum:
    if params is not None:
        data.check_exponent(params)
    n = data.centers.shape[1] if data.centers.size else (params.n if params else 1)
    if len(data.coeffs) == 0:
        return KernelSum([], np.zeros((0, n)), data.b)
    weights = data.coeffs * (1.0 - norm_sq(data.centers)) ** data.b
    label = {"atomic": {"b": data.b, "atoms": [[c.real, c.imag, _encode(a)] for c, a in zip(data.coeffs, data.centers)]}}
    return KernelSum(weights, data.centers, data.b, label)


def _encode(w) -> list:
    return [[float(x.real), float(x.imag)] for x in np.asarray(w).reshape(-1)]


# ---------------------------------------------------------------- wrappers


class FnSum(HoloFn):
    def __init__(self, terms):
        terms = tuple(terms)
        if not terms:
            raise BallspaceError("empty sum")
        self.n = terms[0].n
        if any(t.n != self.n for t in terms):
            raise BallspaceError("summands live in different dimensions")
        self.terms = terms

    def _eval(self, z):
        return sum(t._eval(z) for t in self.terms)

    def _grad(self, z):
        return sum(t._grad(z) for t in self.terms)

    def radial(self, z):
        return sum(t.radial(z) for t in self.terms)

    def radial_derivative(self):
        return FnSum(t.radial_derivative() for t in self.terms)

    def scale(self, c):
        return FnSum(t.scale(c) for t in self.terms)

    def to_dsl(self):
        return {"sum": [t.to_dsl() for t in self.terms]}


class Dilation(HoloFn):
    """f_r(z) = f(rz)."""

    def __init__(self, inner: HoloFn, r: float):
        _check_dilation(r)
        self.inner = inner
        self.r = float(r)
        self.n = inner.n

    def __repr__(self):
        return f"Dilation({self.inner!r}, r={self.r})"

    def _eval(self, z):
        return self.inner._eval(self.r * z)

    def _grad(self, z):
        return self.r * self.inner._grad(self.r * z)

    def radial(self, z):
        return self.inner.radial(self.r * as_points(z))

    def radial_derivative(self):
        # R(f_r) = (Rf)_r
        return Dilation(self.inner.radial_derivative(), self.r)

    def dilate(self, r):
        _check_dilation(r)
        return self if r == 1 else Dilation(self.inner, self.r * r)

    def scale(self, c):
        return Dilation(self.inner.scale(c), self.r)

    def to_dsl(self):
        return {"dilate": {"r": self.r, "of": self.inner.to_dsl()}}


def dilate(f: HoloFn, r: float) -> HoloFn:
    return f.dilate(r)


def evaluate(f: HoloFn, z) -> np.ndarray:
    return f(z)


# ---------------------------------------------------------------- derivatives


@dataclass(frozen=True)
class TangentialField:
    """T_ij f = conj(z_j) d_i f - conj(z_i) d_j f (not holomorphic)."""

    f: HoloFn
    i: int
    j: int

    def __call__(self, z) -> np.ndarray:
        z = as_points(z)
        if self.i == self.j:
            return np.zeros(z.shape[:-1], dtype=complex)
        g = self.f.gradient(z)
        return np.conj(z[..., self.j]) * g[..., self.i] - np.conj(z[..., self.i]) * g[..., self.j]


def radial_derivative(f: HoloFn) -> HoloFn:
    return f.radial_derivative()


def gradient(f: HoloFn, z) -> np.ndarray:
    return f.gradient(z)


def tangential_derivative(f: HoloFn, i: int, j: int) -> TangentialField:
    return TangentialField(f, i, j)


def invariant_gradient_from(grad: np.ndarray, radial: np.ndarray, z: np.ndarray) -> np.ndarray:
    """grad(f o Phi_z)(0) from grad f(z) and Rf(z).

    The Jacobian of Phi_z at 0 is -(1-|z|^2) P_z - s Q_z with s = sqrt(1-|z|^2);
    rewritten as -s grad + s/(1+s) Rf conj(z), which is regular at z = 0.
    """
    s = np.sqrt(1.0 - norm_sq(z))
    return -s[..., None] * grad + (s / (1.0 + s) * radial)[..., None] * np.conj(z)


def invariant_gradient(f: HoloFn, z) -> np.ndarray:
    z = as_points(z)
    g = f.gradient(z)
    return invariant_gradient_from(g, np.sum(z * g, axis=-1), z)


def tangential_sq_sum(grad: np.ndarray, z: np.ndarray) -> np.ndarray:
    """sum_{i<j} |T_ij f|^2 from the gradient."""
    n = z.shape[-1]
    total = np.zeros(z.shape[:-1])
    for i in range(n):
        for j in range(i + 1, n):
            t = np.conj(z[..., j]) * grad[..., i] - np.conj(z[..., i]) * grad[..., j]
            total = total + t.real**2 + t.imag**2
    return total


# ---------------------------------------------------------------- operators


def gleason_A(f: Polynomial, k: int, base=None) -> Polynomial:
    """A_k f(z) = int_0^1 d_k f(b + t(z - b)) dt, coefficient-wise."""
    if not isinstance(f, Polynomial):
        raise BallspaceError("Gleason operators act on polynomials")
    if base is not None and np.any(np.asarray(base) != 0):
        b = np.asarray(base, dtype=complex).reshape(f.n)
        if norm_sq(b) >= 1:
            raise BallspaceError("Gleason base point must lie inside the ball")
        return gleason_A(f.translate(b), k).translate(-b)
    out = {}
    for eta, c in f.coeffs.items():
        if eta[k] > 0:
            out[eta[:k] + (eta[k] - 1,) + eta[k + 1:]] = c * eta[k] / sum(eta)
    return Polynomial(out, f.n)


def gleason_reconstruct(f: Polynomial, base=None) -> Polynomial:
    """f(b) + sum_k (z_k - b_k) A_k f, which must equal f."""
    b = np.zeros(f.n, dtype=complex) if base is None else np.asarray(base, dtype=complex).reshape(f.n)
    total = Polynomial.constant(complex(f(b)), f.n)
    for k in range(f.n):
        shift = Polynomial({unit(f.n, k): 1.0, (0,) * f.n: -b[k]}, f.n)
        total = total + shift * gleason_A(f, k, b)
    return total


def riemann_stieltjes(kind: str, g: Polynomial, f: Polynomial) -> Polynomial:
    """T_g f, L_g f or M_g f on polynomials, term by term."""
    if kind == "M":
        return g * f
    if kind not in ("T", "L"):
        raise BallspaceError(f"unknown Riemann-Stieltjes kind {kind!r}")
    out: dict = {}
    for ka, va in f.coeffs.items():
        for kb, vb in g.coeffs.items():
            da, db = sum(ka), sum(kb)
            if da + db == 0:
                continue
            w = (db if kind == "T" else da) / (da + db)
            if w:
                k = mi_add(ka, kb)
                out[k] = out.get(k, 0) + w * va * vb
    return Polynomial(out, f.n)


def hadamard_weight(eta, d: float) -> float:
    """omega_eta(d) = eta! Gamma(n+d) / Gamma(n+d+|eta|), via log-gamma."""
    n = len(eta)
    log_w = sum(gammaln(e + 1.0) for e in eta) + gammaln(n + d) - gammaln(n + d + sum(eta))
    return math.exp(log_w)


def hadamard_product(f: Polynomial, g: Polynomial, d: float) -> Polynomial:
    if not d > 0:
        raise BallspaceError("Hadamard parameter d must be positive")
    out = {}
    for eta, a in f.coeffs.items():
        b = g.coeffs.get(eta)
        if b is not None:
            out[eta] = hadamard_weight(eta, d) * a * b
    return Polynomial(out, f.n)


def rademacher_signs(count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, 7]))
    return np.where(rng.random(count) < 0.5, -1.0, 1.0)


def randomize(f: HoloFn, seed: int) -> HoloFn:
    """Independent random signs on every coefficient (ordered by multi-index)."""
    if isinstance(f, Polynomial):
        signs = rademacher_signs(len(f.coeffs), seed)
        return Polynomial({k: s * v for s, (k, v) in zip(signs, f.coeffs.items())}, f.n)
    if isinstance(f, Lacunary):
        return f._rebuild(f.coeffs * rademacher_signs(len(f.coeffs), seed))
    raise BallspaceError("randomization needs a polynomial or lacunary series")
