"""Bergman-metric lattices, their cell partition, the operators T and S,
and the Carleson test for atomic coefficient data.

Every lattice is a finite truncation to {|z| <= radius_cap}; separation and
covering are statements about that region only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import BallspaceError
from .geometry import SpaceParams, as_points, norm_sq
from .holo import AtomicData, HoloFn, KernelSum, Polynomial
from .integrate import CHUNK, IntegralEstimate, chunk_rng, mc_summary, random_directions, sample_ball
from .spaces import DiscreteMeasure, GridSpec, NormEstimate, carleson_norm

DEFAULT_CAP = 0.995
CANDIDATE_DENSITY = 4.0
MAX_CANDIDATES = 2_000_000
NEAREST_K = 8


def _embed(z: np.ndarray) -> np.ndarray:
    return np.concatenate([z.real, z.imag], axis=-1)


def _reach(z: np.ndarray, radius) -> np.ndarray:
    """Euclidean radius of a set containing the metric ball E(z, radius).

    E(z, r) is the ellipsoid D(z, tanh r) with center (1-R^2) z/(1-R^2|z|^2)
    and semi-axes at most R sqrt(1-|z|^2)/sqrt(1-R^2|z|^2).
    """
    big = np.tanh(radius) ** 2
    zz = norm_sq(z)
    den = 1.0 - big * zz
    shift = np.sqrt(zz) * big * (1.0 - zz) / den
    axis = np.sqrt(big) * np.sqrt((1.0 - zz) / den)
    return (shift + axis) * (1.0 + 1e-9) + 1e-12


def _within(centers: np.ndarray, tree: cKDTree, z: np.ndarray, radius: float):
    """Candidate pairs (point index, center index) with beta possibly < radius."""
    lists = tree.query_ball_point(_embed(z), _reach(z, radius))
    counts = np.fromiter((len(x) for x in lists), dtype=np.int64, count=len(lists))
    if counts.sum() == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    rows = np.repeat(np.arange(len(z)), counts)
    cols = np.concatenate([np.asarray(x, dtype=np.int64) for x in lists if x])
    return rows, cols


def _pair_beta(a: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Row-wise beta(a_i, z_i) via 1 - |Phi_a(z)|^2."""
    d = 1.0 - np.sum(z * np.conj(a), axis=-1)
    v = np.minimum((1.0 - norm_sq(a)) * (1.0 - norm_sq(z)) / (d.real**2 + d.imag**2), 1.0)
    t = np.sqrt(np.clip(1.0 - v, 0.0, None))
    return np.log1p(t) - 0.5 * np.log(v)


def invariant_ball_volume(radius: float, n: int) -> float:
    """lambda(E(a, radius)) = sinh^{2n}(radius), independent of a."""
    return math.sinh(radius) ** (2 * n)


def sample_invariant_shell(n: int, lo: float, hi: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """Points distributed by d lambda on Bergman radii in [lo, hi]."""
    ulo, uhi = math.sinh(lo) ** (2 * n), math.sinh(hi) ** (2 * n)
    u = (ulo + rng.random(count) * (uhi - ulo)) ** (1.0 / n)  # u = sinh^2(rho), u^n uniform
    t = u / (1.0 + u)
    return np.sqrt(t)[:, None] * random_directions(rng, n, count)


@dataclass
class Lattice:
    n: int
    r: float
    radius_cap: float
    centers: np.ndarray
    seed: int = 0
    _tree: cKDTree = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=complex).reshape(-1, self.n)
        self._tree = cKDTree(_embed(self.centers)) if len(self.centers) else None

    def __len__(self):
        return len(self.centers)

    def to_json(self) -> dict:
        return {"n": self.n, "r": self.r, "radius_cap": self.radius_cap,
                "centers": [[[c.real, c.imag] for c in a] for a in self.centers]}

    @classmethod
    def from_json(cls, data: dict) -> "Lattice":
        centers = np.array([[complex(x, y) for x, y in a] for a in data["centers"]], dtype=complex)
        n = int(data.get("n", centers.shape[1] if centers.size else 1))
        return cls(n, float(data["r"]), float(data["radius_cap"]), centers.reshape(-1, n))

    def _nearest(self, z: np.ndarray, radius: float) -> tuple[np.ndarray, np.ndarray]:
        """(index, beta) of the nearest center in beta for each point.

        The K Euclidean-nearest centers are scored first; the answer is final
        when the metric ball through the best of them fits inside the K-th
        Euclidean distance.  Remaining points fall back to a radius query.
        Points with no center within ``radius`` get (-1, inf).
        """
        idx = np.full(len(z), -1, dtype=np.int64)
        dist = np.full(len(z), np.inf)
        if not len(self.centers):
            return idx, dist
        k = min(NEAREST_K, len(self.centers))
        for start in range(0, len(z), CHUNK):
            zc = z[start:start + CHUNK]
            eu, cols = self._tree.query(_embed(zc), k=k)
            eu, cols = eu.reshape(len(zc), k), cols.reshape(len(zc), k)
            rows = np.repeat(np.arange(len(zc)), k)
            beta = _pair_beta(self.centers[cols.reshape(-1)], zc[rows]).reshape(len(zc), k)
            # ties to the lowest index: order by (beta, index)
            order = np.lexsort((cols, beta), axis=1)
            pick = order[:, 0]
            best_b = beta[np.arange(len(zc)), pick]
            best_i = cols[np.arange(len(zc)), pick]
            done = (k == len(self.centers)) | (_reach(zc, np.minimum(best_b, radius)) < eu[:, -1])
            rest = np.flatnonzero(~done)
            if len(rest):
                rr, cc = _within(self.centers, self._tree, zc[rest], radius)
                if len(rr):
                    bb = _pair_beta(self.centers[cc], zc[rest][rr])
                    o = np.lexsort((cc, bb, rr))
                    rr, cc, bb = rr[o], cc[o], bb[o]
                    first = np.r_[True, rr[1:] != rr[:-1]]
                    best_b[rest] = np.inf
                    best_i[rest] = -1
                    best_b[rest[rr[first]]] = bb[first]
                    best_i[rest[rr[first]]] = cc[first]
                else:
                    best_b[rest], best_i[rest] = np.inf, -1
            far = best_b > radius
            best_b[far], best_i[far] = np.inf, -1
            idx[start:start + len(zc)] = best_i
            dist[start:start + len(zc)] = best_b
        return idx, dist

    def assign(self, z) -> np.ndarray:
        """Index of the nearest center in beta, lowest index on ties; -1 if no
        center lies within beta-distance r (outside the covered region)."""
        return self._nearest(as_points(z).reshape(-1, self.n), self.r)[0]

    def nearest_distance(self, z, radius: float | None = None) -> np.ndarray:
        """beta-distance to the nearest center, inf if none is within ``radius``."""
        radius = self.r if radius is None else radius
        return self._nearest(as_points(z).reshape(-1, self.n), radius)[1]

    def check_separation(self) -> float:
        """Minimum pairwise beta-distance (inf for fewer than two centers)."""
        if len(self.centers) < 2:
            return math.inf
        rows, cols = _within(self.centers, self._tree, self.centers, self.r)
        keep = rows < cols
        if not np.any(keep):
            return math.inf
        return float(_pair_beta(self.centers[cols[keep]], self.centers[rows[keep]]).min())

    def check_covering(self, probes: int = 10_000, seed: int = 1) -> dict:
        """Probe points from d lambda on the capped region; each must be within r of a center."""
        pts = sample_invariant_shell(self.n, 0.0, math.atanh(self.radius_cap), probes, chunk_rng(seed, 91, 0))
        d = self.nearest_distance(pts)
        return {"probes": probes, "covered": bool(np.all(d <= self.r)), "max_distance": float(d.max()),
                "uncovered": int(np.sum(d > self.r))}

    def overlap_count(self, factor: float = 4.0, probes: int = 2000, seed: int = 2) -> int:
        """Max over probes of the number of balls E(a_k, factor * r) containing the probe."""
        pts = sample_invariant_shell(self.n, 0.0, math.atanh(self.radius_cap), probes, chunk_rng(seed, 92, 0))
        rows, cols = _within(self.centers, self._tree, pts, factor * self.r)
        if not len(rows):
            return 0
        inside = _pair_beta(self.centers[cols], pts[rows]) < factor * self.r
        return int(np.bincount(rows[inside], minlength=len(pts)).max())


def overlap_bound(n: int, r: float, factor: float = 4.0) -> float:
    """Volume bound on overlap counts: the disjoint balls E(a_k, r/4) of all
    centers within factor*r of a point fit inside E(z, (factor + 1/4) r)."""
    return invariant_ball_volume((factor + 0.25) * r, n) / invariant_ball_volume(r / 4.0, n)


def generate_lattice(n: int, r: float, radius_cap: float = DEFAULT_CAP, seed: int = 0,
                     repair_probes: int | None = None) -> Lattice:
    """Greedy r/2-separated set in beta over candidates stratified by Bergman-radius shells.

    Shells have width r/4 and are filled from d lambda with enough candidates
    that every point of the capped region is within r/2 of one with high
    probability; a repair pass then adds any probe still farther than r/2 from
    the chosen centers, so the result is a maximal separated set on the probes.
    """
    if not 0 < r <= 1:
        raise BallspaceError("separation constant r must lie in (0, 1]")
    if not 0 <= radius_cap < 1:
        raise BallspaceError("radius_cap must lie in [0, 1)")
    n = int(n)
    rho_cap = math.atanh(radius_cap)
    width = r / 4.0
    unit = invariant_ball_volume(width, n)
    total = invariant_ball_volume(rho_cap, n)
    if CANDIDATE_DENSITY * total / unit > MAX_CANDIDATES:
        raise BallspaceError(f"lattice with r={r}, radius_cap={radius_cap} in n={n} needs more than "
                             f"{MAX_CANDIDATES} candidates; lower radius_cap or raise r")
    sep_floor = 1.0 / math.cosh(r / 2.0) ** 2
    centers = [np.zeros(n, dtype=complex)]
    radii = [0.0]
    edges = np.arange(0.0, rho_cap + width, width)
    edges[-1] = min(edges[-1], rho_cap)
    for j, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        if hi <= lo:
            continue
        count = max(1, math.ceil(CANDIDATE_DENSITY * (invariant_ball_volume(hi, n) - invariant_ball_volume(lo, n)) / unit))
        cand = sample_invariant_shell(n, lo, hi, count, chunk_rng(seed, 50, j))
        _greedy_add(cand, centers, radii, r, sep_floor)
    lat = Lattice(n, r, radius_cap, np.array(centers), seed)
    probes = repair_probes if repair_probes is not None else min(200_000, max(10_000, int(4 * total / unit)))
    pts = sample_invariant_shell(n, 0.0, rho_cap, probes, chunk_rng(seed, 60, 0))
    far = lat.nearest_distance(pts, r / 2.0) >= r / 2.0
    if np.any(far):
        _greedy_add(pts[far], centers, radii, r, sep_floor)
        lat = Lattice(n, r, radius_cap, np.array(centers), seed)
    return lat


def _greedy_add(cand: np.ndarray, centers: list, radii: list, r: float, sep: float) -> None:
    """Append each candidate that is at least r/2 from every kept center.

    Only centers whose Bergman radius differs by less than r/2 can be closer
    than r/2, so the check runs against that band.
    """
    arr = np.array(centers)
    rad = np.array(radii)
    pending_pts, pending_rad = [], []
    for z in cand:
        rz = math.atanh(min(math.sqrt(float(norm_sq(z))), 1 - 1e-16))
        band = np.abs(rad - rz) < r / 2.0
        if _too_close(arr[band], z, sep):
            continue
        if pending_pts:
            pp = np.array(pending_pts)
            pb = np.abs(np.array(pending_rad) - rz) < r / 2.0
            if _too_close(pp[pb], z, sep):
                continue
        pending_pts.append(z)
        pending_rad.append(rz)
        if len(pending_pts) >= 256:
            arr = np.concatenate([arr, np.array(pending_pts)])
            rad = np.concatenate([rad, pending_rad])
            centers.extend(pending_pts)
            radii.extend(pending_rad)
            pending_pts, pending_rad = [], []
    centers.extend(pending_pts)
    radii.extend(pending_rad)


def _too_close(arr: np.ndarray, z: np.ndarray, sep: float) -> bool:
    if not len(arr):
        return False
    d = 1.0 - arr @ np.conj(z)
    v = (1.0 - norm_sq(arr)) * (1.0 - float(norm_sq(z))) / (d.real**2 + d.imag**2)
    # beta < r/2  <=>  |Phi|^2 < tanh^2(r/2)  <=>  1 - |Phi|^2 > sech^2(r/2)
    return bool(np.any(v > sep))


def cell_masses(lattice: Lattice, alpha: float, budget: int = 400_000, seed: int = 0) -> np.ndarray:
    """V_alpha(E_k) for the nearest-center cells intersected with {|z| <= cap}.

    Samples are drawn from dV_alpha itself, so every sample carries mass 1/budget.
    """
    if not alpha > -1:
        raise BallspaceError("cell masses need alpha > -1")
    if not len(lattice):
        return np.zeros(0)
    sample = sample_ball(lattice.n, budget, seed, alpha, stream=70)
    inside = norm_sq(sample.points) <= lattice.radius_cap**2
    idx = lattice.assign(sample.points[inside])
    idx = idx[idx >= 0]
    return np.bincount(idx, minlength=len(lattice)) / budget


def operator_T(f, b: float, z, n: int | None = None, budget: int = 200_000, seed: int = 0) -> IntegralEstimate:
    """Integral of (1-|w|^2)^{b-n-1} |1-<z,w>|^{-b} f(w) dV(w), by Monte Carlo
    with the sampler matched to the weight."""
    z = as_points(z).reshape(-1)
    n = z.size if n is None else n
    if not b > n:
        raise BallspaceError("operator T needs b > n")
    sample = sample_ball(n, budget, seed, b - n - 1.0, stream=71)
    d = 1.0 - sample.points @ np.conj(z)
    vals = np.asarray(f(sample.points))
    contrib = sample.weights * budget * sample.gap ** (b - n - 1.0) * np.abs(d) ** (-b) * vals.real
    value, err = mc_summary(contrib)
    return IntegralEstimate(value, err, budget, "mc")


def operator_S(f, lattice: Lattice, b: float, budget: int = 400_000, seed: int = 0,
               masses: np.ndarray | None = None) -> HoloFn:
    """sum_k V_alpha(E_k) f(a_k) (1-<z,a_k>)^{-b} with alpha = b - n - 1."""
    n = lattice.n
    if not len(lattice):
        return Polynomial.zero(n)
    vals = np.asarray(f(lattice.centers), dtype=complex).reshape(-1)
    if not np.any(vals):
        return Polynomial.zero(n)
    if masses is None:
        masses = cell_masses(lattice, b - n - 1.0, budget, seed)
    return KernelSum(masses * vals, lattice.centers, b)


def atomic_measure(data: AtomicData, params: SpaceParams) -> DiscreteMeasure:
    """sum |c_k|^p (1-|a_k|^2)^{q+ns} delta_{a_k}."""
    a = np.asarray(data.centers, dtype=complex).reshape(len(data.coeffs), -1) if len(data.coeffs) else \
        np.zeros((0, params.n), dtype=complex)
    w = np.abs(np.asarray(data.coeffs)) ** params.p * (1.0 - norm_sq(a)) ** (params.q + params.n * params.s)
    return DiscreteMeasure(a, w)


def atomic_carleson_check(data: AtomicData, params: SpaceParams, grid: GridSpec = GridSpec()) -> NormEstimate:
    mu = atomic_measure(data, params)
    return carleson_norm(mu, params.n * params.s, "tent_sup", grid)
