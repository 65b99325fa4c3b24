"""Membership of Hadamard-gap series through dyadic block sums.

Every block sum is formed from logarithms, so coefficients and frequencies
up to 2^40 never overflow; terms are exponentiated only for reporting.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import InvalidGapSequence
from .geometry import SpaceParams
from .holo import MAX_FREQUENCY, Lacunary

CONVERGE_MARGIN = 1e-3
DIVERGE_FLOOR = 1.0 - 1e-12
TAIL_BLOCKS = 10
MIN_BLOCKS = 5


@dataclass(frozen=True)
class GapSeries:
    """Frequencies n_k with block sup norms M_k and block L^p means L_{k,p}."""

    freqs: tuple
    sup_norms: np.ndarray | None = None
    p_means: np.ndarray | None = None
    mean_order: float | None = None
    gap_ratio: float = field(init=False)

    def __post_init__(self):
        freqs = tuple(int(f) for f in self.freqs)
        if any(f < 1 or f > MAX_FREQUENCY for f in freqs):
            raise InvalidGapSequence("frequencies must be integers in [1, 2^40]")
        ratios = [b / a for a, b in zip(freqs, freqs[1:])]
        if any(r <= 1 for r in ratios):
            raise InvalidGapSequence("frequencies must grow with a gap ratio c > 1")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "gap_ratio", min(ratios) if ratios else math.inf)
        for name in ("sup_norms", "p_means"):
            v = getattr(self, name)
            if v is None:
                continue
            v = np.asarray(v, dtype=float)
            if v.shape != (len(freqs),) or np.any(v < 0) or not np.all(np.isfinite(v)):
                raise InvalidGapSequence(f"{name} must hold one finite value >= 0 per frequency")
            object.__setattr__(self, name, v)
        if self.p_means is not None and self.mean_order is None:
            raise InvalidGapSequence("p_means need the order p they were measured at")
        if self.sup_norms is not None and self.p_means is not None:
            if np.any(self.p_means > self.sup_norms * (1 + 1e-9) + 1e-300):
                raise InvalidGapSequence("a block mean exceeds its sup norm")

    @classmethod
    def from_lacunary(cls, f: Lacunary, p: float, budget: int = 20000, seed: int = 0) -> "GapSeries":
        return cls(tuple(f.freqs), f.block_sup_norms(), f.block_p_means(p, budget, seed), float(p))

    def values(self, use: str) -> np.ndarray:
        if use == "M":
            if self.sup_norms is None:
                raise InvalidGapSequence("series carries no block sup norms")
            return self.sup_norms
        if use == "L":
            if self.p_means is None:
                raise InvalidGapSequence("series carries no block means")
            return self.p_means
        raise InvalidGapSequence(f"use must be 'M' or 'L', got {use!r}")

    @property
    def monomial_blocks(self) -> bool:
        """True when the sup and mean of every block agree (n = 1 monomials)."""
        return (self.sup_norms is not None and self.p_means is not None
                and np.allclose(self.sup_norms, self.p_means, rtol=1e-12, atol=0))


@dataclass
class DyadicResult:
    verdict: str
    terms: list
    log_terms: list
    ratio_trace: list
    reason: str
    flags: list

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "terms": self.terms, "ratio_trace": self.ratio_trace,
                "reason": self.reason, "flags": self.flags}


def block_log_terms(series: GapSeries, params: SpaceParams, use: str) -> np.ndarray:
    """log t_k for k = 0 .. floor(log2 max n_j); -inf marks an empty or zero block."""
    vals = series.values(use)
    if not series.freqs:
        return np.zeros(0)
    top = int(math.floor(math.log2(series.freqs[-1])))
    blocks = np.array([int(math.floor(math.log2(f))) for f in series.freqs])
    with np.errstate(divide="ignore"):
        logs = params.p * np.log(vals)
    out = np.full(top + 1, -np.inf)
    for k in range(top + 1):
        sel = logs[blocks == k]
        if sel.size:
            out[k] = logsumexp(sel)
        out[k] -= k * params.excess * math.log(2.0)
    return out


def _ratio_trace(log_terms: np.ndarray) -> list:
    """Per-step ratios between consecutive nonzero blocks; a jump over empty
    blocks contributes its geometric mean once."""
    live = np.flatnonzero(np.isfinite(log_terms))
    out = []
    for a, b in zip(live, live[1:]):
        out.append(math.exp((log_terms[b] - log_terms[a]) / (b - a)))
    return out


def dyadic_block_sum(series: GapSeries, params: SpaceParams, use: str = "M") -> DyadicResult:
    log_terms = block_log_terms(series, params, use)
    terms = [float(math.exp(t)) if np.isfinite(t) else 0.0 for t in log_terms]
    flags = [] if params.s <= 1 else ["s > 1 lies outside the intended regime"]
    trace = _ratio_trace(log_terms)
    lt = [float(t) if np.isfinite(t) else None for t in log_terms]
    if not np.any(np.isfinite(log_terms)):
        return DyadicResult("converges", terms, lt, trace, "every term vanishes", flags)
    live = np.flatnonzero(np.isfinite(log_terms))
    if live[-1] - live[0] + 1 < MIN_BLOCKS or len(trace) < 2:
        return DyadicResult("inconclusive", terms, lt, trace, "insufficient-data", flags)
    tail = trace[-TAIL_BLOCKS:]
    if all(r <= 1.0 - CONVERGE_MARGIN for r in tail):
        return DyadicResult("converges", terms, lt, trace, f"last {len(tail)} ratios <= {1 - CONVERGE_MARGIN}", flags)
    if all(r >= DIVERGE_FLOOR for r in tail):
        return DyadicResult("diverges", terms, lt, trace, f"last {len(tail)} ratios >= 1", flags)
    return DyadicResult("inconclusive", terms, lt, trace, "ratios are not uniformly on one side of 1", flags)


def gap_verdict_N(series: GapSeries, params: SpaceParams) -> dict:
    """Three-valued membership in N(p,q,s) from the M- and L-block sums.

    A convergent M-sum puts f in the little space N^0, hence in N; a divergent
    L-sum puts f outside N.  With monomial blocks in one variable both sums
    coincide and the test is exact.
    """
    if not series.freqs:
        return {"verdict": "in", "exact": True, "reason": "zero function", "M": None, "L": None}
    if params.n == 1 and series.sup_norms is not None and series.p_means is None:
        series = GapSeries(series.freqs, series.sup_norms, series.sup_norms, params.p)
    if series.mean_order is not None and series.mean_order != params.p:
        raise InvalidGapSequence(f"block means were measured at p = {series.mean_order}, not {params.p}")
    m = dyadic_block_sum(series, params, "M") if series.sup_norms is not None else None
    l = dyadic_block_sum(series, params, "L") if series.p_means is not None else None
    exact = series.monomial_blocks
    rec = {"exact": exact, "M": None if m is None else m.to_dict(), "L": None if l is None else l.to_dict()}
    if m is not None and m.verdict == "converges":
        return dict(rec, verdict="in", reason="M-sum converges: f lies in N^0 and hence in N")
    if l is not None and l.verdict == "diverges":
        return dict(rec, verdict="out", reason="L-sum diverges: f is not in N")
    if exact and m is not None and m.verdict == "diverges":
        return dict(rec, verdict="out", reason="M-sum diverges with M = L")
    return dict(rec, verdict="inconclusive", reason="neither side of the block-sum sandwich fired")


def gap_verdict_hardy(series: GapSeries, alpha: float, beta: float, tail: int = 10) -> dict:
    """Membership in H^alpha_beta and its little space from x_k = L_{k,alpha}/n_k^beta.

    The trend is the least-squares slope of log x_k against log k over the
    last ``tail`` terms: below -0.1 the sequence tends to 0, within 0.1 it is
    bounded but not vanishing, above 0.1 it is unbounded.
    """
    if not (alpha > 0 and beta > 0):
        raise InvalidGapSequence("alpha and beta must be positive")
    if not series.freqs:
        return {"verdict": "little", "in_space": True, "in_little": True, "slope": None, "trace": []}
    if series.mean_order is not None and series.mean_order != alpha:
        raise InvalidGapSequence(f"block means were measured at order {series.mean_order}, not {alpha}")
    vals = series.values("L")
    with np.errstate(divide="ignore"):
        logx = np.log(vals) - beta * np.log(np.asarray(series.freqs, dtype=float))
    trace = [float(math.exp(v)) if np.isfinite(v) else 0.0 for v in logx]
    finite = np.isfinite(logx)
    idx = np.flatnonzero(finite)
    if not finite[-1] and np.all(~finite[-min(tail, len(logx)):]):
        return {"verdict": "little", "in_space": True, "in_little": True, "slope": None, "trace": trace}
    if len(idx) < MIN_BLOCKS:
        return {"verdict": "inconclusive", "in_space": None, "in_little": None, "slope": None, "trace": trace}
    sel = idx[-tail:]
    slope = float(np.polyfit(np.log(sel + 1.0), logx[sel], 1)[0])
    if slope < -0.1:
        verdict, ins, little = "little", True, True
    elif slope <= 0.1:
        verdict, ins, little = "in", True, False
    else:
        verdict, ins, little = "out", False, False
    return {"verdict": verdict, "in_space": ins, "in_little": little, "slope": slope, "trace": trace}


def holder_block_check(series: GapSeries, p: float) -> dict:
    """Check (sum_block M_j)^p <= (floor(log_c 2) + 1)^(p-1) sum_block M_j^p on every dyadic block."""
    vals = series.values("M")
    if not series.freqs:
        return {"holds": True, "worst_ratio": 0.0, "blocks": 0}
    per_block = math.floor(math.log(2.0) / math.log(series.gap_ratio) + 1e-12) + 1 if len(series.freqs) > 1 else 1
    blocks = np.array([int(math.floor(math.log2(f))) for f in series.freqs])
    worst = 0.0
    for k in np.unique(blocks):
        v = vals[blocks == k]
        rhs = per_block ** (p - 1) * np.sum(v**p)
        lhs = np.sum(v) ** p
        if rhs > 0:
            worst = max(worst, float(lhs / rhs))
        elif lhs > 0:
            worst = math.inf
    return {"holds": worst <= 1.0 + 1e-12, "worst_ratio": worst, "blocks": int(len(np.unique(blocks))),
            "block_capacity": per_block}
