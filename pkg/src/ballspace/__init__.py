"""Numerical toolkit for holomorphic function spaces on the unit ball of C^n."""
from .errors import (
    BallspaceError,
    BoundarySingularity,
    DSLError,
    DivergentGreen,
    EmptyBudget,
    InvalidAtomicExponent,
    InvalidAutomorphismCenter,
    InvalidBias,
    InvalidGapSequence,
    UnsupportedDimension,
)
from .geometry import SpaceParams, bergman_distance, moebius, pseudo_distance
from .holo import AtomicData, KernelSum, Lacunary, Polynomial, atomic_synthesize, dilate
from .spaces import GridSpec, NSpace, NstarSpace, membership_report, moebius_norms, norm
from .gap import GapSeries, dyadic_block_sum, gap_verdict_N, gap_verdict_hardy
from .lattice import Lattice, generate_lattice, operator_S, operator_T
from .distance import distance_estimate

__version__ = "0.1.0"
