"""Deterministic bounds for Lipschitz functions via dyadic-cube labeling.

The unit cube is split recursively into 2^d children of half the side.
A cube Q at depth j with center c is labeled by a single query g(c):

* Inside  the failure set when g(c) < y - L 2^{-j-1}   (sup-norm radius),
* Outside the failure set when g(c) > y + L 2^{-j-1},
* Unknown otherwise, in which case it is refined further.

Inside mass accumulates into the lower bound, Unknown mass is the gap:
p_lower = vol(Inside), p_upper = p_lower + vol(Unknown).  Bounds are
deterministic for any true sup-norm Lipschitz constant <= L and improve
monotonically as the frontier is refined in breadth-first (largest cube
first) order.
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .core import BlackBoxFunction, DimensionMismatch, ProbabilityBounds

__all__ = [
    "DyadicCube",
    "LABEL_INSIDE",
    "LABEL_OUTSIDE",
    "LABEL_UNKNOWN",
    "label_cube",
    "DyadicRun",
    "refine",
    "default_max_depth",
    "save_trace",
]

LABEL_INSIDE = "inside"     # certainly in the failure set
LABEL_OUTSIDE = "outside"   # certainly safe
LABEL_UNKNOWN = "unknown"


@dataclass(frozen=True)
class DyadicCube:
    """Axis-aligned cube [index * 2^-j, (index+1) * 2^-j] of the dyadic grid."""

    depth: int
    index: Tuple[int, ...]

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError("depth must be non-negative")
        if any(i < 0 or i >= 2 ** self.depth for i in self.index):
            raise ValueError("index out of range for depth")

    @property
    def dimension(self) -> int:
        return len(self.index)

    @property
    def sidelength(self) -> float:
        return 2.0 ** (-self.depth)

    @property
    def measure(self) -> float:
        return 2.0 ** (-self.depth * self.dimension)

    def center(self) -> Tuple[float, ...]:
        s = self.sidelength
        return tuple((i + 0.5) * s for i in self.index)

    def children(self) -> List["DyadicCube"]:
        d = self.dimension
        base = tuple(2 * i for i in self.index)
        kids = []
        for mask in range(2 ** d):
            idx = tuple(base[k] + ((mask >> k) & 1) for k in range(d))
            kids.append(DyadicCube(self.depth + 1, idx))
        return kids


def label_cube(f: BlackBoxFunction, lipschitz: float, cube: DyadicCube) -> str:
    """Label a cube with one oracle query at its center.

    The sup-norm ball of radius (side/2) around the center covers the
    cube, so |g - g(c)| <= L * 2^{-depth-1} on it.
    """
    if cube.dimension != f.dimension:
        raise DimensionMismatch(
            f"cube dimension {cube.dimension} != function dimension {f.dimension}")
    if lipschitz <= 0.0:
        raise ValueError("lipschitz must be positive")
    value = f(list(cube.center()))
    slack = lipschitz * 0.5 * cube.sidelength
    if value < f.threshold - slack:
        return LABEL_INSIDE
    if value > f.threshold + slack:
        return LABEL_OUTSIDE
    return LABEL_UNKNOWN


def default_max_depth(lipschitz: float, eps_target: float = 1e-5) -> int:
    """Depth at which the label slack L 2^{-j-1} drops below eps_target."""
    if lipschitz <= 0.0 or eps_target <= 0.0:
        raise ValueError("lipschitz and eps_target must be positive")
    return max(1, int(math.ceil(math.log2(lipschitz / eps_target))))


@dataclass
class DyadicRun:
    """Outcome of a refinement run.

    ``trace`` has one row per completed cube split:
    (splits_done, queries_used, p_lower, p_upper, unknown_mass).
    """

    bounds: ProbabilityBounds
    inside: List[DyadicCube] = field(default_factory=list)
    outside: List[DyadicCube] = field(default_factory=list)
    unknown: List[DyadicCube] = field(default_factory=list)
    trace: List[Tuple[int, int, float, float, float]] = field(default_factory=list)
    queries_used: int = 0
    max_depth_hit: bool = False


def refine(f: BlackBoxFunction, lipschitz: float, budget: int,
           max_depth: Optional[int] = None,
           eps_target: float = 1e-5) -> DyadicRun:
    """Refine Unknown cubes breadth-first under a query budget.

    The frontier is a priority queue keyed by (depth, index), so the
    largest remaining cube is always split next and the traversal order
    is deterministic.  Splitting costs 2^d queries (one per child); the
    loop stops when the remaining budget cannot split another cube, when
    the frontier is empty, or when only cubes at ``max_depth`` remain.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    d = f.dimension
    if max_depth is None:
        max_depth = default_max_depth(lipschitz, eps_target)
    root = DyadicCube(0, (0,) * d)
    inside: List[DyadicCube] = []
    outside: List[DyadicCube] = []
    resolved_unknown: List[DyadicCube] = []   # unknown but at max depth
    frontier: List[Tuple[int, Tuple[int, ...]]] = []

    queries = 0
    p_lower = 0.0
    unknown_mass = 0.0

    def admit(cube: DyadicCube, label: str) -> None:
        nonlocal p_lower, unknown_mass
        if label == LABEL_INSIDE:
            inside.append(cube)
            p_lower += cube.measure
        elif label == LABEL_OUTSIDE:
            outside.append(cube)
        else:
            unknown_mass += cube.measure
            if cube.depth >= max_depth:
                resolved_unknown.append(cube)
            else:
                heapq.heappush(frontier, (cube.depth, cube.index))

    label = label_cube(f, lipschitz, root)
    queries += 1
    admit(root, label)
    trace: List[Tuple[int, int, float, float, float]] = [
        (0, queries, p_lower, p_lower + unknown_mass, unknown_mass)]

    splits = 0
    n_children = 2 ** d
    while frontier and queries + n_children <= budget:
        depth, index = heapq.heappop(frontier)
        parent = DyadicCube(depth, index)
        unknown_mass -= parent.measure
        for child in parent.children():
            lab = label_cube(f, lipschitz, child)
            queries += 1
            admit(child, lab)
        splits += 1
        trace.append((splits, queries, p_lower, p_lower + unknown_mass,
                      unknown_mass))

    pending = [DyadicCube(j, idx) for j, idx in frontier] + resolved_unknown
    bounds = ProbabilityBounds(p_lower, min(1.0, p_lower + unknown_mass),
                               queries_used=queries)
    return DyadicRun(bounds=bounds, inside=inside, outside=outside,
                     unknown=pending, trace=trace, queries_used=queries,
                     max_depth_hit=bool(resolved_unknown))


def save_trace(run: DyadicRun, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "queries", "p_lower", "p_upper", "unknown_mass"])
        for step, q, lo, hi, um in run.trace:
            w.writerow([step, q, repr(lo), repr(hi), repr(um)])
