"""Dominance geometry for coordinatewise-nondecreasing functions.

For g nondecreasing in every coordinate, a failing point x (g(x) < y)
certifies failure on its whole lower orthant [0, x], and a safe point
certifies safety on its upper orthant [x, 1].  Labeled designs therefore
yield deterministic probability bounds

    vol(union of fail lower orthants)  <=  p  <=  1 - vol(union of safe upper orthants)

with the gap carried by the staircase-shaped undecided region in between.
This module provides the dominance primitives, exact union volumes (with a
Monte Carlo fallback in high dimension), the undecided-region type, and a
sequential bounder that spends a query budget on points drawn from the
undecided region.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .core import (DETERMINISTIC, HIGH_PROBABILITY, BlackBoxFunction,
                   DimensionMismatch, ProbabilityBounds, RandomStream)

__all__ = [
    "MonotonicityViolation",
    "OverlappingRegions",
    "SamplerStalled",
    "dominates",
    "is_antichain",
    "maximal_points",
    "minimal_points",
    "lower_orthant_volume",
    "upper_orthant_volume",
    "orthant_volume_mc",
    "LabeledDesign",
    "StaircaseRegion",
    "bounds_from_design",
    "RejectionSampler",
    "SequentialRun",
    "sequential_bounder",
    "CPWLFunction",
    "MonotonicityReport",
    "monotonicity_directions",
    "save_design",
    "load_design",
    "save_trace",
]

MC_VOLUME_DIM = 6          # exact volumes up to here, Monte Carlo beyond
_MC_VOLUME_N = 200_000
_MC_ALPHA = 1e-6           # per-volume failure mass of the MC fallback bounds


class MonotonicityViolation(RuntimeError):
    """Observed labels contradict coordinatewise monotonicity."""


class OverlappingRegions(ValueError):
    """Fail and safe certified regions intersect (or pieces conflict)."""


class SamplerStalled(RuntimeError):
    """A region sampler could not produce a point within its attempt cap."""


# ---------------------------------------------------------------------------
# dominance primitives

def dominates(u, v) -> bool:
    """Componentwise u <= v (u is dominated by v)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise DimensionMismatch(f"shape mismatch {u.shape} vs {v.shape}")
    return bool(np.all(u <= v))


def _pairwise_leq(P: np.ndarray) -> np.ndarray:
    """Boolean matrix M[i, j] = (P[i] <= P[j] componentwise)."""
    return np.all(P[:, None, :] <= P[None, :, :], axis=2)


def is_antichain(P) -> bool:
    """True when no point is componentwise below a distinct point.

    Set semantics: exact duplicate rows are collapsed first.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if P.shape[0] <= 1:
        return True
    P = np.unique(P, axis=0)
    if P.shape[0] == 1:
        return True
    leq = _pairwise_leq(P)
    np.fill_diagonal(leq, False)
    return not bool(leq.any())


def maximal_points(P) -> np.ndarray:
    """Antichain of maximal points: same union of lower orthants."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if P.shape[0] <= 1:
        return P.copy()
    P = np.unique(P, axis=0)
    if P.shape[0] == 1:
        return P
    leq = _pairwise_leq(P)
    np.fill_diagonal(leq, False)
    return P[~leq.any(axis=1)]


def minimal_points(P) -> np.ndarray:
    """Antichain of minimal points: same union of upper orthants."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if P.shape[0] <= 1:
        return P.copy()
    P = np.unique(P, axis=0)
    if P.shape[0] == 1:
        return P
    geq = _pairwise_leq(P).T
    np.fill_diagonal(geq, False)
    return P[~geq.any(axis=1)]


# ---------------------------------------------------------------------------
# exact union volumes

def _vol2(P: np.ndarray) -> float:
    """Area of a union of lower-left rectangles in [0,1]^2 by a sweep."""
    order = np.argsort(-P[:, 0], kind="stable")
    y = P[order, 1]
    ymax = np.maximum.accumulate(np.concatenate(([0.0], y)))
    return float(np.sum(P[order, 0] * np.diff(ymax)))


def _vol_lower_union(P: np.ndarray) -> float:
    if P.shape[0] == 0:
        return 0.0
    d = P.shape[1]
    if d == 1:
        return float(P.max())
    if d == 2:
        return _vol2(P)
    # slab decomposition on the last coordinate: between consecutive
    # heights the cross-section is the union over points reaching that high
    order = np.argsort(-P[:, -1], kind="stable")
    Ps = P[order]
    heights = Ps[:, -1]
    vol = 0.0
    proj_arr = np.empty((0, d - 1))
    for k in range(Ps.shape[0]):
        pk = Ps[k, :-1]
        if proj_arr.shape[0] == 0 or not np.any(np.all(proj_arr >= pk, axis=1)):
            if proj_arr.shape[0]:
                proj_arr = proj_arr[~np.all(proj_arr <= pk, axis=1)]
            proj_arr = np.vstack([proj_arr, pk[None, :]])
        z_next = heights[k + 1] if k + 1 < Ps.shape[0] else 0.0
        dz = heights[k] - z_next
        if dz > 0.0:
            vol += dz * _vol_lower_union(proj_arr)
    return vol


def _check_points(P, clip_tol: float = 1e-12) -> np.ndarray:
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if np.any(P < -clip_tol) or np.any(P > 1.0 + clip_tol):
        raise ValueError("points must lie in the unit cube")
    return np.clip(P, 0.0, 1.0)


def lower_orthant_volume(P) -> float:
    """Exact volume of union_i [0, P_i] inside the unit cube.

    Cost grows quickly with dimension (slab recursion); intended for
    d <= 6.  Higher dimensions should use :func:`orthant_volume_mc`.
    """
    P = _check_points(P)
    if P.shape[0] == 0:
        return 0.0
    return _vol_lower_union(maximal_points(P))


def upper_orthant_volume(P) -> float:
    """Exact volume of union_i [P_i, 1]."""
    P = _check_points(P)
    if P.shape[0] == 0:
        return 0.0
    return _vol_lower_union(maximal_points(1.0 - P))


def _delta_lower_volume(pruned: np.ndarray, x: np.ndarray) -> float:
    """Volume added to a lower-orthant union by a new point x.

    ``pruned`` is the current maximal antichain.  The increment is
    vol[0,x] minus the part already covered, which is the union of the
    clipped boxes [0, min(P_i, x)].
    """
    box = float(np.prod(x))
    if box == 0.0:
        return 0.0
    if pruned.shape[0] == 0:
        return box
    clipped = np.minimum(pruned, x[None, :])
    clipped = clipped[np.all(clipped > 0.0, axis=1)]
    if clipped.shape[0] == 0:
        return box
    return box - _vol_lower_union(maximal_points(clipped))


def _insert_maximal(pruned: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Add x to a maximal antichain, keeping it maximal."""
    if pruned.shape[0] and np.any(np.all(pruned >= x[None, :], axis=1)):
        return pruned
    if pruned.shape[0]:
        pruned = pruned[~np.all(pruned <= x[None, :], axis=1)]
    return np.vstack([pruned, x[None, :]])


def orthant_volume_mc(P, upper: bool = False, n: int = _MC_VOLUME_N,
                      rng: Optional[RandomStream] = None) -> Tuple[float, float]:
    """Monte Carlo estimate (mean, std_err) of an orthant-union volume."""
    P = _check_points(P)
    if P.shape[0] == 0:
        return 0.0, 0.0
    rng = rng or RandomStream(880, 0)
    gen = rng.generator()
    d = P.shape[1]
    hits = 0
    chunk = max(1, min(n, 4_000_000 // max(1, P.shape[0] * d)))
    left = n
    while left > 0:
        m = min(chunk, left)
        X = gen.random((m, d))
        if upper:
            inside = np.any(np.all(X[:, None, :] >= P[None, :, :], axis=2), axis=1)
        else:
            inside = np.any(np.all(X[:, None, :] <= P[None, :, :], axis=2), axis=1)
        hits += int(np.count_nonzero(inside))
        left -= m
    p = hits / n
    return p, float(np.sqrt(p * (1.0 - p) / n))


# ---------------------------------------------------------------------------
# labeled designs and the undecided region

@dataclass(frozen=True)
class LabeledDesign:
    """Evaluated points with their fail/safe labels (fail means g < y)."""

    points: np.ndarray          # (m, d)
    fail: np.ndarray            # (m,) bool
    values: Optional[np.ndarray] = None   # (m,) g values when recorded

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.points, dtype=float))
        lab = np.asarray(self.fail, dtype=bool)
        object.__setattr__(self, "points", P)
        object.__setattr__(self, "fail", lab)
        if P.ndim != 2:
            raise ValueError("points must be a 2-D array")
        if lab.shape != (P.shape[0],):
            raise ValueError("labels must match the number of points")
        if self.values is not None:
            vals = np.asarray(self.values, dtype=float)
            if vals.shape != (P.shape[0],):
                raise ValueError("values must match the number of points")
            object.__setattr__(self, "values", vals)
        if P.size and (P.min() < 0.0 or P.max() > 1.0):
            raise ValueError("points must lie in the unit cube")

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def check_consistency(self) -> None:
        """Raise if some safe point is dominated by some fail point."""
        F = self.points[self.fail]
        S = self.points[~self.fail]
        if F.shape[0] == 0 or S.shape[0] == 0:
            return
        bad = np.any(np.all(S[:, None, :] <= F[None, :, :], axis=2))
        if bad:
            raise MonotonicityViolation(
                "a safe point is componentwise below a fail point")


@dataclass(frozen=True)
class StaircaseRegion:
    """The undecided set: the cube minus certified fail/safe orthant unions.

    ``fail_generators`` and ``safe_generators`` are antichains; their
    lower and upper orthant unions must be disjoint, which for antichains
    reduces to no safe generator being dominated by a fail generator.
    """

    fail_generators: np.ndarray   # (m1, d) maximal antichain
    safe_generators: np.ndarray   # (m2, d) minimal antichain
    dimension: int

    @classmethod
    def empty(cls, dimension: int) -> "StaircaseRegion":
        return cls(np.empty((0, dimension)), np.empty((0, dimension)), dimension)

    @classmethod
    def from_design(cls, design: LabeledDesign) -> "StaircaseRegion":
        design.check_consistency()
        F = maximal_points(design.points[design.fail]) if design.fail.any() \
            else np.empty((0, design.dimension))
        S = minimal_points(design.points[~design.fail]) if (~design.fail).any() \
            else np.empty((0, design.dimension))
        return cls(F, S, design.dimension)

    def __post_init__(self):
        F = np.atleast_2d(np.asarray(self.fail_generators, dtype=float))
        S = np.atleast_2d(np.asarray(self.safe_generators, dtype=float))
        if F.size == 0:
            F = F.reshape(0, self.dimension)
        if S.size == 0:
            S = S.reshape(0, self.dimension)
        object.__setattr__(self, "fail_generators", F)
        object.__setattr__(self, "safe_generators", S)
        if F.shape[1] != self.dimension or S.shape[1] != self.dimension:
            raise DimensionMismatch("generator dimension mismatch")
        if not is_antichain(F) or not is_antichain(S):
            raise ValueError("generators must form antichains")
        if F.shape[0] and S.shape[0]:
            overlap = np.any(np.all(S[:, None, :] <= F[None, :, :], axis=2))
            if overlap:
                raise OverlappingRegions(
                    "certified fail and safe orthants intersect")

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise DimensionMismatch(
                f"expected shape ({self.dimension},), got {x.shape}")
        if self.fail_generators.shape[0] and \
                np.any(np.all(x <= self.fail_generators, axis=1)):
            return False
        if self.safe_generators.shape[0] and \
                np.any(np.all(x >= self.safe_generators, axis=1)):
            return False
        return True

    def contains_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.dimension:
            raise DimensionMismatch(
                f"expected batch of shape (n, {self.dimension}), got {X.shape}")
        out = np.ones(X.shape[0], dtype=bool)
        if self.fail_generators.shape[0]:
            F = self.fail_generators
            out &= ~np.any(np.all(X[:, None, :] <= F[None, :, :], axis=2), axis=1)
        if self.safe_generators.shape[0]:
            S = self.safe_generators
            out &= ~np.any(np.all(X[:, None, :] >= S[None, :, :], axis=2), axis=1)
        return out

    def with_fail(self, x) -> "StaircaseRegion":
        x = np.asarray(x, dtype=float)
        if self.safe_generators.shape[0] and \
                np.any(np.all(x >= self.safe_generators, axis=1)):
            raise MonotonicityViolation(
                "fail point dominates a safe generator")
        return StaircaseRegion(_insert_maximal(self.fail_generators, x),
                               self.safe_generators, self.dimension)

    def with_safe(self, x) -> "StaircaseRegion":
        x = np.asarray(x, dtype=float)
        if self.fail_generators.shape[0] and \
                np.any(np.all(x <= self.fail_generators, axis=1)):
            raise MonotonicityViolation(
                "safe point is dominated by a fail generator")
        flipped = _insert_maximal(1.0 - self.safe_generators, 1.0 - x)
        return StaircaseRegion(self.fail_generators, 1.0 - flipped,
                               self.dimension)

    def volume_bounds(self) -> Tuple[float, float]:
        """(vol of certified fail set, 1 - vol of certified safe set)."""
        lo = _vol_lower_union(self.fail_generators)
        hi = 1.0 - _vol_lower_union(1.0 - self.safe_generators) \
            if self.safe_generators.shape[0] else 1.0
        return lo, hi


def bounds_from_design(design: LabeledDesign,
                       rng: Optional[RandomStream] = None) -> ProbabilityBounds:
    """Deterministic bounds on P(g < y) implied by a labeled design.

    Exact orthant-union volumes for d <= 6; beyond that the volumes are
    estimated by Monte Carlo and the interval is widened so that it holds
    with probability at least 1 - 2e-6 (Hoeffding on each side), with the
    bound kind downgraded accordingly.
    """
    region = StaircaseRegion.from_design(design)
    d = design.dimension
    m = design.points.shape[0]
    if d <= MC_VOLUME_DIM:
        lo, hi = region.volume_bounds()
        return ProbabilityBounds(max(0.0, lo), min(1.0, hi),
                                 kind=DETERMINISTIC, queries_used=m)
    rng = rng or RandomStream(424242, 0)
    n = _MC_VOLUME_N
    margin = float(np.sqrt(np.log(2.0 / _MC_ALPHA) / (2.0 * n)))
    lo_hat, _ = orthant_volume_mc(region.fail_generators, upper=False, n=n,
                                  rng=rng.derive(0)) \
        if region.fail_generators.shape[0] else (0.0, 0.0)
    hi_hat, _ = orthant_volume_mc(region.safe_generators, upper=True, n=n,
                                  rng=rng.derive(1)) \
        if region.safe_generators.shape[0] else (0.0, 0.0)
    lower = max(0.0, lo_hat - margin)
    upper = min(1.0, 1.0 - hi_hat + margin)
    return ProbabilityBounds(lower, max(lower, upper), kind=HIGH_PROBABILITY,
                             alpha=2.0 * _MC_ALPHA, queries_used=m)


# ---------------------------------------------------------------------------
# sequential bounder

class RejectionSampler:
    """Uniform sampling on the undecided region by chunked rejection."""

    name = "rejection"

    def __init__(self, chunk: int = 4096, max_attempts: int = 20_000_000):
        self.chunk = int(chunk)
        self.max_attempts = int(max_attempts)
        self.attempts = 0
        self.draws = 0
        self._buffer: List[np.ndarray] = []

    def reset(self) -> None:
        self.attempts = 0
        self.draws = 0
        self._buffer = []

    def draw(self, region: StaircaseRegion, gen: np.random.Generator) -> np.ndarray:
        # leftover candidates are re-checked against the current region;
        # the unused tail of an iid uniform stream stays uniform
        while self._buffer:
            x = self._buffer.pop()
            if region.contains(x):
                self.draws += 1
                return x
        spent = 0
        while spent < self.max_attempts:
            X = gen.random((self.chunk, region.dimension))
            spent += self.chunk
            self.attempts += self.chunk
            ok = region.contains_batch(X)
            idx = np.flatnonzero(ok)
            if idx.size:
                keep = X[idx]
                self._buffer = [row for row in keep[:0:-1]]
                self.draws += 1
                return keep[0]
        raise SamplerStalled(
            f"no region point found in {self.max_attempts} uniform draws")

    def draw_batch(self, region: StaircaseRegion, gen: np.random.Generator,
                   n: int) -> np.ndarray:
        """Return up to ``n`` uniform region points (fewer only on stall)."""
        out: List[np.ndarray] = []
        # leftover candidates are re-checked against the current region;
        # the unused tail of an iid uniform stream stays uniform
        while self._buffer and len(out) < n:
            x = self._buffer.pop()
            if region.contains(x):
                self.draws += 1
                out.append(x)
        spent = 0
        while len(out) < n and spent < self.max_attempts:
            X = gen.random((self.chunk, region.dimension))
            spent += self.chunk
            self.attempts += self.chunk
            keep = X[region.contains_batch(X)]
            take = keep[:n - len(out)]
            out.extend(take)
            self.draws += take.shape[0]
            if len(out) >= n and keep.shape[0] > take.shape[0]:
                self._buffer = [row for row in keep[take.shape[0]:][::-1]]
        if len(out) < n:
            raise SamplerStalled(
                f"collected {len(out)}/{n} region points in {spent} uniform draws")
        return np.array(out)

    def acceptance_rate(self) -> float:
        if self.attempts == 0:
            return 1.0
        return self.draws / self.attempts


@dataclass
class SelectionConfig:
    """How the next query point is chosen from the undecided region.

    A pool of ``pool_size`` (approximately) uniform region points is kept on
    hand; each step scores a random subsample of ``score_subsample`` of them
    and queries the best.  A candidate's two scores are the unknown mass it
    would retire if it failed (its lower-orthant contribution) and if it
    proved safe (upper-orthant contribution).

    rule:
        "balance"  - maximize the product of the two scores, favoring
                     points that make guaranteed progress on both bounds;
        "coverage" - maximize their sum, favoring whichever side currently
                     has the most retirable mass;
        "maximin"  - ignore the volume scores and take the candidate
                     farthest (Euclidean) from every queried point;
        "uniform"  - no scoring, query a single uniform draw per step;
        "auto"     - "balance" for d <= 2, "coverage" above.
    exact_scores:
        True computes the scores as exact staircase volume increments,
        False ranks candidates by pool domination counts (a cheap Monte
        Carlo proxy for the same volumes); "auto" is exact for d <= 2.
    """

    pool_size: int = 192
    score_subsample: int = 48
    rule: str = "auto"
    exact_scores: Union[bool, str] = "auto"

    def resolve(self, dimension: int) -> Tuple[str, bool]:
        rule = self.rule
        if rule == "auto":
            rule = "balance" if dimension <= 2 else "coverage"
        if rule not in ("balance", "coverage", "maximin", "uniform"):
            raise ValueError(f"unknown selection rule {self.rule!r}")
        exact = self.exact_scores
        if exact == "auto":
            exact = dimension <= 2
        return rule, bool(exact)


@dataclass
class SequentialRun:
    """Result of a sequential bounding run."""

    design: LabeledDesign
    region: StaircaseRegion
    bounds: ProbabilityBounds
    trace: List[Tuple[int, float, float]]   # (queries_so_far, lower, upper)
    sampler_name: str
    queries_used: int
    selection_rule: str = "uniform"


def sequential_bounder(f: BlackBoxFunction, budget: int, rng: RandomStream,
                       sampler: Union[str, object] = "auto",
                       selection: Optional[SelectionConfig] = None,
                       walk_config=None,
                       switch_acceptance: float = 5e-3) -> SequentialRun:
    """Spend ``budget`` oracle queries bounding p = P(g(X) < y).

    Each step draws candidate points uniformly from the current undecided
    region (via the chosen sampler), selects one according to ``selection``,
    labels it with one oracle call, and folds it into the certified
    fail/safe orthant unions.  Bounds are exact set volumes, so they are
    deterministic and nested over the run regardless of how the points were
    produced (for d <= 6; beyond that volumes fall back to Monte Carlo and
    only the final bounds are reported).

    Parameters
    ----------
    f : BlackBoxFunction
        Componentwise nondecreasing in the orientation already applied.
    budget : int
        Total oracle queries.
    rng : RandomStream
    sampler : str or object
        "rejection", "mcmc" (transformed-walk chains), "auto" (rejection
        that hands over to the walk sampler once its acceptance rate drops
        below ``switch_acceptance``), or any object with a
        ``draw(region, gen) -> point`` method (implies uniform selection).
    selection : SelectionConfig, optional
        Candidate scoring configuration; defaults to dimension-adaptive
        scoring (see :class:`SelectionConfig`).
    walk_config
        Passed to the walk sampler when it is instantiated.

    Returns
    -------
    SequentialRun
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    d = f.dimension
    gen = rng.generator()
    rejection = RejectionSampler()
    walker = None
    if isinstance(sampler, str):
        if sampler not in ("auto", "rejection", "mcmc"):
            raise ValueError(f"unknown sampler {sampler!r}")
        mode = sampler
    else:
        mode = "custom"
    selection = selection or SelectionConfig()
    rule, exact_scores = selection.resolve(d)
    if mode == "custom":
        rule = "uniform"

    exact = d <= MC_VOLUME_DIM
    F = np.empty((0, d))
    Fc = np.empty((0, d))   # flipped safe generators 1 - S (maximal antichain)
    vol_lo = 0.0
    vol_safe = 0.0
    pts: List[np.ndarray] = []
    labels: List[bool] = []
    vals: List[float] = []
    trace: List[Tuple[int, float, float]] = []
    name = mode
    region = StaircaseRegion.empty(d)
    pool = np.empty((0, d))

    def make_walker():
        from .mcmc import RegionWalkSampler
        return RegionWalkSampler(region, gen, walk_config)

    if mode == "mcmc":
        walker = make_walker()

    def refill(pool: np.ndarray, n: int) -> np.ndarray:
        nonlocal walker, name
        if pool.shape[0] >= n:
            return pool
        need = n - pool.shape[0]
        if mode == "auto" and walker is None \
                and rejection.attempts >= 8 * rejection.chunk \
                and rejection.acceptance_rate() < switch_acceptance:
            walker = make_walker()
            name = "auto(rejection->mcmc)"
        if walker is not None:
            walker.update_region(region)
            fresh = walker.draw(need)
        else:
            fresh = rejection.draw_batch(region, gen, need)
        return np.vstack([pool, fresh]) if pool.shape[0] else fresh

    for step in range(budget):
        if mode == "custom":
            x = sampler.draw(region, gen)
            name = getattr(sampler, "name", "custom")
        elif rule == "uniform":
            pool = refill(np.empty((0, d)), 1)
            x = pool[0]
            pool = np.empty((0, d))
        else:
            if pool.shape[0]:
                pool = pool[region.contains_batch(pool)]
            pool = refill(pool, selection.pool_size)
            if pool.shape[0] > selection.score_subsample:
                sel = gen.choice(pool.shape[0], selection.score_subsample,
                                 replace=False)
            else:
                sel = np.arange(pool.shape[0])
            P = pool[sel]
            if rule == "maximin":
                if pts:
                    D = np.asarray(pts)
                    score = np.sqrt(((P[:, None, :] - D[None, :, :]) ** 2)
                                    .sum(axis=2)).min(axis=1)
                else:
                    score = np.ones(P.shape[0])
            else:
                if exact_scores:
                    gain_fail = np.array([_delta_lower_volume(F, c) for c in P])
                    gain_safe = np.array(
                        [_delta_lower_volume(Fc, 1.0 - c) for c in P])
                else:
                    geq = np.all(P[:, None, :] >= P[None, :, :], axis=2)
                    gain_fail = geq.sum(axis=0).astype(float)
                    gain_safe = geq.sum(axis=1).astype(float)
                if rule == "balance":
                    score = gain_fail * gain_safe
                else:
                    score = gain_fail + gain_safe
            pick = int(np.argmax(score))
            x = P[pick]
            pool = np.delete(pool, sel[pick], axis=0)

        value = f(x)
        failed = value < f.threshold
        pts.append(x)
        labels.append(failed)
        vals.append(value)
        if failed:
            if exact:
                vol_lo += _delta_lower_volume(F, x)
            region = region.with_fail(x)
            F = region.fail_generators
        else:
            if exact:
                vol_safe += _delta_lower_volume(Fc, 1.0 - x)
            region = region.with_safe(x)
            Fc = 1.0 - region.safe_generators
        if exact:
            trace.append((step + 1, vol_lo, 1.0 - vol_safe))

    design = LabeledDesign(np.array(pts), np.array(labels), np.array(vals))
    if exact:
        bounds = ProbabilityBounds(max(0.0, vol_lo), min(1.0, 1.0 - vol_safe),
                                   kind=DETERMINISTIC, queries_used=budget)
    else:
        bounds = bounds_from_design(design, rng=rng.derive(7))
        trace.append((budget, bounds.lower, bounds.upper))
    return SequentialRun(design=design, region=region, bounds=bounds,
                         trace=trace, sampler_name=name, queries_used=budget,
                         selection_rule=rule)


# ---------------------------------------------------------------------------
# continuous piecewise-linear functions and their monotonicity report

@dataclass(frozen=True)
class CPWLFunction:
    """Piecewise-affine function given by axis-aligned boxes.

    Piece k is the box [lows[k], highs[k]] with value
    coefficients[k] . x + intercepts[k].  Pieces may share boundary faces;
    interior overlaps are only legal when both pieces carry the identical
    affine map, otherwise the definition is ambiguous.
    """

    lows: np.ndarray           # (K, d)
    highs: np.ndarray          # (K, d)
    coefficients: np.ndarray   # (K, d)
    intercepts: np.ndarray     # (K,)

    def __post_init__(self):
        lows = np.atleast_2d(np.asarray(self.lows, dtype=float))
        highs = np.atleast_2d(np.asarray(self.highs, dtype=float))
        coef = np.atleast_2d(np.asarray(self.coefficients, dtype=float))
        icpt = np.atleast_1d(np.asarray(self.intercepts, dtype=float))
        for nm, arr in (("lows", lows), ("highs", highs), ("coefficients", coef)):
            object.__setattr__(self, nm, arr)
        object.__setattr__(self, "intercepts", icpt)
        K, d = lows.shape
        if highs.shape != (K, d) or coef.shape != (K, d) or icpt.shape != (K,):
            raise ValueError("piece arrays have inconsistent shapes")
        if np.any(highs < lows):
            raise ValueError("piece boxes must satisfy lows <= highs")
        self._check_overlaps()

    @property
    def dimension(self) -> int:
        return self.lows.shape[1]

    @property
    def n_pieces(self) -> int:
        return self.lows.shape[0]

    def _check_overlaps(self) -> None:
        K = self.n_pieces
        for i in range(K):
            for j in range(i + 1, K):
                lo = np.maximum(self.lows[i], self.lows[j])
                hi = np.minimum(self.highs[i], self.highs[j])
                if np.all(lo < hi):   # interior overlap
                    same = (np.allclose(self.coefficients[i], self.coefficients[j],
                                        atol=1e-12) and
                            abs(self.intercepts[i] - self.intercepts[j]) <= 1e-12)
                    if not same:
                        raise OverlappingRegions(
                            f"pieces {i} and {j} overlap with different maps")

    def piece_index(self, x) -> int:
        x = np.asarray(x, dtype=float)
        inside = np.all((self.lows <= x) & (x <= self.highs), axis=1)
        idx = np.flatnonzero(inside)
        if idx.size == 0:
            raise ValueError(f"point {x} lies in no piece")
        return int(idx[0])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            k = self.piece_index(x)
            return float(self.coefficients[k] @ x + self.intercepts[k])
        return np.array([self(row) for row in x])


@dataclass(frozen=True)
class MonotonicityReport:
    """Per-coordinate slope signs of a piecewise-affine function.

    ``directions[j]`` is +1 / -1 when every piece is nondecreasing /
    nonincreasing in coordinate j (0 when the coordinate never appears),
    and ``mixed[j]`` flags coordinates with sign conflicts across pieces.
    """

    directions: np.ndarray   # (d,) int
    mixed: np.ndarray        # (d,) bool

    @property
    def is_monotone(self) -> bool:
        return not bool(self.mixed.any())

    @property
    def orientation(self) -> Optional[np.ndarray]:
        """Sign flips mapping the function to a nondecreasing one, when
        monotone: coordinates with direction -1 get flipped."""
        if not self.is_monotone:
            return None
        return np.where(self.directions < 0, -1, 1)


def monotonicity_directions(f: CPWLFunction, tol: float = 0.0) -> MonotonicityReport:
    """Exact per-coordinate monotonicity from the piece coefficients."""
    coef = f.coefficients
    pos = coef > tol
    neg = coef < -tol
    any_pos = pos.any(axis=0)
    any_neg = neg.any(axis=0)
    mixed = any_pos & any_neg
    directions = np.where(any_pos & ~mixed, 1, np.where(any_neg & ~mixed, -1, 0))
    return MonotonicityReport(directions=directions.astype(int), mixed=mixed)


# ---------------------------------------------------------------------------
# CSV round trips

def save_design(design: LabeledDesign, path) -> None:
    d = design.dimension
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{j+1}" for j in range(d)] + ["value", "fail"])
        for i in range(design.points.shape[0]):
            val = "" if design.values is None else repr(float(design.values[i]))
            w.writerow([repr(float(v)) for v in design.points[i]]
                       + [val, int(design.fail[i])])


def load_design(path) -> LabeledDesign:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError("empty design file")
    header = rows[0]
    if header[-1] != "fail" or header[-2] != "value":
        raise ValueError("design file must end with value,fail columns")
    d = len(header) - 2
    pts, vals, labs = [], [], []
    has_values = True
    for row in rows[1:]:
        if not row:
            continue
        pts.append([float(v) for v in row[:d]])
        if row[d] == "":
            has_values = False
        else:
            vals.append(float(row[d]))
        labs.append(bool(int(row[d + 1])))
    values = np.array(vals) if has_values and vals else None
    return LabeledDesign(np.array(pts), np.array(labs), values)


def save_trace(run: SequentialRun, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["queries", "p_lower", "p_upper"])
        for q, lo, hi in run.trace:
            w.writerow([q, repr(lo), repr(hi)])
