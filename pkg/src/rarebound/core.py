"""Shared harness types: the instrumented black-box wrapper, probability
bound containers, reproducible random streams, and crude Monte Carlo
estimators used as references throughout.

Conventions used everywhere in this package:

* the input space is the closed unit cube [0, 1]^d with the uniform law;
* a point x "fails" when g(x) < y for a fixed threshold y (strict);
* lower/upper bounds on p = P(g(X) < y) are conservative, i.e. the true p
  is inside [lower, upper] either surely (Deterministic) or with
  probability at least 1 - alpha (HighProbability).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

__all__ = [
    "DimensionMismatch",
    "InconsistentBounds",
    "BlackBoxFunction",
    "ProbabilityBounds",
    "DETERMINISTIC",
    "HIGH_PROBABILITY",
    "MCEstimate",
    "RandomStream",
    "mc_estimate",
    "surrogate_mc_estimate",
    "intersect_bounds",
    "eval_batch",
]

DETERMINISTIC = "deterministic"
HIGH_PROBABILITY = "high-probability"


class DimensionMismatch(ValueError):
    """An input point does not match the function's dimension."""


class InconsistentBounds(ValueError):
    """Two bound intervals to be intersected have empty intersection."""


class BlackBoxFunction:
    """Query-counting wrapper around a real-valued function on [0, 1]^d.

    Every point evaluated through :meth:`__call__` or
    :meth:`evaluate_batch` increments :attr:`query_count` by exactly one
    per point; the counter is guarded by a lock so concurrent use stays
    consistent.  The raw (uncounted) evaluator remains reachable through
    :attr:`evaluator` for analysis code that must not spend budget.

    Parameters
    ----------
    evaluator:
        Either a scalar callable taking a 1-D array of length ``dimension``
        or, when ``vectorized`` is true, a callable mapping an (n, d) array
        to an (n,) array.
    dimension:
        Input dimension d >= 1.
    threshold:
        Failure threshold y; failure means g(x) < y strictly.
    """

    def __init__(self, evaluator: Callable, dimension: int, threshold: float,
                 vectorized: bool = False, name: str = ""):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self.evaluator = evaluator
        self.dimension = int(dimension)
        self.threshold = float(threshold)
        self.vectorized = bool(vectorized)
        self.name = name
        self._count = 0
        self._lock = threading.Lock()

    @property
    def query_count(self) -> int:
        return self._count

    def reset_count(self) -> None:
        with self._lock:
            self._count = 0

    def _check_point(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise DimensionMismatch(
                f"expected point of shape ({self.dimension},), got {x.shape}")
        return x

    def __call__(self, x) -> float:
        x = self._check_point(x)
        with self._lock:
            self._count += 1
        if self.vectorized:
            return float(np.asarray(self.evaluator(x[None, :]), dtype=float)[0])
        return float(self.evaluator(x))

    def evaluate_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.dimension:
            raise DimensionMismatch(
                f"expected batch of shape (n, {self.dimension}), got {X.shape}")
        with self._lock:
            self._count += X.shape[0]
        if self.vectorized:
            out = np.asarray(self.evaluator(X), dtype=float)
            if out.shape != (X.shape[0],):
                raise ValueError("vectorized evaluator returned wrong shape")
            return out
        return np.array([float(self.evaluator(row)) for row in X])

    def is_failure(self, value: float) -> bool:
        return value < self.threshold


def eval_batch(predictor: Callable, X: np.ndarray) -> np.ndarray:
    """Evaluate an arbitrary callable on an (n, d) batch.

    Tries a single vectorized call first and falls back to a row loop if
    the callable only supports single points.
    """
    X = np.asarray(X, dtype=float)
    try:
        out = np.asarray(predictor(X), dtype=float)
        if out.shape == (X.shape[0],):
            return out
    except Exception:
        pass
    return np.array([float(predictor(row)) for row in X])


@dataclass(frozen=True)
class ProbabilityBounds:
    """A conservative interval [lower, upper] for a probability.

    ``kind`` is either :data:`DETERMINISTIC` (the interval surely contains
    the target) or :data:`HIGH_PROBABILITY` (contains it with probability
    at least ``1 - alpha``).  ``queries_used`` records the oracle budget
    spent producing it.
    """

    lower: float
    upper: float
    kind: str = DETERMINISTIC
    alpha: Optional[float] = None
    queries_used: int = 0

    def __post_init__(self):
        # normalize numpy scalars so downstream reprs stay plain
        object.__setattr__(self, "lower", float(self.lower))
        object.__setattr__(self, "upper", float(self.upper))
        if not (0.0 <= self.lower <= self.upper <= 1.0):
            raise ValueError(
                f"invalid bounds [{self.lower}, {self.upper}]")
        if self.kind not in (DETERMINISTIC, HIGH_PROBABILITY):
            raise ValueError(f"unknown bound kind {self.kind!r}")
        if self.kind == HIGH_PROBABILITY:
            if self.alpha is None or not (0.0 < self.alpha < 1.0):
                raise ValueError("high-probability bounds need alpha in (0, 1)")
        elif self.alpha is not None:
            raise ValueError("deterministic bounds carry no alpha")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, p: float) -> bool:
        return self.lower <= p <= self.upper


def intersect_bounds(a: ProbabilityBounds, b: ProbabilityBounds) -> ProbabilityBounds:
    """Combine two bound intervals for the same probability.

    The result is the interval intersection.  It is deterministic only if
    both inputs are; otherwise the failure probabilities add (union
    bound), so ``alpha = alpha_a + alpha_b`` over the present alphas.
    """
    lower = max(a.lower, b.lower)
    upper = min(a.upper, b.upper)
    if lower > upper:
        raise InconsistentBounds(
            f"intervals [{a.lower}, {a.upper}] and [{b.lower}, {b.upper}] are disjoint")
    if a.kind == DETERMINISTIC and b.kind == DETERMINISTIC:
        kind, alpha = DETERMINISTIC, None
    else:
        kind = HIGH_PROBABILITY
        alpha = min(0.999999, (a.alpha or 0.0) + (b.alpha or 0.0))
        if alpha <= 0.0:
            raise ValueError("high-probability input with missing alpha")
    return ProbabilityBounds(lower, upper, kind=kind, alpha=alpha,
                             queries_used=a.queries_used + b.queries_used)


@dataclass(frozen=True)
class MCEstimate:
    """Plain Monte Carlo estimate of a failure probability."""

    p_hat: float
    n: int
    std_err: float
    ci95: Tuple[float, float]

    @classmethod
    def from_counts(cls, hits: int, n: int) -> "MCEstimate":
        if n <= 0:
            raise ValueError("n must be positive")
        p = hits / n
        se = float(np.sqrt(p * (1.0 - p) / n))
        lo = max(0.0, p - 1.96 * se)
        hi = min(1.0, p + 1.96 * se)
        return cls(p_hat=p, n=n, std_err=se, ci95=(lo, hi))


@dataclass(frozen=True)
class RandomStream:
    """Counter-based RNG stream: (seed, stream_id) fully determine output.

    Distinct ``stream_id`` values under one seed give statistically
    independent streams, so replication r can simply use stream_id=r.
    :meth:`generator` returns a *fresh* generator each call, so repeated
    calls replay the same sequence.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.Generator(
            np.random.Philox(key=[self.seed & 0xFFFFFFFFFFFFFFFF,
                                  self.stream_id & 0xFFFFFFFFFFFFFFFF]))

    def derive(self, substream: int) -> "RandomStream":
        """A dependent substream, offset in the id space to avoid collision
        with replication ids (which are small non-negative integers)."""
        return RandomStream(self.seed, self.stream_id + (substream + 1) * 1_000_003)


def mc_estimate(f: BlackBoxFunction, n: int, rng: RandomStream) -> MCEstimate:
    """Crude Monte Carlo estimate of P(g(X) < y) with X uniform on the cube."""
    if n <= 0:
        raise ValueError("n must be positive")
    gen = rng.generator()
    X = gen.random((n, f.dimension))
    vals = f.evaluate_batch(X)
    hits = int(np.count_nonzero(vals < f.threshold))
    return MCEstimate.from_counts(hits, n)


def surrogate_mc_estimate(predictor: Callable, dimension: int, threshold: float,
                          n: int, rng: RandomStream) -> MCEstimate:
    """Monte Carlo failure estimate with the indicator taken on a surrogate.

    Uses the same generator layout as :func:`mc_estimate`, so an identical
    (seed, stream_id) with predictor == g reproduces its p_hat exactly.
    No query counter is touched.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    gen = rng.generator()
    X = gen.random((n, dimension))
    vals = eval_batch(predictor, X)
    hits = int(np.count_nonzero(vals < threshold))
    return MCEstimate.from_counts(hits, n)
