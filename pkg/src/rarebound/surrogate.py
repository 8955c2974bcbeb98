"""Conservative surrogates: shifted predictors and dominance-constrained fits.

A cheap regression surrogate of an expensive limit state is useless for
rare-event work unless its errors can be pushed to the safe side.  Two
mechanisms are provided.  The additive route fits any regression family,
then shifts predictions down by the worst overprediction seen on a held-out
test set; a Bernstein-type certificate bounds the probability that a fresh
point is still overpredicted.  The constrained route builds the safety bias
into the fit itself: a weighted least-squares objective minimized subject to
first-order stochastic dominance between the surrogate's values and the
data, enforced through a smoothed-indicator penalty with continuation and
re-checked with exact indicators afterwards.

Both routes yield estimates that err on the pessimistic side for failure
events of the form g < y.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np

from .core import RandomStream
from .special import NonConvergence

CONSERVATIVE_LOW = "conservative-low"
CONSERVATIVE_HIGH = "conservative-high"

DEFAULT_BERNSTEIN_C = 6.0


class SingularDesign(ValueError):
    """The polynomial feature matrix is rank deficient."""


class ZeroVariance(ValueError):
    """The response has no variance, so predictivity is undefined."""


# ---------------------------------------------------------------------------
# surrogate families

@dataclass(frozen=True)
class PolynomialFamily:
    """All monomials of total degree at most ``degree`` in ``dimension`` inputs."""

    dimension: int
    degree: int

    def __post_init__(self):
        if self.dimension < 1 or self.degree < 0:
            raise ValueError("dimension must be >= 1 and degree >= 0")

    @property
    def exponents(self) -> np.ndarray:
        combos = []
        for k in range(self.degree + 1):
            for c in itertools.combinations_with_replacement(range(self.dimension), k):
                e = np.zeros(self.dimension, dtype=int)
                for j in c:
                    e[j] += 1
                combos.append(e)
        return np.array(combos, dtype=int)

    @property
    def n_parameters(self) -> int:
        return math.comb(self.dimension + self.degree, self.degree)

    def features(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        E = self.exponents
        return np.prod(X[:, None, :] ** E[None, :, :], axis=2)

    def init_parameters(self, gen: np.random.Generator) -> np.ndarray:
        return np.zeros(self.n_parameters)

    def value_and_grad(self, eta: np.ndarray, X: np.ndarray):
        """Predictions and their Jacobian with respect to eta."""
        Phi = self.features(X)
        return Phi @ eta, Phi


@dataclass(frozen=True)
class FeedforwardFamily:
    """Small fully connected network with logistic activations.

    ``hidden`` holds the hidden layer widths (one or two layers is typical);
    the readout is linear.  Parameters are stored as a flat vector so the
    family can share the generic optimizers in this module.
    """

    dimension: int
    hidden: Tuple[int, ...] = (8, 8)

    def __post_init__(self):
        if self.dimension < 1 or not self.hidden or any(h < 1 for h in self.hidden):
            raise ValueError("need dimension >= 1 and positive hidden widths")

    @property
    def layer_shapes(self) -> List[Tuple[int, int]]:
        sizes = [self.dimension, *self.hidden, 1]
        return [(sizes[i], sizes[i + 1]) for i in range(len(sizes) - 1)]

    @property
    def n_parameters(self) -> int:
        return sum(m * n + n for m, n in self.layer_shapes)

    def _unpack(self, eta: np.ndarray):
        out = []
        k = 0
        for m, n in self.layer_shapes:
            W = eta[k:k + m * n].reshape(m, n)
            k += m * n
            b = eta[k:k + n]
            k += n
            out.append((W, b))
        return out

    def init_parameters(self, gen: np.random.Generator) -> np.ndarray:
        parts = []
        for m, n in self.layer_shapes:
            scale = math.sqrt(2.0 / (m + n))
            parts.append(gen.normal(0.0, scale, m * n))
            parts.append(np.zeros(n))
        return np.concatenate(parts)

    def value_and_grad(self, eta: np.ndarray, X: np.ndarray):
        """Predictions and their Jacobian with respect to eta (backprop)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        layers = self._unpack(eta)
        acts = [X]
        h = X
        for idx, (W, b) in enumerate(layers):
            z = h @ W + b
            h = z if idx == len(layers) - 1 else 1.0 / (1.0 + np.exp(-z))
            acts.append(h)
        y = h[:, 0]
        n = X.shape[0]
        J = np.empty((n, self.n_parameters))
        # reverse pass with upstream sensitivity per sample
        delta = np.ones((n, 1))
        k = self.n_parameters
        for idx in range(len(layers) - 1, -1, -1):
            W, b = layers[idx]
            a_in, a_out = acts[idx], acts[idx + 1]
            if idx != len(layers) - 1:
                delta = delta * a_out * (1.0 - a_out)
            m, width = W.shape
            k -= width
            J[:, k:k + width] = delta
            k -= m * width
            J[:, k:k + m * width] = (a_in[:, :, None] * delta[:, None, :]).reshape(n, -1)
            delta = delta @ W.T
        return y, J


Family = Union[PolynomialFamily, FeedforwardFamily]


@dataclass
class RegressionSurrogate:
    """A fitted member of a surrogate family; evaluation is deterministic."""

    family: Family
    eta: np.ndarray
    fitted: bool = True

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.family.dimension:
            raise ValueError(
                f"expected dimension {self.family.dimension}, got {X.shape[1]}")
        value, _ = self.family.value_and_grad(self.eta, X)
        return value

    def __call__(self, X) -> np.ndarray:
        return self.predict(X)


# ---------------------------------------------------------------------------
# fitting and predictivity

def _adam(loss_grad, x0, lr=0.02, epochs=2000, tol=1e-12):
    """Minimize a smooth objective; returns (best_x, best_loss)."""
    x = x0.copy()
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    b1, b2, eps = 0.9, 0.999, 1e-8
    best_x, best_loss = x.copy(), math.inf
    for t in range(1, epochs + 1):
        loss, g = loss_grad(x)
        if loss < best_loss:
            best_loss, best_x = loss, x.copy()
        if loss <= tol:
            break
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        x = x - lr * (m / (1 - b1 ** t)) / (np.sqrt(v / (1 - b2 ** t)) + eps)
    return best_x, best_loss


def fit(family: Family, X, y, rng: Optional[RandomStream] = None,
        weights=None, epochs: int = 3000, lr: float = 0.02,
        tol: float = 1e-10,
        overpredict_weight: float = 0.0) -> RegressionSurrogate:
    """Fit a surrogate family to data.

    Polynomial families are solved by exact (weighted) least squares;
    feedforward families by full-batch gradient training with a seeded
    deterministic initialization, stopping at ``tol`` or after ``epochs``.

    Parameters
    ----------
    family : PolynomialFamily or FeedforwardFamily
    X : array_like, shape (m, d)
    y : array_like, shape (m,)
    rng : RandomStream, optional
        Required for network initialization; ignored for polynomials.
    weights : array_like, optional
        Nonnegative per-point loss weights.
    overpredict_weight : float
        Extra multiplier on the squared loss of positive residuals
        (prediction above truth), making the fit hug the data from below;
        0 keeps the loss symmetric.  Network families only.

    Raises
    ------
    SingularDesign
        If the polynomial feature matrix has deficient rank.
    ValueError
        If there are fewer points than polynomial parameters, or an
        asymmetric loss is requested for a polynomial family.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.size:
        raise ValueError("X and y lengths differ")
    w = np.ones(y.size) if weights is None else np.asarray(weights, dtype=float).ravel()
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if overpredict_weight < 0.0:
        raise ValueError("overpredict_weight must be >= 0")
    if isinstance(family, PolynomialFamily):
        if overpredict_weight > 0.0:
            raise ValueError(
                "asymmetric loss needs gradient training; use a network family")
        if y.size < family.n_parameters:
            raise ValueError(
                f"need at least {family.n_parameters} points, got {y.size}")
        Phi = family.features(X)
        sw = np.sqrt(w)
        A = Phi * sw[:, None]
        eta, _, rank, _ = np.linalg.lstsq(A, y * sw, rcond=None)
        if rank < family.n_parameters:
            raise SingularDesign(
                f"feature rank {rank} < {family.n_parameters} parameters")
        return RegressionSurrogate(family=family, eta=eta)
    gen = (rng or RandomStream(0, 0)).generator()
    eta0 = family.init_parameters(gen)
    wn = w / w.sum()

    def loss_grad(eta):
        pred, J = family.value_and_grad(eta, X)
        r = pred - y
        scale = wn if overpredict_weight == 0.0 \
            else wn * (1.0 + overpredict_weight * (r > 0))
        return float(np.sum(scale * r * r)), 2.0 * (scale * r) @ J

    eta, _ = _adam(loss_grad, eta0, lr=lr, epochs=epochs, tol=tol)
    return RegressionSurrogate(family=family, eta=eta)


def q2(model: RegressionSurrogate, X, y) -> float:
    """Predictivity 1 - SSE/SST on a validation set.

    Raises
    ------
    ZeroVariance
        If the validation responses are constant.
    """
    y = np.asarray(y, dtype=float).ravel()
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst == 0.0:
        raise ZeroVariance("validation responses are constant")
    pred = model.predict(X)
    return 1.0 - float(np.sum((y - pred) ** 2)) / sst


# ---------------------------------------------------------------------------
# additive conservative shift

def bernstein_bound(n: int, alpha: float, C: float = DEFAULT_BERNSTEIN_C) -> float:
    """Certificate level B(n, alpha) = (C/n) log(n/alpha)."""
    if n < 2:
        raise ValueError("need n >= 2 test points")
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    return (C / n) * math.log(n / alpha)


def lambda_risk(n: int, p: float, C: float = DEFAULT_BERNSTEIN_C) -> float:
    """Risk level lambda(n, p) = min(1, n exp(-n p / C))."""
    if n < 1:
        raise ValueError("need n >= 1")
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    return min(1.0, n * math.exp(-n * p / C))


def lambda_crossing(p: float, C: float = DEFAULT_BERNSTEIN_C,
                    tol: float = 1e-9) -> float:
    """Test-set size n at which lambda(n, p) falls to p.

    Solves ``n exp(-n p / C) = p`` on the decreasing branch (n beyond the
    mode C/p) by bisection.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    lo = C / p                      # mode of n exp(-n p / C)
    hi = lo
    while lambda_risk(max(1, int(hi)), p, C) > p:
        hi *= 2.0
    f = lambda n: n * math.exp(-n * p / C) - p
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class ShiftCertificate:
    """What the shift was certified on: test size, level, and bound."""

    n_test: int
    alpha: float
    bernstein_bound: float
    c_constant: float = DEFAULT_BERNSTEIN_C


@dataclass
class ShiftedSurrogate:
    """A surrogate with an additive downward shift making it test-set safe."""

    base: RegressionSurrogate
    theta: float
    certificate: ShiftCertificate

    def __post_init__(self):
        if self.theta > 0.0:
            raise ValueError(f"shift must be <= 0, got {self.theta}")

    def predict(self, X) -> np.ndarray:
        return self.base.predict(X) + self.theta

    def __call__(self, X) -> np.ndarray:
        return self.predict(X)


def conservative_shift(model: RegressionSurrogate, X_test, y_test,
                       alpha: float = 0.1,
                       C: float = DEFAULT_BERNSTEIN_C) -> ShiftedSurrogate:
    """Shift a fitted surrogate down past its worst test-set overprediction.

    With residuals r_i = prediction - truth on ``n`` held-out points, the
    shift is ``theta* = min(0, -max_i r_i)``, so the shifted surrogate never
    overpredicts on the certifying set.  The certificate records
    B(n, alpha) = (C/n) log(n/alpha), the level at which fresh-point
    overprediction frequency is controlled.

    The test set must be disjoint from the data the model was trained on;
    the certificate is meaningless otherwise.
    """
    y_test = np.asarray(y_test, dtype=float).ravel()
    if y_test.size < 2:
        raise ValueError("need at least 2 test points")
    resid = model.predict(X_test) - y_test
    theta = min(0.0, -float(resid.max()))
    cert = ShiftCertificate(n_test=y_test.size, alpha=alpha,
                            bernstein_bound=bernstein_bound(y_test.size, alpha, C),
                            c_constant=C)
    return ShiftedSurrogate(base=model, theta=theta, certificate=cert)


# ---------------------------------------------------------------------------
# first-order stochastic dominance machinery

def _weighted_cdf(values: np.ndarray, weights: np.ndarray,
                  anchors: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    v = values[order]
    cw = np.cumsum(weights[order])
    idx = np.searchsorted(v, anchors, side="right")
    return np.where(idx > 0, cw[np.minimum(idx, v.size) - 1], 0.0) * (idx > 0)


def check_fsd(sample_a, sample_b, weights=None,
              direction: str = CONSERVATIVE_LOW) -> float:
    """Largest signed dominance violation between two weighted samples.

    Under ``conservative-low`` the first sample must be stochastically
    smaller: its weighted CDF must sit on or above the second's at every
    anchor (the union of both samples' values).  The return value is the
    worst signed gap; nonpositive means dominance holds.
    """
    a = np.asarray(sample_a, dtype=float).ravel()
    b = np.asarray(sample_b, dtype=float).ravel()
    if a.size != b.size:
        raise ValueError("samples must have equal length")
    w = np.full(a.size, 1.0 / a.size) if weights is None \
        else np.asarray(weights, dtype=float).ravel()
    if w.size != a.size:
        raise ValueError("weights length must match the samples")
    anchors = np.concatenate([a, b])
    Fa = _weighted_cdf(a, w, anchors)
    Fb = _weighted_cdf(b, w, anchors)
    gap = Fb - Fa if direction == CONSERVATIVE_LOW else Fa - Fb
    if direction not in (CONSERVATIVE_LOW, CONSERVATIVE_HIGH):
        raise ValueError(f"unknown direction {direction!r}")
    return float(gap.max())


@dataclass
class RelaxationConfig:
    """Continuation schedule for the smoothed dominance penalty."""

    taus: Tuple[float, ...] = (0.1, 0.03, 0.01)
    penalty: float = 10.0
    penalty_growth: float = 2.0
    max_penalty_rounds: int = 6
    epochs: int = 600
    lr: float = 0.02
    violation_tol: float = 1e-9
    restarts: int = 2
    jitter: float = 0.2


@dataclass
class FSDFitResult:
    """Outcome of a dominance-constrained fit.

    ``violations`` holds the exact-indicator signed slack at every anchor
    after the repair step; the relaxation is never used for the report.
    """

    surrogate: RegressionSurrogate
    eta_star: np.ndarray
    theta_star: float
    violations: np.ndarray
    relaxation_trace: List[Tuple[float, float, float, float]]
    converged: bool
    direction: str = CONSERVATIVE_LOW

    def predict(self, X) -> np.ndarray:
        return self.surrogate.predict(X) + self.theta_star


def _exact_violations(pred_shifted: np.ndarray, y: np.ndarray, w: np.ndarray,
                      direction: str) -> np.ndarray:
    # anchors: the union of both jump sets; dominance there implies
    # dominance everywhere for step CDFs
    anchors = np.concatenate([pred_shifted, y])
    Fs = _weighted_cdf(pred_shifted, w, anchors)
    Fy = _weighted_cdf(y, w, anchors)
    return (Fy - Fs) if direction == CONSERVATIVE_LOW else (Fs - Fy)


def _repair_theta(pred: np.ndarray, y: np.ndarray, w: np.ndarray,
                  theta: float, direction: str) -> float:
    # shifting all predictions below min(y) (or above max(y)) always
    # restores dominance, so a feasible shift exists
    sign = -1.0 if direction == CONSERVATIVE_LOW else 1.0
    span = max(1.0, float(np.max(y) - np.min(y)), float(np.max(pred) - np.min(pred)))
    if sign < 0:
        hi = float(np.min(y) - np.max(pred)) - 1e-9 * span
    else:
        hi = float(np.max(y) - np.min(pred)) + 1e-9 * span

    def feasible(t):
        return _exact_violations(pred + t, y, w, direction).max() <= 0.0

    if feasible(theta):
        return theta
    while not feasible(hi):
        hi += sign * span
    lo = theta
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
        if abs(hi - lo) < 1e-12 * max(1.0, abs(hi)):
            break
    return hi


def _optimal_theta(pred: np.ndarray, y: np.ndarray, w: np.ndarray,
                   theta_feasible: float, direction: str) -> float:
    """Best shift for fixed surrogate values: the unconstrained optimum if
    feasible, else the feasibility boundary found by bisection."""
    theta_ls = float(np.sum(w * (y - pred)))

    def feasible(t):
        return _exact_violations(pred + t, y, w, direction).max() <= 0.0

    if feasible(theta_ls):
        return theta_ls
    lo, hi = theta_feasible, theta_ls     # feasible end, infeasible end
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
        if abs(hi - lo) < 1e-14 * max(1.0, abs(hi)):
            break
    return lo


def _pattern_polish(family: Family, X: np.ndarray, y: np.ndarray, w: np.ndarray,
                    eta: np.ndarray, theta: float, direction: str,
                    rounds: int = 80) -> Tuple[np.ndarray, float, float]:
    """Coordinate pattern search on the exact constrained objective.

    Moves one parameter at a time, rejects infeasible trials outright, and
    re-solves the shift exactly after each sweep; steps halve when a sweep
    makes no progress.  Cheap because each trial is one prediction pass plus
    one dominance check.
    """

    def solved(e, theta_hint):
        # profile the shift out: evaluate e at its own optimal feasible theta
        pred, _ = family.value_and_grad(e, X)
        if _exact_violations(pred + theta_hint, y, w, direction).max() > 0.0:
            theta_hint = _repair_theta(pred, y, w, theta_hint, direction)
        t = _optimal_theta(pred, y, w, theta_hint, direction)
        r = y - pred - t
        return float(np.sum(w * r * r)), t

    best, theta = solved(eta, theta)
    steps = 0.1 * np.maximum(np.abs(eta), 1.0)
    for _ in range(rounds):
        improved = False
        for j in range(eta.size):
            for s in (steps[j], -steps[j]):
                trial = eta.copy()
                trial[j] += s
                val, t = solved(trial, theta)
                if val < best:
                    eta, best, theta = trial, val, t
                    improved = True
                    break
        if not improved:
            steps *= 0.5
            if steps.max() < 1e-10:
                break
    return eta, theta, best


def fsd_fit(family: Family, X, y, weights=None,
            direction: str = CONSERVATIVE_LOW,
            relaxation: Optional[RelaxationConfig] = None,
            rng: Optional[RandomStream] = None) -> FSDFitResult:
    """Weighted least squares under stochastic dominance constraints.

    Minimizes ``sum_i w_i (y_i - g_eta(x_i) - theta)^2`` subject to the
    shifted surrogate values dominating (or being dominated by) the data in
    the first-order sense at every anchor.  The hard indicator in the
    empirical CDFs is relaxed to a logistic ramp of width tau; tau follows
    the continuation schedule while the penalty weight doubles whenever the
    exact constraints are still violated.  Feasibility of the returned
    solution is verified with exact indicators and, if needed, restored by
    an extra shift on theta alone.

    Parameters
    ----------
    family : PolynomialFamily or FeedforwardFamily
    X, y : array_like
        Training data.
    weights : array_like, optional
        Nonnegative, normalized to sum to 1; uniform by default.
    direction : str
        "conservative-low" (surrogate stochastically below the data) or
        "conservative-high".
    relaxation : RelaxationConfig, optional
    rng : RandomStream, optional

    Returns
    -------
    FSDFitResult
        ``converged`` is False when the continuation schedule ran out while
        the relaxed optimizer still sat on a violated point; the result is
        then feasible only through the repair shift.
    """
    if direction not in (CONSERVATIVE_LOW, CONSERVATIVE_HIGH):
        raise ValueError(f"unknown direction {direction!r}")
    cfg = relaxation or RelaxationConfig()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    w = np.full(y.size, 1.0 / y.size) if weights is None \
        else np.asarray(weights, dtype=float).ravel()
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    s = w.sum()
    if s <= 0:
        raise ValueError("weights must not all vanish")
    w = w / s
    gen = (rng or RandomStream(0, 0)).generator()

    start = fit(family, X, y, rng=rng) if isinstance(family, PolynomialFamily) \
        else fit(family, X, y, rng=rng, epochs=cfg.epochs, lr=cfg.lr)
    sign = 1.0 if direction == CONSERVATIVE_LOW else -1.0
    trace: List[Tuple[float, float, float, float]] = []
    m = y.size

    def relaxed_loss_grad(pv, tau, penalty):
        eta, theta = pv[:-1], pv[-1]
        pred, J = family.value_and_grad(eta, X)
        shifted = pred + theta
        r = y - shifted
        loss = float(np.sum(w * r * r))
        g_eta = -2.0 * (w * r) @ J
        g_theta = -2.0 * float(np.sum(w * r))
        # anchors: the surrogate's own (unshifted) values, which move with
        # eta and keep the theta gradient alive, plus the fixed data values
        anchors = np.concatenate([pred, y])
        JA = np.vstack([J, np.zeros((m, J.shape[1]))])
        # both empirical CDFs are smoothed with the same logistic kernel,
        # sigma((t - v)/tau); the smoothing bias then cancels between them
        # and an exact fit carries no penalty
        def smooth_cdf(values):
            D = (anchors[:, None] - values[None, :]) / tau
            S = 1.0 / (1.0 + np.exp(np.clip(-D, -500.0, 500.0)))
            return S @ w, S * (1.0 - S) * (w[None, :] / tau)
        Fs, Sw_s = smooth_cdf(shifted)
        Fy, Sw_y = smooth_cdf(y)
        gap = sign * (Fy - Fs)
        act = gap > 0.0
        if act.any():
            loss += penalty * float(np.sum(gap[act] ** 2))
            c = 2.0 * penalty * sign * np.where(act, gap, 0.0)
            rows_s = Sw_s.sum(axis=1)
            rows_y = Sw_y.sum(axis=1)
            g_theta += float(c @ rows_s)
            g_eta += c @ (Sw_s @ J) + (c * (rows_y - rows_s)) @ JA
        return loss, np.concatenate([g_eta, [g_theta]])

    def one_start(params0):
        params = params0
        penalty = cfg.penalty
        for tau in cfg.taus:
            for _ in range(cfg.max_penalty_rounds):
                params, loss = _adam(lambda pv: relaxed_loss_grad(pv, tau, penalty),
                                     params, lr=cfg.lr, epochs=cfg.epochs)
                eta, theta = params[:-1], params[-1]
                pred, _ = family.value_and_grad(eta, X)
                viol = _exact_violations(pred + theta, y, w, direction)
                trace.append((tau, penalty, loss, float(viol.max())))
                if viol.max() <= cfg.violation_tol:
                    break
                penalty *= cfg.penalty_growth
        eta, theta = params[:-1], float(params[-1])
        pred, _ = family.value_and_grad(eta, X)
        viol = _exact_violations(pred + theta, y, w, direction)
        converged = bool(viol.max() <= cfg.violation_tol)
        if viol.max() > 0.0:
            theta = _repair_theta(pred, y, w, theta, direction)
            converged = False
        theta = _optimal_theta(pred, y, w, theta, direction)
        eta, theta, obj = _pattern_polish(family, X, y, w, eta, theta, direction)
        return obj, eta, theta, converged

    scale = float(np.std(start.eta)) or 1.0
    starts = [np.concatenate([start.eta, [0.0]])]
    for _ in range(cfg.restarts):
        jit = gen.normal(0.0, cfg.jitter * scale, start.eta.size)
        starts.append(np.concatenate([start.eta + jit, [0.0]]))
    best = None
    for s0 in starts:
        cand = one_start(s0)
        if best is None or cand[0] < best[0]:
            best = cand
    _, eta, theta, converged = best
    pred, _ = family.value_and_grad(eta, X)
    viol = _exact_violations(pred + theta, y, w, direction)
    surrogate = RegressionSurrogate(family=family, eta=eta)
    return FSDFitResult(surrogate=surrogate, eta_star=eta, theta_star=float(theta),
                        violations=viol, relaxation_trace=trace,
                        converged=converged, direction=direction)


# ---------------------------------------------------------------------------
# plain-text persistence

def save_model(path, model) -> None:
    """Write a surrogate (plain or shifted) to a line-oriented text file."""
    if isinstance(model, ShiftedSurrogate):
        base, theta, cert = model.base, model.theta, model.certificate
    else:
        base, theta, cert = model, None, None
    fam = base.family
    with open(path, "w", encoding="utf-8") as fh:
        if isinstance(fam, PolynomialFamily):
            fh.write(f"family polynomial {fam.dimension} {fam.degree}\n")
        else:
            widths = " ".join(str(h) for h in fam.hidden)
            fh.write(f"family feedforward {fam.dimension} {widths}\n")
        fh.write("eta " + " ".join(repr(float(v)) for v in base.eta) + "\n")
        if theta is not None:
            fh.write(f"theta {theta!r}\n")
            fh.write(f"certificate {cert.n_test} {cert.alpha!r} "
                     f"{cert.bernstein_bound!r} {cert.c_constant!r}\n")


def load_model(path):
    """Read a surrogate written by :func:`save_model`."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    head = lines[0].split()
    if head[0] != "family":
        raise ValueError(f"not a surrogate file: first line {lines[0]!r}")
    if head[1] == "polynomial":
        family: Family = PolynomialFamily(int(head[2]), int(head[3]))
    elif head[1] == "feedforward":
        family = FeedforwardFamily(int(head[2]), tuple(int(h) for h in head[3:]))
    else:
        raise ValueError(f"unknown family {head[1]!r}")
    eta = None
    theta = None
    cert = None
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "eta":
            eta = np.array([float(v) for v in parts[1:]])
        elif parts[0] == "theta":
            theta = float(parts[1])
        elif parts[0] == "certificate":
            cert = ShiftCertificate(n_test=int(parts[1]), alpha=float(parts[2]),
                                    bernstein_bound=float(parts[3]),
                                    c_constant=float(parts[4]))
    if eta is None:
        raise ValueError("surrogate file has no parameter line")
    base = RegressionSurrogate(family=family, eta=eta)
    if theta is None:
        return base
    return ShiftedSurrogate(base=base, theta=theta, certificate=cert)
