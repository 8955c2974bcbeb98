"""Experiment runner: config files in, CSV reports (and optional SVG) out.

Subcommands
-----------
run             execute a replicated experiment described by a config file
lambda-table    tabulate the certificate risk curve lambda(n, p) and its
                crossings lambda(n, p) = p
timing          paired wall-clock comparison of the sequential bounder with
                rejection versus walk-based sampling, per dimension
list-benchmarks print the benchmark registry

Config files are flat ``key = value`` text with ``[section]`` headers;
see :data:`_SCHEMA` for every key and its default.  Unknown sections or
keys are rejected with a line diagnostic.  Exit codes: 0 success, 2
configuration error, 3 method error.

The output directory is taken from, in decreasing precedence, the
``--output-dir`` flag, the ``RAREBOUND_OUTPUT_DIR`` environment variable,
the config file, and the default ``results``.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import os
import sys
import time
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .bench import benchmark_descriptions, get_benchmark, list_benchmark_names
from .core import RandomStream, surrogate_mc_estimate
from .dyadic import refine
from .mcmc import WalkConfig
from .monotone import SelectionConfig, sequential_bounder
from .surrogate import (
    CONSERVATIVE_HIGH,
    CONSERVATIVE_LOW,
    DEFAULT_BERNSTEIN_C,
    FeedforwardFamily,
    PolynomialFamily,
    RelaxationConfig,
    conservative_shift,
    fit,
    fsd_fit,
    lambda_crossing,
    lambda_risk,
    q2,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "parse_config_text",
    "run_experiment",
    "run_lambda_table",
    "run_timing",
    "main",
]

OUTPUT_DIR_ENV = "RAREBOUND_OUTPUT_DIR"

METHODS = ("dyadic", "monotone-exact", "monotone-mcmc", "shift", "fsd")

ROW_FIELDS = ("method", "benchmark", "d", "p_exact", "replication", "queries",
              "p_lower", "p_upper", "p_hat", "rel_precision", "miss_flag",
              "wall_time_s")

SUMMARY_FIELDS = ("method", "benchmark", "d", "p_exact", "rows",
                  "mean_queries", "mean_p_lower", "mean_p_upper",
                  "mean_p_hat", "mean_rel_precision", "q10_rel_precision",
                  "median_rel_precision", "q90_rel_precision", "miss_rate",
                  "mean_wall_time_s")


class ConfigError(ValueError):
    """Raised for unparsable config text, unknown keys, or bad values."""


# ---------------------------------------------------------------------------
# configuration

@dataclass
class MonotoneOptions:
    """Knobs for the sequential staircase bounder."""

    pool_size: int = 192
    score_subsample: int = 48
    rule: str = "auto"              # balance | coverage | uniform | auto
    exact_scores: str = "auto"      # true | false | auto
    switch_acceptance: float = 5e-3


@dataclass
class McmcOptions:
    """Knobs for the transformed-walk sampler used by monotone-mcmc."""

    chains: int = 32
    window: int = 200
    scale: float = 0.0              # 0 keeps the sampler default 2.38^2
    burn_in: float = 0.2
    thin: int = 0                   # 0 measures the gap from autocorrelation


@dataclass
class DyadicOptions:
    """Knobs for the Lipschitz cube refinement."""

    lipschitz: float = 0.0          # 0 uses the benchmark's known constant
    max_depth: int = 0              # 0 derives the depth from eps_target
    eps_target: float = 1e-5


@dataclass
class ShiftOptions:
    """Knobs for the shifted-surrogate conservative estimate.

    ``theta_source`` selects where the shift is computed: "train" learns
    the bias alongside the surrogate and carries no fresh-data
    certificate, while "test" takes the certified worst held-out
    overprediction (strictly conservative, markedly larger estimates).
    """

    train_size: int = 0             # 0 means 50 * d
    test_size: int = 0              # 0 means 50 * d
    alpha: float = 0.1
    c_constant: float = DEFAULT_BERNSTEIN_C
    hidden: Tuple[int, ...] = (8, 8)
    epochs: int = 16000
    lr: float = 0.02
    overpredict_weight: float = 3.0
    theta_source: str = "train"     # train | test
    mc_samples: int = 20000
    q2_gate: float = 0.9            # 0 disables the predictivity gate
    max_refits: int = 3


@dataclass
class FsdOptions:
    """Knobs for the dominance-constrained conservative estimate."""

    train_size: int = 0             # 0 means 50 * d
    family: str = "polynomial"      # polynomial | network
    degree: int = 2
    hidden: Tuple[int, ...] = (4, 4)
    direction: str = CONSERVATIVE_LOW
    taus: Tuple[float, ...] = (0.1, 0.03, 0.01)
    penalty: float = 10.0
    restarts: int = 2
    epochs: int = 600
    lr: float = 0.02
    mc_samples: int = 20000


@dataclass
class ExperimentConfig:
    """A fully resolved experiment description.

    Every field can be set from the config file; replication r always runs
    on random stream ``(seed, stream_id=r)`` so reruns and worker pools
    agree bit for bit on the statistical columns.
    """

    method: str = ""
    benchmark: str = ""
    budget: int = 200
    replications: int = 20
    seed: int = 20260823
    workers: int = 0                # 0 means one per available core
    output_dir: str = "results"
    monotone: MonotoneOptions = field(default_factory=MonotoneOptions)
    mcmc: McmcOptions = field(default_factory=McmcOptions)
    dyadic: DyadicOptions = field(default_factory=DyadicOptions)
    shift: ShiftOptions = field(default_factory=ShiftOptions)
    fsd: FsdOptions = field(default_factory=FsdOptions)


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_int_tuple(text: str) -> Tuple[int, ...]:
    return tuple(int(tok) for tok in text.replace(",", " ").split())


def _parse_float_tuple(text: str) -> Tuple[float, ...]:
    return tuple(float(tok) for tok in text.replace(",", " ").split())


def _choice(*allowed: str):
    def parse(text: str) -> str:
        if text not in allowed:
            raise ValueError(f"expected one of {allowed}, got {text!r}")
        return text
    return parse


# section -> key -> converter.  The attribute path mirrors the dataclasses:
# [experiment] keys live on ExperimentConfig itself, other sections on the
# same-named sub-config.
_SCHEMA: Dict[str, Dict[str, object]] = {
    "experiment": {
        "method": _choice(*METHODS),
        "benchmark": str.strip,
        "budget": int,
        "replications": int,
        "seed": int,
        "workers": int,
        "output_dir": str.strip,
    },
    "monotone": {
        "pool_size": int,
        "score_subsample": int,
        "rule": _choice("auto", "balance", "coverage", "maximin", "uniform"),
        "exact_scores": _choice("auto", "true", "false"),
        "switch_acceptance": float,
    },
    "mcmc": {
        "chains": int,
        "window": int,
        "scale": float,
        "burn_in": float,
        "thin": int,
    },
    "dyadic": {
        "lipschitz": float,
        "max_depth": int,
        "eps_target": float,
    },
    "shift": {
        "train_size": int,
        "test_size": int,
        "alpha": float,
        "c_constant": float,
        "hidden": _parse_int_tuple,
        "epochs": int,
        "lr": float,
        "overpredict_weight": float,
        "theta_source": _choice("train", "test"),
        "mc_samples": int,
        "q2_gate": float,
        "max_refits": int,
    },
    "fsd": {
        "train_size": int,
        "family": _choice("polynomial", "network"),
        "degree": int,
        "hidden": _parse_int_tuple,
        "direction": _choice(CONSERVATIVE_LOW, CONSERVATIVE_HIGH),
        "taus": _parse_float_tuple,
        "penalty": float,
        "restarts": int,
        "epochs": int,
        "lr": float,
        "mc_samples": int,
    },
}


def parse_config_text(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse flat ``key = value`` config text with ``[section]`` headers.

    Blank lines and ``#`` comments (full-line or trailing) are ignored.
    Raises :class:`ConfigError` naming the offending line for unknown
    sections, unknown keys, malformed lines, and unconvertible values.
    """
    cfg = ExperimentConfig()
    section = "experiment"
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in _SCHEMA:
                raise ConfigError(
                    f"{source}:{lineno}: unknown section [{section}]; "
                    f"known sections: {sorted(_SCHEMA)}")
            continue
        if "=" not in line:
            raise ConfigError(
                f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        keys = _SCHEMA[section]
        if key not in keys:
            raise ConfigError(
                f"{source}:{lineno}: unknown key {key!r} in section "
                f"[{section}]; known keys: {sorted(keys)}")
        try:
            parsed = keys[key](value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}")
        target = cfg if section == "experiment" else getattr(cfg, section)
        setattr(target, key, parsed)
    _validate(cfg, source)
    return cfg


def load_config(path: str) -> ExperimentConfig:
    """Read and validate a config file; see :func:`parse_config_text`."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}")
    return parse_config_text(text, source=os.path.basename(path))


def _validate(cfg: ExperimentConfig, source: str) -> None:
    if not cfg.method:
        raise ConfigError(f"{source}: missing required key 'method'")
    if not cfg.benchmark:
        raise ConfigError(f"{source}: missing required key 'benchmark'")
    try:
        problem = get_benchmark(cfg.benchmark)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}")
    if cfg.budget < 1:
        raise ConfigError(f"{source}: budget must be >= 1, got {cfg.budget}")
    if cfg.replications < 0:
        raise ConfigError(
            f"{source}: replications must be >= 0, got {cfg.replications}")
    if cfg.method == "dyadic" and cfg.dyadic.lipschitz <= 0.0 \
            and problem.lipschitz is None:
        raise ConfigError(
            f"{source}: benchmark {cfg.benchmark!r} has no known Lipschitz "
            "constant; set [dyadic] lipschitz explicitly")


# ---------------------------------------------------------------------------
# method runners

def _walk_config(opts: McmcOptions) -> WalkConfig:
    wc = WalkConfig(n_chains=opts.chains, window=opts.window,
                    burn_in_fraction=opts.burn_in,
                    thin=opts.thin if opts.thin > 0 else None)
    if opts.scale > 0.0:
        wc = replace(wc, scale=opts.scale)
    return wc


def _selection_config(opts: MonotoneOptions) -> SelectionConfig:
    exact = opts.exact_scores if opts.exact_scores == "auto" \
        else opts.exact_scores == "true"
    return SelectionConfig(pool_size=opts.pool_size,
                           score_subsample=opts.score_subsample,
                           rule=opts.rule, exact_scores=exact)


def _run_dyadic(cfg: ExperimentConfig, problem, rng: RandomStream) -> dict:
    opts = cfg.dyadic
    lipschitz = opts.lipschitz if opts.lipschitz > 0.0 else problem.lipschitz
    run = refine(problem.function, lipschitz, cfg.budget,
                 max_depth=opts.max_depth if opts.max_depth > 0 else None,
                 eps_target=opts.eps_target)
    return {"queries": run.queries_used,
            "p_lower": run.bounds.lower, "p_upper": run.bounds.upper}


def _run_monotone(cfg: ExperimentConfig, problem, rng: RandomStream) -> dict:
    sampler = "rejection" if cfg.method == "monotone-exact" else "mcmc"
    run = sequential_bounder(problem.function, cfg.budget, rng,
                             sampler=sampler,
                             selection=_selection_config(cfg.monotone),
                             walk_config=_walk_config(cfg.mcmc),
                             switch_acceptance=cfg.monotone.switch_acceptance)
    return {"queries": run.queries_used,
            "p_lower": run.bounds.lower, "p_upper": run.bounds.upper}


def _run_shift(cfg: ExperimentConfig, problem, rng: RandomStream) -> dict:
    opts = cfg.shift
    d = problem.dimension
    f = problem.function
    n_train = opts.train_size if opts.train_size > 0 else 50 * d
    n_test = opts.test_size if opts.test_size > 0 else 50 * d
    X_train = rng.derive(0).generator().random((n_train, d))
    y_train = f.evaluate_batch(X_train)
    X_test = rng.derive(1).generator().random((n_test, d))
    y_test = f.evaluate_batch(X_test)
    family = FeedforwardFamily(dimension=d, hidden=opts.hidden)
    best_score, best_model = -np.inf, None
    # surrogates are retained only above a predictivity floor, so a failed
    # fit is retried from a fresh deterministic initialization
    for attempt in range(max(1, opts.max_refits + 1)):
        model = fit(family, X_train, y_train, rng=rng.derive(10 + attempt),
                    epochs=opts.epochs, lr=opts.lr,
                    overpredict_weight=opts.overpredict_weight)
        score = q2(model, X_test, y_test)
        if score > best_score:
            best_score, best_model = score, model
        if opts.q2_gate <= 0.0 or score >= opts.q2_gate:
            break
    if opts.theta_source == "train":
        X_cert, y_cert = X_train, y_train
    else:
        X_cert, y_cert = X_test, y_test
    shifted = conservative_shift(best_model, X_cert, y_cert,
                                 alpha=opts.alpha, C=opts.c_constant)
    est = surrogate_mc_estimate(shifted.predict, d, f.threshold,
                                opts.mc_samples, rng.derive(2))
    return {"queries": n_train + n_test, "p_hat": est.p_hat}


def _run_fsd(cfg: ExperimentConfig, problem, rng: RandomStream) -> dict:
    opts = cfg.fsd
    d = problem.dimension
    f = problem.function
    m = opts.train_size if opts.train_size > 0 else 50 * d
    X = rng.derive(0).generator().random((m, d))
    y = f.evaluate_batch(X)
    if opts.family == "polynomial":
        family = PolynomialFamily(dimension=d, degree=opts.degree)
    else:
        family = FeedforwardFamily(dimension=d, hidden=opts.hidden)
    relaxation = RelaxationConfig(taus=opts.taus, penalty=opts.penalty,
                                  restarts=opts.restarts,
                                  epochs=opts.epochs, lr=opts.lr)
    result = fsd_fit(family, X, y, direction=opts.direction,
                     relaxation=relaxation, rng=rng.derive(1))
    est = surrogate_mc_estimate(result.predict, d, f.threshold,
                                opts.mc_samples, rng.derive(2))
    return {"queries": m, "p_hat": est.p_hat}


_RUNNERS = {
    "dyadic": _run_dyadic,
    "monotone-exact": _run_monotone,
    "monotone-mcmc": _run_monotone,
    "shift": _run_shift,
    "fsd": _run_fsd,
}


def _replication_row(cfg: ExperimentConfig, replication: int) -> dict:
    """Run one replication and assemble its report row.

    Top-level so worker pools can pickle it; the benchmark is rebuilt
    inside the worker because black-box closures do not cross processes.
    """
    problem = get_benchmark(cfg.benchmark)
    rng = RandomStream(cfg.seed, replication)
    start = time.perf_counter()
    out = _RUNNERS[cfg.method](cfg, problem, rng)
    wall = time.perf_counter() - start

    p_exact = problem.p_exact
    p_lower = out.get("p_lower")
    p_upper = out.get("p_upper")
    p_hat = out.get("p_hat")
    rel = None
    if p_lower is not None and p_upper is not None and p_exact > 0.0:
        rel = (p_upper - p_lower) / p_exact
    miss = 0
    if p_hat is not None and p_hat < p_exact:
        miss = 1
    if p_lower is not None and p_upper is not None \
            and not (p_lower <= p_exact <= p_upper):
        miss = 1
    return {"method": cfg.method, "benchmark": cfg.benchmark,
            "d": problem.dimension, "p_exact": p_exact,
            "replication": replication, "queries": out["queries"],
            "p_lower": p_lower, "p_upper": p_upper, "p_hat": p_hat,
            "rel_precision": rel, "miss_flag": miss, "wall_time_s": wall}


# ---------------------------------------------------------------------------
# report writing

def _cell(value, fmt: Optional[str] = None) -> str:
    if value is None:
        return ""
    if fmt is not None:
        return format(value, fmt)
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def _write_rows(path: str, rows: Sequence[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ROW_FIELDS)
        for row in rows:
            writer.writerow([
                row["method"], row["benchmark"], row["d"],
                _cell(row["p_exact"]), row["replication"], row["queries"],
                _cell(row["p_lower"]), _cell(row["p_upper"]),
                _cell(row["p_hat"]), _cell(row["rel_precision"]),
                row["miss_flag"], _cell(row["wall_time_s"], ".4f"),
            ])


def _mean(values: List[float]) -> Optional[float]:
    return float(np.mean(values)) if values else None


def _quantile(values: List[float], q: float) -> Optional[float]:
    return float(np.quantile(values, q)) if values else None


def _write_summary(path: str, rows: Sequence[dict]) -> None:
    groups: Dict[Tuple[str, str], List[dict]] = {}
    for row in rows:
        groups.setdefault((row["method"], row["benchmark"]), []).append(row)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_FIELDS)
        for (method, benchmark), members in sorted(groups.items()):
            def column(name: str) -> List[float]:
                return [r[name] for r in members if r[name] is not None]
            rel = column("rel_precision")
            writer.writerow([
                method, benchmark, members[0]["d"],
                _cell(members[0]["p_exact"]), len(members),
                _cell(_mean(column("queries"))),
                _cell(_mean(column("p_lower"))),
                _cell(_mean(column("p_upper"))),
                _cell(_mean(column("p_hat"))),
                _cell(_mean(rel)), _cell(_quantile(rel, 0.1)),
                _cell(_quantile(rel, 0.5)), _cell(_quantile(rel, 0.9)),
                _cell(_mean(column("miss_flag"))),
                _cell(_mean(column("wall_time_s")), ".4f"),
            ])


def _resolve_output_dir(flag: Optional[str], config_value: str = "results") -> str:
    return flag or os.environ.get(OUTPUT_DIR_ENV) or config_value


def _pyplot():
    """Import matplotlib lazily; plots are decorative and optional."""
    try:
        import matplotlib
        matplotlib.use("svg", force=True)
        import matplotlib.pyplot as plt
        return plt
    except ImportError:
        print("warning: matplotlib not installed, skipping SVG plots",
              file=sys.stderr)
        return None


def _plot_run(outdir: str, rows: Sequence[dict]) -> None:
    plt = _pyplot()
    if plt is None or not rows:
        return
    fig, ax = plt.subplots(figsize=(7, 4))
    p_exact = rows[0]["p_exact"]
    for name, marker in (("p_lower", "v"), ("p_upper", "^"), ("p_hat", "o")):
        ys = [(r["replication"], r[name]) for r in rows if r[name] is not None]
        if ys:
            ax.plot(*zip(*ys), marker, label=name, markersize=4)
    ax.axhline(p_exact, color="black", linewidth=0.8, label="p_exact")
    ax.set_xlabel("replication")
    ax.set_ylabel("probability")
    ax.set_yscale("log")
    ax.set_title(f"{rows[0]['method']} on {rows[0]['benchmark']}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(outdir, "bounds.svg"))
    plt.close(fig)


def _plot_lambda(outdir: str, curves: Dict[float, List[Tuple[int, float]]],
                 crossings: Dict[float, float]) -> None:
    plt = _pyplot()
    if plt is None:
        return
    fig, ax = plt.subplots(figsize=(7, 4))
    for p, pts in sorted(curves.items(), reverse=True):
        ns = [n for n, _ in pts]
        ax.plot(np.log(ns), [v for _, v in pts], label=f"p={p:g}")
        ax.axhline(p, linestyle=":", linewidth=0.6, color="gray")
        if p in crossings:
            ax.axvline(np.log(crossings[p]), linestyle="--", linewidth=0.6)
    ax.set_xlabel("log(n)")
    ax.set_ylabel("lambda(n, p)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(outdir, "lambda.svg"))
    plt.close(fig)


# ---------------------------------------------------------------------------
# subcommand drivers

def run_experiment(cfg: ExperimentConfig, output_dir: Optional[str] = None,
                   plots: bool = False) -> str:
    """Execute all replications and write rows.csv + summary.csv.

    Returns the output directory.  Replications are dispatched to a
    process pool when more than one worker is configured; rows are always
    written in replication order and each replication r uses random
    stream (seed, r), so the statistical columns do not depend on the
    pool size (wall times naturally vary run to run).
    """
    outdir = _resolve_output_dir(output_dir, cfg.output_dir)
    os.makedirs(outdir, exist_ok=True)
    n_workers = cfg.workers if cfg.workers > 0 else (os.cpu_count() or 1)
    n_workers = min(n_workers, max(1, cfg.replications))
    indices = range(cfg.replications)
    if n_workers <= 1:
        rows = [_replication_row(cfg, r) for r in indices]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=n_workers) as pool:
            rows = list(pool.map(_replication_row, [cfg] * cfg.replications,
                                 indices))
    rows.sort(key=lambda row: row["replication"])
    _write_rows(os.path.join(outdir, "rows.csv"), rows)
    _write_summary(os.path.join(outdir, "summary.csv"), rows)
    if plots:
        _plot_run(outdir, rows)
    return outdir


def run_lambda_table(p_values: Sequence[float], n_min: int = 1,
                     n_max: int = 1_000_000, points: int = 200,
                     C: float = DEFAULT_BERNSTEIN_C,
                     output_dir: Optional[str] = None,
                     plots: bool = False) -> str:
    """Tabulate lambda(n, p) on a log grid of n, plus crossings with p."""
    if not p_values:
        raise ConfigError("need at least one p value")
    if not (1 <= n_min < n_max):
        raise ConfigError(f"need 1 <= n_min < n_max, got {n_min}, {n_max}")
    for p in p_values:
        if not 0.0 < p < 1.0:
            raise ConfigError(f"p must be in (0, 1), got {p}")
    outdir = _resolve_output_dir(output_dir)
    os.makedirs(outdir, exist_ok=True)
    grid = np.unique(np.round(np.logspace(
        np.log10(n_min), np.log10(n_max), points)).astype(int))
    curves = {p: [(int(n), lambda_risk(int(n), p, C)) for n in grid]
              for p in p_values}
    crossings = {p: lambda_crossing(p, C) for p in p_values}
    with open(os.path.join(outdir, "lambda_table.csv"), "w",
              newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["p", "n", "lambda"])
        for p in p_values:
            for n, value in curves[p]:
                writer.writerow([repr(float(p)), n, repr(value)])
    with open(os.path.join(outdir, "lambda_crossings.csv"), "w",
              newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["p", "n_crossing"])
        for p in p_values:
            writer.writerow([repr(float(p)), repr(crossings[p])])
    if plots:
        _plot_lambda(outdir, curves, crossings)
    return outdir


def run_timing(dims: Sequence[int], budget: int = 200, p: float = 5e-4,
               seed: int = 20260823,
               methods: Sequence[str] = ("monotone-exact", "monotone-mcmc"),
               output_dir: Optional[str] = None) -> str:
    """Paired wall-clock comparison of the two monotone samplers.

    Writes timing.csv with one row per (method, dimension); both methods
    see the same benchmark, budget, and random stream within a dimension.
    """
    for method in methods:
        if method not in ("monotone-exact", "monotone-mcmc"):
            raise ConfigError(
                f"timing supports the monotone methods, got {method!r}")
    outdir = _resolve_output_dir(output_dir)
    os.makedirs(outdir, exist_ok=True)
    rows = []
    for d in dims:
        benchmark = f"example1:d={d}:p={p:g}"
        for method in methods:
            cfg = ExperimentConfig(method=method, benchmark=benchmark,
                                   budget=budget, seed=seed)
            row = _replication_row(cfg, 0)
            rows.append(row)
    with open(os.path.join(outdir, "timing.csv"), "w",
              newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "d", "benchmark", "budget", "queries",
                         "wall_time_s", "p_lower", "p_upper"])
        for row in rows:
            writer.writerow([row["method"], row["d"], row["benchmark"],
                             budget, row["queries"],
                             _cell(row["wall_time_s"], ".4f"),
                             _cell(row["p_lower"]), _cell(row["p_upper"])])
    return outdir


def _list_benchmarks() -> None:
    descriptions = benchmark_descriptions()
    width = max(len(name) for name in descriptions)
    for name in list_benchmark_names():
        print(f"{name:<{width}}  {descriptions[name]}")
    print()
    print("Concrete instances substitute values, e.g. example1:d=3:p=5e-3")


# ---------------------------------------------------------------------------
# argument parsing

def _float_list(text: str) -> List[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _int_list(text: str) -> List[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rarebound",
        description="Conservative rare-event probability bounding experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a replicated experiment from a config file")
    p_run.add_argument("config", help="path to a key=value config file")
    p_run.add_argument("--output-dir", default=None,
                       help=f"report directory (overrides ${OUTPUT_DIR_ENV} and config)")
    p_run.add_argument("--workers", type=int, default=None,
                       help="override the configured worker count")
    p_run.add_argument("--plots", action="store_true",
                       help="also write decorative SVG plots (needs matplotlib)")

    p_lam = sub.add_parser("lambda-table",
                           help="tabulate the certificate risk curve lambda(n, p)")
    p_lam.add_argument("--p", type=_float_list, default=[1e-1, 1e-2, 1e-3],
                       help="comma-separated probability levels")
    p_lam.add_argument("--n-min", type=int, default=1)
    p_lam.add_argument("--n-max", type=int, default=1_000_000)
    p_lam.add_argument("--points", type=int, default=200,
                       help="grid points on the log(n) axis")
    p_lam.add_argument("--c", type=float, default=DEFAULT_BERNSTEIN_C,
                       help="certificate constant C")
    p_lam.add_argument("--output-dir", default=None)
    p_lam.add_argument("--plots", action="store_true")

    p_tim = sub.add_parser("timing",
                           help="wall-clock comparison of the monotone samplers")
    p_tim.add_argument("--dims", type=_int_list, default=[2, 3, 4, 5],
                       help="comma-separated dimensions")
    p_tim.add_argument("--budget", type=int, default=200)
    p_tim.add_argument("--p", type=float, default=5e-4,
                       help="benchmark failure probability")
    p_tim.add_argument("--seed", type=int, default=20260823)
    p_tim.add_argument("--methods", default="monotone-exact,monotone-mcmc",
                       help="comma-separated monotone methods to time")
    p_tim.add_argument("--output-dir", default=None)

    sub.add_parser("list-benchmarks", help="print the benchmark registry")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            if args.workers is not None:
                cfg.workers = args.workers
            outdir = run_experiment(cfg, output_dir=args.output_dir,
                                    plots=args.plots)
            print(f"wrote {os.path.join(outdir, 'rows.csv')} and summary.csv")
        elif args.command == "lambda-table":
            outdir = run_lambda_table(args.p, n_min=args.n_min,
                                      n_max=args.n_max, points=args.points,
                                      C=args.c, output_dir=args.output_dir,
                                      plots=args.plots)
            print(f"wrote lambda_table.csv and lambda_crossings.csv in {outdir}")
        elif args.command == "timing":
            methods = [tok.strip() for tok in args.methods.split(",") if tok.strip()]
            outdir = run_timing(args.dims, budget=args.budget, p=args.p,
                                seed=args.seed, methods=methods,
                                output_dir=args.output_dir)
            print(f"wrote timing.csv in {outdir}")
        elif args.command == "list-benchmarks":
            _list_benchmarks()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - reported as a method failure
        print(f"method error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
