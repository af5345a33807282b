"""Monte Carlo tail estimation and bound-vs-empirical comparison.

Replicates are simulated in fixed-size chunks whose contents depend only on
(spec, seed, replicate index), and chunk results are reduced in chunk order.
Worker threads only change which chunk is computed when, never what it
contains, so every estimate is bit-identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bounds
from .processes import (
    AR1Spec,
    IDLASpec,
    LearnSpec,
    ProcessSpec,
    finals_kernel,
)

__all__ = [
    "CHUNK",
    "MCEstimate",
    "ExpectationEstimate",
    "TailEvent",
    "Functional",
    "BoundRow",
    "CompareConfig",
    "hoeffding_epsilon",
    "summarize_indicators",
    "simulate_finals",
    "estimate_event",
    "estimate_expectation",
    "compare_bounds",
]

# Replicates per simulation chunk; fixed so results never depend on workers.
CHUNK = 4096

# p-grid over which infimum-style bounds are minimized.
P_GRID = (1.5, 2.0, 3.0, 4.0, 8.0)


@dataclass(frozen=True)
class MCEstimate:
    """Empirical event probability with a two-sided Hoeffding interval."""

    p_hat: float
    n_samples: int
    ci_lo: float
    ci_hi: float
    alpha: float
    seed: int


@dataclass(frozen=True)
class ExpectationEstimate:
    """Monte Carlo mean of a per-path functional with its standard error."""

    mean: float
    se: float
    n_samples: int
    seed: int


def hoeffding_epsilon(n_samples: int, alpha: float) -> float:
    """Half-width sqrt(log(2/alpha) / (2 n)) of the two-sided interval."""
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n_samples))


def summarize_indicators(indicators: np.ndarray, alpha: float, seed: int) -> MCEstimate:
    """Turn per-replicate event indicators into an estimate with CI."""
    n = len(indicators)
    p_hat = float(np.count_nonzero(indicators)) / n
    eps = hoeffding_epsilon(n, alpha)
    return MCEstimate(
        p_hat=p_hat,
        n_samples=n,
        ci_lo=max(0.0, p_hat - eps),
        ci_hi=min(1.0, p_hat + eps),
        alpha=alpha,
        seed=seed,
    )


def simulate_finals(
    spec: ProcessSpec, seed: int, n_samples: int, workers: int | None = None
) -> dict[str, np.ndarray]:
    """End-of-horizon summaries for n_samples replicates, chunked and reduced
    in fixed order."""
    kernel = finals_kernel(spec)
    ranges = [(lo, min(lo + CHUNK, n_samples)) for lo in range(0, n_samples, CHUNK)]
    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda r: kernel(spec, seed, r[0], r[1]), ranges))
    else:
        parts = [kernel(spec, seed, lo, hi) for lo, hi in ranges]
    return {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}


@dataclass(frozen=True)
class TailEvent:
    """One tail event to estimate.

    Kinds and their parameters:
      mart-abs        |M_n| >= x and S_n(a) <= y           (x, y, a)
      mart-ratio      |M_n|/S_n(a) >= x and S_n(a) >= y    (x, y, a)
      mart-pqv-ratio  |M_n|/<M>_n >= x and c(a)<M>_n >= [M]_n + y  (x, y, a)
      mart-missing    |M_n|/sqrt(a S_n(a) + moment) >= x/sqrt(B_q) (x, a, p, moment)
      ar-estimator    |theta_hat - theta| >= x             (x; AR1 only)
      idla-scaled     |X_n|/n >= x                          (x; IDLA only)
      idla-sqrt       |X_n|/sqrt(n) >= x                    (x; IDLA only)
      learn-excess    avg risk - empirical risk >= x        (x; LEARN only)
      learn-cover     avg risk >= empirical + width(delta)  (a, delta; LEARN only)
      learn-phi       avg risk >= inverted threshold        (a, delta; LEARN only)

    moment is (E[|M_n|^p])^(2/p) for the missing-factor event.
    """

    kind: str
    x: float = math.nan
    y: float = math.nan
    a: float = math.nan
    delta: float = math.nan
    p: float = 2.0
    moment: float = math.nan


_EVENT_PROCESS = {
    "ar-estimator": AR1Spec,
    "idla-scaled": IDLASpec,
    "idla-sqrt": IDLASpec,
    "learn-excess": LearnSpec,
    "learn-cover": LearnSpec,
    "learn-phi": LearnSpec,
}


def event_indicator(spec: ProcessSpec, event: TailEvent, finals: dict[str, np.ndarray]) -> np.ndarray:
    """Per-replicate indicator of the event, from end-of-horizon summaries."""
    required = _EVENT_PROCESS.get(event.kind)
    if required is not None and not isinstance(spec, required):
        raise ValueError(f"event {event.kind!r} does not apply to {type(spec).__name__}")
    if event.kind == "mart-abs":
        s = finals["qv"] + bounds.weight_c(event.a) * finals["pqv"]
        return (np.abs(finals["m"]) >= event.x) & (s <= event.y)
    if event.kind == "mart-ratio":
        s = finals["qv"] + bounds.weight_c(event.a) * finals["pqv"]
        return (np.abs(finals["m"]) >= event.x * s) & (s >= event.y)
    if event.kind == "mart-pqv-ratio":
        c = bounds.weight_c(event.a)
        return (np.abs(finals["m"]) >= event.x * finals["pqv"]) & (
            c * finals["pqv"] >= finals["qv"] + event.y
        )
    if event.kind == "mart-missing":
        if not event.moment > 0.0:
            raise ValueError("mart-missing requires the moment term (E[|M|^p])^(2/p)")
        hp = bounds.HolderPair.make(event.p)
        s = finals["qv"] + bounds.weight_c(event.a) * finals["pqv"]
        denom = np.sqrt(event.a * s + event.moment)
        return np.abs(finals["m"]) >= event.x / math.sqrt(hp.B) * denom
    if event.kind == "ar-estimator":
        return np.abs(finals["theta_hat"] - spec.theta) >= event.x
    if event.kind == "idla-scaled":
        return np.abs(finals["x"]) / spec.n >= event.x
    if event.kind == "idla-sqrt":
        return np.abs(finals["x"]) / math.sqrt(spec.n) >= event.x
    if event.kind == "learn-excess":
        return finals["r_bar"] - finals["r_hat"] >= event.x
    if event.kind == "learn-cover":
        width = bounds.learning_threshold(spec.n, event.a, event.delta, 1.0)
        return finals["r_bar"] >= finals["r_hat"] + width
    if event.kind == "learn-phi":
        thresholds = np.array(
            [
                bounds.learning_phi_inverse(min(1.0, r), spec.n, event.a, event.delta)
                for r in finals["r_hat"]
            ]
        )
        return finals["r_bar"] >= thresholds
    raise ValueError(f"unknown event kind {event.kind!r}")


def estimate_event(
    spec: ProcessSpec,
    event: TailEvent,
    n_samples: int,
    seed: int,
    alpha: float = 0.05,
    workers: int | None = None,
) -> MCEstimate:
    """Estimate the probability of a tail event over independent replicates."""
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    finals = simulate_finals(spec, seed, n_samples, workers)
    return summarize_indicators(event_indicator(spec, event, finals), alpha, seed)


@dataclass(frozen=True)
class Functional:
    """Per-path functional to average.

    Kinds: supermg-weight (t, a), laplace-s (x, a), laplace-pqv (t),
    second-moment, pth-moment (p).  k, when given, truncates the horizon.
    """

    kind: str
    t: float = math.nan
    a: float = math.nan
    x: float = math.nan
    p: float = 2.0
    k: int | None = None


def _mean_se(values: np.ndarray, seed: int) -> ExpectationEstimate:
    n = len(values)
    # chunk-ordered compensated reduction keeps the result worker-independent
    mean = float(np.mean(values))
    var = float(np.mean((values - mean) ** 2))
    return ExpectationEstimate(mean=mean, se=math.sqrt(var / n), n_samples=n, seed=seed)


def estimate_expectation(
    spec: ProcessSpec,
    functional: Functional,
    n_samples: int,
    seed: int,
    workers: int | None = None,
) -> ExpectationEstimate:
    """Monte Carlo mean and standard error of a per-path functional."""
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    if functional.k is not None:
        if not 1 <= functional.k <= spec.n:
            raise ValueError(f"k must lie in [1, {spec.n}]")
        spec = type(spec)(**{**spec.__dict__, "n": functional.k})
    finals = simulate_finals(spec, seed, n_samples, workers)
    m, qv, pqv = finals["m"], finals["qv"], finals["pqv"]
    kind = functional.kind
    if kind == "supermg-weight":
        t, a = functional.t, functional.a
        b = bounds.weight_b(a)
        values = np.exp(t * m - 0.5 * a * t * t * qv - 0.5 * b * t * t * pqv)
        return _mean_se(values, seed)
    if kind == "laplace-s":
        # right-hand side of the infimum bound, minimized over the fixed p-grid
        x, a = functional.x, functional.a
        if not x > 0.0:
            raise ValueError("laplace-s requires positive x")
        s = qv + bounds.weight_c(a) * pqv
        best: ExpectationEstimate | None = None
        for p in P_GRID:
            vals = np.exp(-(p - 1.0) * x * x * s / (2.0 * a))
            est = _mean_se(vals, seed)
            rhs = 2.0 * est.mean ** (1.0 / p)
            rhs_se = (2.0 / p) * est.mean ** (1.0 / p - 1.0) * est.se if est.mean > 0 else 0.0
            cand = ExpectationEstimate(mean=rhs, se=rhs_se, n_samples=n_samples, seed=seed)
            if best is None or cand.mean < best.mean:
                best = cand
        return best
    if kind == "laplace-pqv":
        return _mean_se(np.exp(functional.t * pqv), seed)
    if kind == "second-moment":
        return _mean_se(m * m, seed)
    if kind == "pth-moment":
        return _mean_se(np.abs(m) ** functional.p, seed)
    raise ValueError(f"unknown functional kind {kind!r}")


@dataclass(frozen=True)
class CompareConfig:
    a: float
    n_samples: int
    seed: int
    alpha: float = 0.05
    workers: int | None = None


@dataclass(frozen=True)
class BoundRow:
    """One threshold with every applicable bound and the empirical estimate.

    satisfied is True iff ci_lo does not exceed any bound listed in
    dominating (the bounds theory guarantees)."""

    x: float
    bounds: dict[str, float] = field(default_factory=dict)
    dominating: tuple[str, ...] = ()
    empirical: MCEstimate | None = None
    satisfied: bool = True


def _bound_columns(spec: ProcessSpec, x: float, cfg: CompareConfig):
    a = cfg.a
    if isinstance(spec, AR1Spec):
        cols, dom = {}, []
        limit = math.sqrt(a * bounds.ar_rate(a, spec.p))
        if x <= limit:
            cols["weighted"] = bounds.ar_bound(x, spec.n, spec.p, a)
            dom.append("weighted")
        cols["gauss-ar"] = bounds.baseline_bound("GAUSS_AR", x, spec.n)
        return cols, tuple(dom), TailEvent("ar-estimator", x=x)
    if isinstance(spec, IDLASpec):
        scaled, _ = bounds.idla_bounds(x, spec.n, a)
        cols = {
            "weighted": scaled,
            "azuma": bounds.baseline_bound("AZUMA_IDLA", x, spec.n),
        }
        return cols, ("weighted", "azuma"), TailEvent("idla-scaled", x=x)
    if isinstance(spec, LearnSpec):
        c = bounds.weight_c(a)
        cols = {
            "weighted": min(1.0, math.exp(-spec.n * x * x / (2.0 * a * (1.0 + c)))),
            "cbc": min(1.0, math.exp(-spec.n * x * x / 2.0)),
        }
        return cols, ("weighted", "cbc"), TailEvent("learn-excess", x=x)
    raise TypeError(f"unknown process spec {type(spec).__name__}")


def compare_bounds(spec: ProcessSpec, x_grid, config: CompareConfig) -> list[BoundRow]:
    """One BoundRow per threshold, sharing a single simulation run."""
    xs = list(x_grid)
    if not xs:
        raise ValueError("x_grid must be nonempty")
    finals = simulate_finals(spec, config.seed, config.n_samples, config.workers)
    rows = []
    for x in xs:
        cols, dom, event = _bound_columns(spec, x, config)
        est = summarize_indicators(
            event_indicator(spec, event, finals), config.alpha, config.seed
        )
        ok = all(est.ci_lo <= cols[name] for name in dom)
        rows.append(
            BoundRow(x=x, bounds=cols, dominating=dom, empirical=est, satisfied=ok)
        )
    return rows
