"""Payload-size sweeps, minimization and a curvature summary."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import NoStablePointError, TooFewPointsError, TruncationError, UnstableError
from .msgdist import MessageSizeDistribution
from .queueing import LinkParams, QueueingMetrics, Scenario, response_time
from .segmentation import DEFAULT_EPS_REL, DEFAULT_N_MAX, SegmentationStats, segmentation_stats

__all__ = [
    "OK",
    "UNSTABLE",
    "TRUNCATION_FAILED",
    "SweepSpec",
    "SweepRow",
    "log_grid",
    "default_grid",
    "sweep",
    "sweep_lambdas",
    "minimize_payload",
    "convexity_index",
]

OK = "ok"
UNSTABLE = "unstable"
TRUNCATION_FAILED = "truncation-failed"


@dataclass(frozen=True)
class SweepSpec:
    dist: MessageSizeDistribution
    link: LinkParams
    lam: float
    grid: tuple[float, ...]
    eps_rel: float = DEFAULT_EPS_REL
    n_max: int = DEFAULT_N_MAX

    def __post_init__(self):
        grid = tuple(float(g) for g in self.grid)
        if not grid:
            raise ValueError("payload grid is empty")
        if grid[0] <= 0 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("payload grid must be positive and strictly increasing")
        object.__setattr__(self, "grid", grid)


@dataclass(frozen=True)
class SweepRow:
    ell_d: float
    lam: float
    status: str
    metrics: QueueingMetrics | None = None
    stats: SegmentationStats | None = None

    @property
    def ok(self) -> bool:
        return self.status == OK


def log_grid(lo: float, hi: float, per_decade: int) -> tuple[float, ...]:
    """Log-spaced points from ``lo`` to ``hi`` inclusive."""
    if not 0 < lo < hi:
        raise ValueError("need 0 < lo < hi")
    n = max(int(math.ceil(per_decade * math.log10(hi / lo))), 1) + 1
    return tuple(np.geomspace(lo, hi, n).tolist())


def default_grid(dist: MessageSizeDistribution, per_decade: int = 40) -> tuple[float, ...]:
    """64 bytes up to twice the 99.99th percentile of the message size."""
    return log_grid(64.0, max(2.0 * dist.ppf(0.9999), 128.0), per_decade)


def _stats(spec, ell_d):
    try:
        return segmentation_stats(spec.dist, ell_d, spec.eps_rel, spec.n_max)
    except TruncationError:
        return None


def _row(spec, ell_d, lam, st):
    if st is None:
        return SweepRow(ell_d, lam, TRUNCATION_FAILED)
    try:
        m = response_time(Scenario(spec.dist, ell_d, spec.link, lam), stats=st)
    except UnstableError:
        return SweepRow(ell_d, lam, UNSTABLE, stats=st)
    return SweepRow(ell_d, lam, OK, metrics=m, stats=st)


def sweep(spec: SweepSpec) -> list[SweepRow]:
    """One row per grid point in grid order; failures become row statuses."""
    return [_row(spec, g, spec.lam, _stats(spec, g)) for g in spec.grid]


def sweep_lambdas(spec: SweepSpec, lams: Sequence[float]) -> list[SweepRow]:
    """Rows for every ``(lam, ell_d)`` pair, lam-major. Segmentation is shared."""
    cached = [_stats(spec, g) for g in spec.grid]
    return [_row(spec, g, lam, st) for lam in lams for g, st in zip(spec.grid, cached)]


def minimize_payload(spec: SweepSpec, refine_iters: int = 3):
    """Grid search for the payload size with the smallest mean response time.

    Scans ``spec.grid``, then ``refine_iters`` times replaces the bracket
    around the current best point (its two neighbours among evaluated
    points) with 10 log-spaced subintervals.

    Returns ``(ell_d_best, ER_best, trace)`` where ``trace`` lists
    ``(round, ell_d, ER)`` for the best point after each round.
    """
    if refine_iters < 0:
        raise ValueError("refine_iters must be >= 0")
    evaluated = {row.ell_d: row.metrics.ER for row in sweep(spec) if row.ok}
    if not evaluated:
        raise NoStablePointError("no stable payload size on the grid")

    def best():
        return min(evaluated.items(), key=lambda kv: (kv[1], kv[0]))

    trace = [(0, *best())]
    for rnd in range(1, refine_iters + 1):
        pts = sorted(evaluated)
        x_best = best()[0]
        i = pts.index(x_best)
        lo = pts[i - 1] if i > 0 else x_best
        hi = pts[i + 1] if i + 1 < len(pts) else x_best
        if lo == hi:
            break
        new = [g for g in np.geomspace(lo, hi, 11).tolist() if g not in evaluated]
        if new:
            for row in sweep(replace(spec, grid=tuple(new))):
                if row.ok:
                    evaluated[row.ell_d] = row.metrics.ER
        trace.append((rnd, *best()))
    x, er = best()
    return x, er, trace


def convexity_index(rows) -> float:
    """Worse endpoint response time over the minimum, on stable rows.

    Accepts :class:`SweepRow` objects or plain response-time numbers.
    """
    ers = [r if isinstance(r, (int, float)) else r.metrics.ER for r in rows if isinstance(r, (int, float)) or r.ok]
    if len(ers) < 3:
        raise TooFewPointsError(f"need at least 3 stable points, got {len(ers)}")
    return max(ers[0], ers[-1]) / min(ers)
