"""Closed-form mean delays of the batch-arrival single-link queue.

Messages arrive as a Poisson stream of rate ``lam``; each is segmented and
its packets join one FIFO link of capacity ``capacity`` (bytes/s) together.
Every packet carries a constant ``header`` of control bytes, so its service
time is ``(payload + header) / capacity``.

The mean wait splits into two parts:

* ``EW1`` -- the batch's wait behind work already present,
  ``lam (E[X] E[S^2] + (E[X^2] - E[X]) E[S]^2) / (2 (1 - a))``;
* ``EW2`` -- the wait of the edge packet behind the body packets of its own
  message, ``(ell_d + header) / capacity * (E[X] - 1)``.

``ER = ES + EW1 + EW2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import UnstableError
from .msgdist import MessageSizeDistribution
from .segmentation import DEFAULT_EPS_REL, DEFAULT_N_MAX, SegmentationStats, segmentation_stats

__all__ = [
    "HIGH_LOAD",
    "LinkParams",
    "Scenario",
    "QueueingMetrics",
    "service_moments",
    "offered_load",
    "waiting_time",
    "response_time",
    "mg1_waiting_approx",
    "service_cv",
    "batch_workload_wait",
]

#: Offered load above which results are flagged as numerically fragile.
HIGH_LOAD = 0.95


@dataclass(frozen=True)
class LinkParams:
    capacity: float  # bytes per second
    header: float = 0.0  # bytes per packet

    def __post_init__(self):
        if not (self.capacity > 0 and math.isfinite(self.capacity)):
            raise ValueError(f"link capacity must be positive, got {self.capacity}")
        if not (self.header >= 0 and math.isfinite(self.header)):
            raise ValueError(f"header size must be non-negative, got {self.header}")


@dataclass(frozen=True)
class Scenario:
    dist: MessageSizeDistribution
    ell_d: float
    link: LinkParams
    lam: float  # messages per second

    def __post_init__(self):
        if not (self.ell_d > 0 and math.isfinite(self.ell_d)):
            raise ValueError(f"payload size must be positive, got {self.ell_d}")
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"arrival rate must be positive, got {self.lam}")


@dataclass(frozen=True)
class QueueingMetrics:
    ES: float
    ES2: float
    a: float
    EW1: float
    EW2: float
    EW: float
    ER: float
    stats: SegmentationStats | None = None

    @property
    def high_load(self) -> bool:
        return self.a > HIGH_LOAD


def service_moments(stats: SegmentationStats, link: LinkParams) -> tuple[float, float]:
    """Mean and second moment of a packet's transmission time."""
    size = stats.ell_p + link.header
    return size / link.capacity, (stats.sigma_p2 + size * size) / link.capacity**2


def offered_load(lam: float, stats: SegmentationStats, ES: float) -> float:
    return lam * stats.EX * ES


def _require_stable(a):
    if not a < 1:
        raise UnstableError(
            f"offered load a={a:.6g} >= 1: the queue has no stationary regime", load=a
        )


def waiting_time(lam, stats, ES, ES2, ell_d, link) -> tuple[float, float, float]:
    """Return ``(EW1, EW2, EW)``; raises :class:`UnstableError` if ``a >= 1``."""
    a = offered_load(lam, stats, ES)
    _require_stable(a)
    ew1 = lam * (stats.EX * ES2 + (stats.EX2 - stats.EX) * ES * ES) / (2 * (1 - a))
    ew2 = (ell_d + link.header) / link.capacity * (stats.EX - 1)
    return ew1, ew2, ew1 + ew2


def response_time(
    scenario: Scenario,
    eps_rel: float = DEFAULT_EPS_REL,
    n_max: int = DEFAULT_N_MAX,
    stats: SegmentationStats | None = None,
) -> QueueingMetrics:
    """Full chain from distribution and payload size to mean response time."""
    if stats is None:
        stats = segmentation_stats(scenario.dist, scenario.ell_d, eps_rel, n_max)
    ES, ES2 = service_moments(stats, scenario.link)
    ew1, ew2, ew = waiting_time(scenario.lam, stats, ES, ES2, scenario.ell_d, scenario.link)
    return QueueingMetrics(
        ES=ES,
        ES2=ES2,
        a=offered_load(scenario.lam, stats, ES),
        EW1=ew1,
        EW2=ew2,
        EW=ew,
        ER=ES + ew,
        stats=stats,
    )


def mg1_waiting_approx(lam: float, ES: float, ES2: float) -> float:
    """Pollaczek-Khinchine mean wait, the no-segmentation limit."""
    rho = lam * ES
    _require_stable(rho)
    return lam * ES2 / (2 * (1 - rho))


def service_cv(ES: float, ES2: float) -> float:
    """Coefficient of variation of the packet service time."""
    return math.sqrt(max(ES2 - ES * ES, 0.0)) / ES


def batch_workload_wait(scenario: Scenario, stats: SegmentationStats) -> float:
    """Mean wait of a message's first packet, using the true batch workload.

    Within a message the packet sizes are not independent of the packet
    count: the batch always carries ``m + X * header`` bytes. By PASTA the
    first packet waits for the time-average workload
    ``lam E[B^2] / (2 (1 - a))`` with ``B = (M + X header) / capacity`` and
    ``E[M X] = sum_n v_n``. This differs from ``EW1`` whenever messages are
    actually segmented, and it is what a simulation of the segmented stream
    measures.
    """
    link = scenario.link
    ES, _ = service_moments(stats, link)
    a = offered_load(scenario.lam, stats, ES)
    _require_stable(a)
    h = link.header
    eb2 = (
        scenario.dist.second_moment + 2 * h * stats.series.sum_v + h * h * stats.EX2
    ) / link.capacity**2
    return scenario.lam * eb2 / (2 * (1 - a))
