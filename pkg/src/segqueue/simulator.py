"""Discrete-event simulation of segmented messages on one FIFO link.

Messages arrive at exponential inter-arrival times. Each is split into body
packets followed by its edge packet, all of which join the queue at the
arrival instant. The single server transmits packets in FIFO order at the
link capacity, and the buffer is unbounded.

Because a batch is served contiguously once its first packet starts, the
simulation advances one message at a time: ``start = max(arrival, free)``.
Packet ``j`` of a message starts at ``start + j * s_body``. Per-packet
quantities follow in closed form. :func:`event_trace` expands the same
schedule into explicit packet events.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .queueing import Scenario, offered_load, service_moments
from .errors import UnstableError
from .segmentation import DEFAULT_EPS_REL, DEFAULT_N_MAX, packet_counts, segmentation_stats

__all__ = [
    "SimConfig",
    "Estimate",
    "ReplicationStats",
    "SimResult",
    "Event",
    "run",
    "run_replication",
    "event_trace",
    "replay_trace",
    "write_trace_csv",
]

TRACE_LIMIT = 100_000


@dataclass(frozen=True)
class SimConfig:
    warmup_messages: int = 10_000
    measured_messages: int = 100_000
    replications: int = 10
    base_seed: int = 0
    confidence_level: float = 0.95

    def __post_init__(self):
        if self.warmup_messages < 0:
            raise ValueError("warmup_messages must be >= 0")
        if self.measured_messages < 1000:
            raise ValueError("measured_messages must be at least 1000")
        if self.replications < 2:
            raise ValueError("at least two replications are needed for a confidence interval")
        if not 0 < self.confidence_level < 1:
            raise ValueError("confidence_level must lie in (0, 1)")


@dataclass(frozen=True)
class Estimate:
    mean: float
    half_width: float

    @property
    def low(self) -> float:
        return self.mean - self.half_width

    @property
    def high(self) -> float:
        return self.mean + self.half_width

    def contains(self, value: float) -> bool:
        return self.low <= value <= self.high


@dataclass(frozen=True)
class ReplicationStats:
    mean_W1: float
    mean_W2: float
    mean_service: float
    mean_R_packet: float
    utilization: float
    max_w2_error: float  # largest |W2 - (X-1) s_body| seen

    @property
    def mean_R_paper(self) -> float:
        return self.mean_W1 + self.mean_W2 + self.mean_service


@dataclass(frozen=True)
class SimResult:
    mean_W1_hat: Estimate
    mean_W2_hat: Estimate
    mean_R_paper: Estimate
    mean_R_packet: Estimate
    utilization_hat: Estimate
    messages_simulated: int
    replications: tuple[ReplicationStats, ...]


@dataclass(frozen=True)
class Event:
    time: float
    event: str  # "arrival" | "start" | "departure"
    message_id: int
    packet_index: int
    size_bytes: float


def _check_stable(scenario, eps_rel, n_max):
    st = segmentation_stats(scenario.dist, scenario.ell_d, eps_rel, n_max)
    es, _ = service_moments(st, scenario.link)
    a = offered_load(scenario.lam, st, es)
    if not a < 1:
        raise UnstableError(f"offered load a={a:.6g} >= 1; refusing to simulate", load=a)
    return a


def _streams(cfg):
    return np.random.SeedSequence(cfg.base_seed).spawn(cfg.replications)


def _schedule(scenario, n_messages, seed_seq):
    """Arrival times, sizes, packet counts and batch start/free times."""
    rng = np.random.default_rng(seed_seq)
    gaps = rng.exponential(1.0 / scenario.lam, n_messages)
    sizes = np.asarray(scenario.dist.sample(rng, n_messages), dtype=float)
    arrivals = np.cumsum(gaps)
    ell_d, link = scenario.ell_d, scenario.link
    counts = packet_counts(sizes, ell_d)
    s_body = (ell_d + link.header) / link.capacity
    edge = sizes - ell_d * (counts - 1)
    s_edge = (edge + link.header) / link.capacity
    last_start_offset = (counts - 1) * s_body

    starts = np.empty(n_messages)
    frees = np.empty(n_messages)
    free = 0.0
    # Lindley recursion at batch level
    for i, (arr, off, se) in enumerate(zip(arrivals.tolist(), last_start_offset.tolist(), s_edge.tolist())):
        start = arr if arr > free else free
        starts[i] = start
        free = (start + off) + se
        frees[i] = free
    return arrivals, sizes, counts, s_body, s_edge, starts, frees


def run_replication(scenario: Scenario, cfg: SimConfig, index: int) -> ReplicationStats:
    """Simulate one replication (``0 <= index < cfg.replications``)."""
    seed = _streams(cfg)[index]
    n_total = cfg.warmup_messages + cfg.measured_messages
    arrivals, _, counts, s_body, s_edge, starts, frees = _schedule(scenario, n_total, seed)
    w = slice(cfg.warmup_messages, None)
    A, X, st, fr, se = arrivals[w], counts[w], starts[w], frees[w], s_edge[w]

    w1 = st - A
    last_start = st + (X - 1) * s_body
    w2 = last_start - st
    n_packets = X.sum()
    service_total = (X - 1) * s_body + se
    # sum over packets of (departure - arrival): body j departs at st + (j+1) s_body
    body_dep = (X - 1) * st + s_body * (X - 1) * X / 2.0
    resp_total = body_dep + fr - X * A

    t0, t1 = A[0], arrivals[-1]
    busy = np.clip(np.minimum(frees, t1) - np.maximum(starts, t0), 0.0, None).sum()
    return ReplicationStats(
        mean_W1=float(w1.mean()),
        mean_W2=float(w2.mean()),
        mean_service=float(service_total.sum() / n_packets),
        mean_R_packet=float(resp_total.sum() / n_packets),
        utilization=float(min(busy / (t1 - t0), 1.0)),
        max_w2_error=float(np.max(np.abs(w2 - (X - 1) * s_body))),
    )


def _ci(values, level):
    v = np.asarray(values, dtype=float)
    n = v.size
    half = sps.t.ppf(0.5 + level / 2, n - 1) * v.std(ddof=1) / math.sqrt(n)
    return Estimate(float(v.mean()), float(half))


def run(
    scenario: Scenario,
    cfg: SimConfig,
    eps_rel: float = DEFAULT_EPS_REL,
    n_max: int = DEFAULT_N_MAX,
) -> SimResult:
    """Independent replications with t confidence intervals on the means.

    Raises :class:`UnstableError` for scenarios with offered load >= 1.
    """
    _check_stable(scenario, eps_rel, n_max)
    reps = tuple(run_replication(scenario, cfg, i) for i in range(cfg.replications))
    lvl = cfg.confidence_level
    return SimResult(
        mean_W1_hat=_ci([r.mean_W1 for r in reps], lvl),
        mean_W2_hat=_ci([r.mean_W2 for r in reps], lvl),
        mean_R_paper=_ci([r.mean_R_paper for r in reps], lvl),
        mean_R_packet=_ci([r.mean_R_packet for r in reps], lvl),
        utilization_hat=_ci([r.utilization for r in reps], lvl),
        messages_simulated=cfg.replications * (cfg.warmup_messages + cfg.measured_messages),
        replications=reps,
    )


_RANK = {"departure": 0, "arrival": 1, "start": 2}


def event_trace(scenario: Scenario, cfg: SimConfig, limit: int = TRACE_LIMIT) -> list[Event]:
    """Chronological packet events of replication 0, first ``limit`` of them.

    The trace covers the whole replication including warm-up; it is built
    from the same schedule as :func:`run_replication`.
    """
    if not 0 < limit <= TRACE_LIMIT:
        raise ValueError(f"limit must be in 1..{TRACE_LIMIT}")
    _check_stable(scenario, DEFAULT_EPS_REL, DEFAULT_N_MAX)
    n_total = cfg.warmup_messages + cfg.measured_messages
    arrivals, sizes, counts, s_body, s_edge, starts, frees = _schedule(scenario, n_total, _streams(cfg)[0])
    ell_d = scenario.ell_d
    events = []
    for mid in range(n_total):
        arr, x, st = float(arrivals[mid]), int(counts[mid]), float(starts[mid])
        for j in range(x):
            size = ell_d if j < x - 1 else float(sizes[mid] - ell_d * (x - 1))
            start = st + j * s_body
            dep = st + (j + 1) * s_body if j < x - 1 else float(frees[mid])
            events.append(Event(arr, "arrival", mid, j, size))
            events.append(Event(start, "start", mid, j, size))
            events.append(Event(dep, "departure", mid, j, size))
        # once the server idles, later messages only add later events
        if len(events) >= limit and mid + 1 < n_total and arrivals[mid + 1] >= frees[mid]:
            break
    events.sort(key=lambda e: (e.time, _RANK[e.event], e.message_id, e.packet_index))
    return events[:limit]


def replay_trace(events: list[Event], first_message: int = 0) -> dict:
    """Recompute message and packet means from a complete trace.

    Only messages with id ``>= first_message`` are counted.
    """
    per_packet = {}
    for e in events:
        if e.message_id >= first_message:
            per_packet.setdefault((e.message_id, e.packet_index), {})[e.event] = e.time
    per_msg = {}
    for (mid, j), ev in per_packet.items():
        per_msg.setdefault(mid, {})[j] = ev
    w1, w2, service, resp = [], [], [], []
    for packets in per_msg.values():
        first, last = packets[0], packets[max(packets)]
        w1.append(first["start"] - first["arrival"])
        w2.append(last["start"] - first["start"])
        for ev in packets.values():
            service.append(ev["departure"] - ev["start"])
            resp.append(ev["departure"] - ev["arrival"])
    return {
        "mean_W1": float(np.mean(w1)),
        "mean_W2": float(np.mean(w2)),
        "mean_service": float(np.mean(service)),
        "mean_R_packet": float(np.mean(resp)),
    }


def write_trace_csv(events: list[Event], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "event", "message_id", "packet_index", "size_bytes"])
        for e in events:
            writer.writerow([f"{e.time:.17g}", e.event, e.message_id, e.packet_index, f"{e.size_bytes:.17g}"])
