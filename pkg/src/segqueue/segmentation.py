"""Segmentation of messages into fixed-payload packets.

A message of ``m`` bytes becomes ``X = ceil(m / ell_d)`` packets: ``X - 1``
body packets carrying exactly ``ell_d`` bytes, then one edge packet carrying
the remainder. Everything about the packet stream follows from the tail
series

    u_n = P(M > n ell_d)          (u_0 = 1)
    v_n = E[M; M > n ell_d]       (v_0 = mean message size)

which give ``E[X] = sum u_n``, ``E[X^2] = sum (2n + 1) u_n``, the edge
packet probability ``1 / E[X]`` and the packet-size moments.

Infinite series are truncated with certified brackets on the remainder.
Once the distribution's tail is convex (see
:meth:`~segqueue.msgdist.MessageSizeDistribution.convex_tail_start`), a
remainder ``sum_{n>N} g(n h)`` lies between the trapezoid lower bound
``(1/h) int_{Nh}^inf g - g(Nh)/2`` and the midpoint upper bound
``(1/h) int_{Nh + h/2}^inf g``. The tail integrals have closed forms in the
partial moments, so the bracket costs three function evaluations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import TruncationError
from .msgdist import MessageSizeDistribution

__all__ = [
    "DEFAULT_EPS_REL",
    "DEFAULT_N_MAX",
    "SegmentationParams",
    "SeriesAccumulation",
    "SegmentationStats",
    "u_term",
    "accumulate_series",
    "segmentation_stats",
    "edge_cdf",
    "packet_cdf",
    "segment_message",
    "packet_counts",
]

DEFAULT_EPS_REL = 1e-9
DEFAULT_N_MAX = 2**22

_FIRST_CHUNK = 4096
_MAX_CHUNK = 1 << 20
_ULP = np.finfo(float).eps


@dataclass(frozen=True)
class SegmentationParams:
    ell_d: float

    def __post_init__(self):
        if not (self.ell_d > 0 and math.isfinite(self.ell_d)):
            raise ValueError(f"payload size must be positive, got {self.ell_d}")


@dataclass(frozen=True)
class SeriesAccumulation:
    """Truncated tail series with their remainder half-widths.

    ``sum_u`` covers ``n >= 0`` (so includes ``u_0 = 1``), ``sum_nu`` covers
    ``n >= 1``, ``sum_v`` covers ``n >= 0`` (includes ``v_0``). Each sum
    already contains the midpoint of its remainder bracket; the matching
    ``tail_bound_*`` is the bracket half-width.
    """

    n_used: int
    sum_u: float
    sum_nu: float
    sum_v: float
    tail_bound_u: float = 0.0
    tail_bound_nu: float = 0.0
    tail_bound_v: float = 0.0


@dataclass(frozen=True)
class SegmentationStats:
    ell_d: float
    pi_E: float
    ell_p: float
    sigma_p2: float
    EX: float
    EX2: float
    series: SeriesAccumulation

    @property
    def packet_second_moment(self) -> float:
        return self.sigma_p2 + self.ell_p**2


def _check(ell_d, eps_rel):
    SegmentationParams(ell_d)
    if not 0 < eps_rel < 1:
        raise ValueError(f"eps_rel must lie in (0, 1), got {eps_rel}")


def u_term(dist: MessageSizeDistribution, ell_d: float, n: int) -> float:
    """``u_n = P(M > n ell_d)``, with ``u_0 = 1``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return 1.0
    return float(dist.sf(n * ell_d))


def _tail_brackets(dist, ell_d, t):
    """Lower/upper bounds on the remainders of the u, n*u and v series after
    the term at ``t = N ell_d``. Valid where the tail is convex."""
    h = ell_d

    def integrals(T):
        s = dist.sf(T)
        v = dist.partial_expectation(T, strict=True)
        w = dist.partial_second_moment(T, strict=True)
        return s, v, v - T * s, w - T * v, 0.5 * (w - T * T * s)

    s, v, i_s, i_v, i_ts = integrals(t)
    _, _, j_s, j_v, j_ts = integrals(t + 0.5 * h)
    lo_u, hi_u = i_s / h - 0.5 * s, j_s / h
    lo_v, hi_v = i_v / h - 0.5 * v, j_v / h
    lo_nu, hi_nu = i_ts / h**2 - 0.5 * t * s / h, j_ts / h**2
    return (lo_u, hi_u), (lo_nu, hi_nu), (lo_v, hi_v)


def _midpoint(lo, hi):
    lo, hi = np.minimum(lo, hi), np.maximum(lo, hi)
    # half-width padded by rounding in the closed-form integrals
    half = 0.5 * (hi - lo) + 4 * _ULP * (np.abs(lo) + np.abs(hi))
    return 0.5 * (lo + hi), half


def accumulate_series(
    dist: MessageSizeDistribution,
    ell_d: float,
    eps_rel: float = DEFAULT_EPS_REL,
    n_max: int = DEFAULT_N_MAX,
) -> SeriesAccumulation:
    """Sum ``u_n``, ``n u_n`` and ``v_n`` to relative tolerance ``eps_rel``.

    Terms are generated in vectorized chunks. The series stop exactly at the
    first ``u_n = 0``; otherwise they stop at the first ``N`` where all three
    remainder half-widths are within ``eps_rel`` of their partial sums.

    Raises
    ------
    TruncationError
        If more than ``n_max`` terms would be needed.
    """
    _check(ell_d, eps_rel)
    t0 = dist.convex_tail_start()
    if t0 is None and not math.isfinite(dist.support_max):
        raise ValueError("unbounded distribution must define convex_tail_start()")

    parts_u, parts_nu, parts_v = [1.0], [], [dist.mean]
    acc_u, acc_nu, acc_v = 1.0, 0.0, dist.mean
    start, chunk = 1, _FIRST_CHUNK
    while start <= n_max:
        n = np.arange(start, min(start + chunk, n_max + 1), dtype=float)
        t = n * ell_d
        u = np.asarray(dist.sf(t), dtype=float)
        v = np.asarray(dist.partial_expectation(t, strict=True), dtype=float)
        nu = n * u

        zeros = np.flatnonzero(u == 0.0)
        if zeros.size:
            k = zeros[0]
            parts_u.append(u[:k].sum())
            parts_nu.append(nu[:k].sum())
            parts_v.append(v[:k].sum())
            return SeriesAccumulation(
                n_used=int(start + k - 1),
                sum_u=math.fsum(parts_u),
                sum_nu=math.fsum(parts_nu),
                sum_v=math.fsum(parts_v),
            )

        if t0 is not None and t[-1] >= t0:
            sel = np.flatnonzero(t >= t0)
            cu = acc_u + np.cumsum(u)[sel]
            cnu = acc_nu + np.cumsum(nu)[sel]
            cv = acc_v + np.cumsum(v)[sel]
            bu, bnu, bv = _tail_brackets(dist, ell_d, t[sel])
            (mu_, hu), (mnu, hnu), (mv, hv) = _midpoint(*bu), _midpoint(*bnu), _midpoint(*bv)
            ok = np.flatnonzero((hu <= eps_rel * cu) & (hnu <= eps_rel * cnu) & (hv <= eps_rel * cv))
            if ok.size:
                j = ok[0]
                k = sel[j]
                parts_u += [u[: k + 1].sum(), mu_[j]]
                parts_nu += [nu[: k + 1].sum(), mnu[j]]
                parts_v += [v[: k + 1].sum(), mv[j]]
                return SeriesAccumulation(
                    n_used=int(start + k),
                    sum_u=math.fsum(parts_u),
                    sum_nu=math.fsum(parts_nu),
                    sum_v=math.fsum(parts_v),
                    tail_bound_u=float(hu[j]),
                    tail_bound_nu=float(hnu[j]),
                    tail_bound_v=float(hv[j]),
                )

        parts_u.append(u.sum())
        parts_nu.append(nu.sum())
        parts_v.append(v.sum())
        acc_u, acc_nu, acc_v = math.fsum(parts_u), math.fsum(parts_nu), math.fsum(parts_v)
        start += n.size
        chunk = min(2 * chunk, _MAX_CHUNK)

    raise TruncationError(
        f"series for payload {ell_d:g} B did not reach eps_rel={eps_rel:g} "
        f"within {n_max} terms; payload too small for this tail",
        terms=n_max,
    )


def segmentation_stats(
    dist: MessageSizeDistribution,
    ell_d: float,
    eps_rel: float = DEFAULT_EPS_REL,
    n_max: int = DEFAULT_N_MAX,
) -> SegmentationStats:
    """Edge probability, packet-size mean/variance and batch-size moments."""
    s = accumulate_series(dist, ell_d, eps_rel, n_max)
    mean, var = dist.moments()
    pi_e = 1.0 / s.sum_u
    ell_p = pi_e * mean
    second = pi_e * (mean * mean + var) + 2 * pi_e * mean * ell_d - 2 * pi_e * ell_d * (
        s.sum_v - ell_d * s.sum_nu
    )
    sigma_p2 = max(second - ell_p * ell_p, 0.0)
    return SegmentationStats(
        ell_d=float(ell_d),
        pi_E=pi_e,
        ell_p=ell_p,
        sigma_p2=sigma_p2,
        EX=s.sum_u,
        EX2=2 * s.sum_nu + s.sum_u,
        series=s,
    )


def edge_cdf(
    dist: MessageSizeDistribution,
    ell_d: float,
    x: float,
    eps_rel: float = DEFAULT_EPS_REL,
    n_max: int = DEFAULT_N_MAX,
) -> float:
    """CDF of the edge-packet payload size.

    Sums ``P(n ell_d < M <= n ell_d + x)`` over ``n``. The remainder after
    term ``N`` telescopes below ``u_{N+1}``; summation stops once half of that
    is within ``eps_rel`` (absolute, since the partial sum vanishes as
    ``x -> 0``).
    """
    _check(ell_d, eps_rel)
    if x <= 0:
        return 0.0
    if x >= ell_d:
        # the series telescopes to 1 at x = ell_d
        return 1.0
    total = []
    start, chunk = 0, _FIRST_CHUNK
    while start <= n_max:
        n = np.arange(start, min(start + chunk, n_max + 1), dtype=float)
        t = n * ell_d
        s_lo = np.asarray(dist.sf(t), dtype=float)
        terms = s_lo - np.asarray(dist.sf(t + x), dtype=float)
        zeros = np.flatnonzero(s_lo == 0.0)
        if zeros.size:
            total.append(terms[: zeros[0]].sum())
            return min(math.fsum(total), 1.0)
        s_next = np.asarray(dist.sf(t + ell_d), dtype=float)
        ok = np.flatnonzero(0.5 * s_next <= eps_rel)
        if ok.size:
            k = ok[0]
            total += [terms[: k + 1].sum(), 0.5 * s_next[k]]
            return min(math.fsum(total), 1.0)
        total.append(terms.sum())
        start += n.size
        chunk = min(2 * chunk, _MAX_CHUNK)
    raise TruncationError(f"edge CDF series did not converge within {n_max} terms", terms=n_max)


def packet_cdf(
    dist: MessageSizeDistribution,
    ell_d: float,
    x: float,
    eps_rel: float = DEFAULT_EPS_REL,
    n_max: int = DEFAULT_N_MAX,
    stats: SegmentationStats | None = None,
) -> float:
    """CDF of the payload size of a randomly chosen packet.

    Mixture of the body-packet atom at ``ell_d`` (weight ``1 - pi_E``,
    included at ``x = ell_d``) and the edge distribution (weight ``pi_E``).
    Pass precomputed ``stats`` to avoid re-summing the series.
    """
    if stats is None:
        stats = segmentation_stats(dist, ell_d, eps_rel, n_max)
    step = 1.0 if x >= ell_d else 0.0
    return (1.0 - stats.pi_E) * step + stats.pi_E * edge_cdf(dist, ell_d, x, eps_rel, n_max)


def segment_message(m: float, ell_d: float) -> list[float]:
    """Split a message into body payloads of ``ell_d`` followed by the edge payload."""
    if not m > 0:
        raise ValueError(f"message size must be positive, got {m}")
    SegmentationParams(ell_d)
    count = math.ceil(m / ell_d)
    return [float(ell_d)] * (count - 1) + [m - ell_d * (count - 1)]


def packet_counts(sizes, ell_d: float) -> np.ndarray:
    """Vectorized ``len(segment_message(m, ell_d))`` for an array of sizes."""
    return np.ceil(np.asarray(sizes, dtype=float) / ell_d).astype(np.int64)
