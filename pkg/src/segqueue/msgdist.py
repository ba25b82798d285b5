"""Message-size distributions.

Every distribution answers the queries the segmentation analysis needs:
CDF and survival function, the first two moments, the upper partial
moments ``E[M; M >= t]`` and ``E[M^2; M >= t]``, quantiles and sampling.
All sizes are in bytes. Query methods accept scalars or numpy arrays and
return the same shape (a Python float for scalar input).

Distributions are immutable; ``sample`` draws from a caller-owned
``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import ndtr, ndtri

__all__ = [
    "MessageSizeDistribution",
    "Deterministic",
    "Exponential",
    "Lognormal",
    "Empirical",
    "lognormal_from_moments",
    "load_empirical",
]


def _ret(value):
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value


class MessageSizeDistribution(ABC):
    """Common interface for message-size distributions F(x) on (0, inf)."""

    #: Largest possible message size (``inf`` for unbounded support).
    support_max: float = math.inf

    @abstractmethod
    def sf(self, x):
        """Survival function ``P(M > x)``."""

    def cdf(self, x):
        """Right-continuous CDF ``P(M <= x)``; zero for ``x <= 0``."""
        return _ret(1.0 - np.asarray(self.sf(x), dtype=float))

    @abstractmethod
    def moments(self) -> tuple[float, float]:
        """Return ``(mean, variance)``."""

    @property
    def mean(self) -> float:
        return self.moments()[0]

    @property
    def variance(self) -> float:
        return self.moments()[1]

    @property
    def second_moment(self) -> float:
        m, var = self.moments()
        return var + m * m

    @abstractmethod
    def partial_expectation(self, t, strict=False):
        """Upper partial expectation ``E[M; M >= t]``.

        With ``strict=True`` the atom at ``t`` is excluded, giving
        ``E[M; M > t]``. The two differ only for distributions with atoms.
        """

    @abstractmethod
    def partial_second_moment(self, t, strict=False):
        """Upper partial second moment ``E[M^2; M >= t]`` (``M > t`` if strict)."""

    @abstractmethod
    def ppf(self, p: float) -> float:
        """Smallest x with ``cdf(x) >= p``."""

    @abstractmethod
    def sample(self, rng: np.random.Generator, size=None):
        """Draw message sizes; a float if ``size`` is None, else an array."""

    def convex_tail_start(self) -> float | None:
        """Size beyond which ``sf(t)``, ``E[M; M>t]`` and ``t*sf(t)`` are all
        convex and non-increasing, or None when no such point is known.

        Series truncation relies on this for its tail brackets; unbounded
        distributions must provide it.
        """
        return None

    @staticmethod
    def _check_t(t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("partial moments need t >= 0")
        return t


@dataclass(frozen=True)
class Deterministic(MessageSizeDistribution):
    """Every message is exactly ``size`` bytes."""

    size: float

    def __post_init__(self):
        if not self.size > 0 or not math.isfinite(self.size):
            raise ValueError(f"deterministic size must be positive, got {self.size}")

    @property
    def support_max(self) -> float:
        return float(self.size)

    def sf(self, x):
        return _ret(np.where(np.asarray(x, dtype=float) < self.size, 1.0, 0.0))

    def moments(self):
        return float(self.size), 0.0

    def _above(self, t, strict):
        t = self._check_t(t)
        return t < self.size if strict else t <= self.size

    def partial_expectation(self, t, strict=False):
        return _ret(np.where(self._above(t, strict), self.size, 0.0))

    def partial_second_moment(self, t, strict=False):
        return _ret(np.where(self._above(t, strict), self.size**2, 0.0))

    def ppf(self, p):
        return float(self.size)

    def sample(self, rng, size=None):
        if size is None:
            return float(self.size)
        return np.full(size, float(self.size))


@dataclass(frozen=True)
class Exponential(MessageSizeDistribution):
    """Exponentially distributed sizes with the given mean (bytes)."""

    mean_size: float

    def __post_init__(self):
        if not self.mean_size > 0 or not math.isfinite(self.mean_size):
            raise ValueError(f"exponential mean must be positive, got {self.mean_size}")

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        return _ret(np.exp(-np.maximum(x, 0.0) / self.mean_size))

    def moments(self):
        return float(self.mean_size), float(self.mean_size) ** 2

    def partial_expectation(self, t, strict=False):
        t = self._check_t(t)
        m = self.mean_size
        return _ret((t + m) * np.exp(-t / m))

    def partial_second_moment(self, t, strict=False):
        t = self._check_t(t)
        m = self.mean_size
        return _ret((t * t + 2 * t * m + 2 * m * m) * np.exp(-t / m))

    def ppf(self, p):
        return -self.mean_size * math.log1p(-p)

    def sample(self, rng, size=None):
        out = rng.exponential(self.mean_size, size)
        return float(out) if size is None else out

    def convex_tail_start(self):
        # t*exp(-t/m) is convex from 2m on; the other two earlier
        return 2.0 * self.mean_size


@dataclass(frozen=True)
class Lognormal(MessageSizeDistribution):
    """Lognormal sizes: ``log M ~ Normal(mu, sigma**2)``."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0 or not math.isfinite(self.sigma) or not math.isfinite(self.mu):
            raise ValueError(f"invalid lognormal parameters mu={self.mu}, sigma={self.sigma}")

    def _z(self, x, shift=0.0):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            logx = np.log(np.where(x > 0, x, 0.0))
        return (self.mu + shift - logx) / self.sigma

    def sf(self, x):
        # P(M > x) = Phi((mu - log x) / sigma), accurate deep into the tail
        return _ret(ndtr(self._z(x)))

    def cdf(self, x):
        return _ret(ndtr(-self._z(x)))

    def moments(self):
        s2 = self.sigma**2
        mean = math.exp(self.mu + s2 / 2)
        return mean, math.expm1(s2) * mean * mean

    def partial_expectation(self, t, strict=False):
        t = self._check_t(t)
        s2 = self.sigma**2
        return _ret(math.exp(self.mu + s2 / 2) * ndtr(self._z(t, s2)))

    def partial_second_moment(self, t, strict=False):
        t = self._check_t(t)
        s2 = self.sigma**2
        return _ret(math.exp(2 * self.mu + 2 * s2) * ndtr(self._z(t, 2 * s2)))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        z = -self._z(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            dens = np.exp(-0.5 * z * z) / (math.sqrt(2 * math.pi) * self.sigma * x)
        return _ret(np.where(x > 0, dens, 0.0))

    def ppf(self, p):
        return math.exp(self.mu + self.sigma * float(ndtri(p)))

    def sample(self, rng, size=None):
        out = rng.lognormal(self.mu, self.sigma, size)
        return float(out) if size is None else out

    def convex_tail_start(self):
        # t*sf(t) turns convex (and is already decreasing) at log t = mu + sigma^2
        return math.exp(self.mu + self.sigma**2)


@dataclass(frozen=True, eq=False)
class Empirical(MessageSizeDistribution):
    """A finite sample treated as the exact population (no smoothing)."""

    values: np.ndarray
    _cum1: np.ndarray = field(init=False, repr=False)
    _cum2: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float).ravel())
        if v.size == 0:
            raise ValueError("empirical distribution needs at least one value")
        if not np.all(np.isfinite(v)) or v[0] <= 0:
            raise ValueError("empirical message sizes must be finite and positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        # suffix sums: _cumk[i] = sum(v[i:]**k)
        object.__setattr__(self, "_cum1", np.append(np.cumsum(v[::-1])[::-1], 0.0))
        object.__setattr__(self, "_cum2", np.append(np.cumsum((v * v)[::-1])[::-1], 0.0))

    def __hash__(self):
        return hash(self.values.tobytes())

    def __eq__(self, other):
        return isinstance(other, Empirical) and np.array_equal(self.values, other.values)

    @property
    def support_max(self) -> float:
        return float(self.values[-1])

    def sf(self, x):
        n = self.values.size
        idx = np.searchsorted(self.values, np.asarray(x, dtype=float), side="right")
        return _ret((n - idx) / n)

    def moments(self):
        return float(self.values.mean()), float(self.values.var())

    def _first_index(self, t, strict):
        t = self._check_t(t)
        return np.searchsorted(self.values, t, side="right" if strict else "left")

    def partial_expectation(self, t, strict=False):
        return _ret(self._cum1[self._first_index(t, strict)] / self.values.size)

    def partial_second_moment(self, t, strict=False):
        return _ret(self._cum2[self._first_index(t, strict)] / self.values.size)

    def ppf(self, p):
        k = max(math.ceil(p * self.values.size) - 1, 0)
        return float(self.values[min(k, self.values.size - 1)])

    def sample(self, rng, size=None):
        return rng.choice(self.values, size=size) if size is not None else float(rng.choice(self.values))


def lognormal_from_moments(mean: float, std: float) -> tuple[float, float]:
    """Return ``(mu, sigma)`` of the lognormal with the given mean and std."""
    if not (mean > 0 and std > 0):
        raise ValueError("mean and std must both be positive")
    s2 = math.log1p((std / mean) ** 2)
    return math.log(mean) - s2 / 2, math.sqrt(s2)


def load_empirical(path) -> Empirical:
    """Read one positive message size per line.

    Blank lines and lines starting with ``#`` are skipped. Errors name the
    offending line.
    """
    values = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            value = float(line)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: not a number: {line!r}") from None
        if not (value > 0 and math.isfinite(value)):
            raise ValueError(f"{path}:{lineno}: message size must be positive, got {line}")
        values.append(value)
    if not values:
        raise ValueError(f"{path}: no message sizes found")
    return Empirical(np.array(values))
