import math
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate

from segqueue import Deterministic, Empirical, Exponential, Lognormal

PAPER_CFG = Path(__file__).resolve().parents[1] / "src" / "segqueue" / "data" / "web80211g.cfg"

#: one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def web_lognormal():
    return Lognormal(6.34, 2.07)


@pytest.fixture
def paper_cfg():
    return PAPER_CFG


ALL_DISTS = [
    Deterministic(100.0),
    Exponential(1000.0),
    Lognormal(6.34, 2.07),
    Empirical(np.array([40.0, 100.0, 100.0, 250.0, 1300.0, 7.5])),
]


def lognormal_density(y, mu, sigma):
    """Density written out directly, independent of the package."""
    return math.exp(-((math.log(y) - mu) ** 2) / (2 * sigma**2)) / (math.sqrt(2 * math.pi) * sigma * y)


def lognormal_tail_quad(t, mu, sigma, power):
    """int_t^inf y**power f(y) dy by adaptive quadrature in log-space."""
    def g(s):
        return math.exp(power * s - (s - mu) ** 2 / (2 * sigma**2)) / (math.sqrt(2 * math.pi) * sigma)
    lo = math.log(t)
    peak = mu + power * sigma**2
    pts = sorted({lo, max(lo, peak - 8 * sigma), max(lo, peak), max(lo, peak + 8 * sigma)})
    total = 0.0
    for a, b in zip(pts, pts[1:]):
        total += integrate.quad(g, a, b, epsabs=0, epsrel=1e-13, limit=200)[0]
    # beyond 40 sigma past the peak the integrand is below double precision
    total += integrate.quad(g, pts[-1], max(lo, peak + 40 * sigma), epsabs=0, epsrel=1e-13, limit=200)[0]
    return total
