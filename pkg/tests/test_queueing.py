import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from segqueue import (
    Deterministic,
    Empirical,
    Exponential,
    LinkParams,
    Lognormal,
    Scenario,
    UnstableError,
    batch_workload_wait,
    mg1_waiting_approx,
    offered_load,
    response_time,
    segmentation_stats,
    service_cv,
    service_moments,
    waiting_time,
)
from segqueue.segmentation import SegmentationStats, SeriesAccumulation

UNIT = LinkParams(capacity=1.0, header=0.0)
WEB_LINK = LinkParams(capacity=54e6 / 8, header=38.0)


def md1_wait(lam, service):
    rho = lam * service
    return rho * service / (2 * (1 - rho))


def fake_stats(ell_p, sigma_p2=0.0, EX=1.0, EX2=1.0):
    return SegmentationStats(ell_d=ell_p, pi_E=1 / EX, ell_p=ell_p, sigma_p2=sigma_p2, EX=EX, EX2=EX2,
                             series=SeriesAccumulation(0, EX, (EX2 - EX) / 2, ell_p * EX))


def test_service_moments_deterministic_service():
    assert service_moments(fake_stats(100.0), UNIT) == (100.0, 10000.0)


def test_service_moments_batch_enumeration():
    es, es2 = service_moments(segmentation_stats(Deterministic(100), 40), UNIT)
    assert es == pytest.approx(np.mean([40, 40, 20]))
    assert es2 == pytest.approx(np.mean(np.square([40, 40, 20])))
    assert es2 == pytest.approx(1200)


def test_service_moments_web_link():
    st_ = segmentation_stats(Lognormal(6.34, 2.07), 1500)
    es, _ = service_moments(st_, WEB_LINK)
    assert WEB_LINK.capacity == 6_750_000
    assert es == pytest.approx((st_.ell_p + 38) / 6.75e6, rel=1e-15)


def test_offered_load_examples():
    assert offered_load(0.005, fake_stats(1.0, EX=3, EX2=9), 100 / 3) == pytest.approx(0.5)
    assert offered_load(0.01, fake_stats(100.0), 100) == pytest.approx(1.0)
    assert offered_load(1e-12, fake_stats(100.0), 100) < 1e-9


def test_md1_reduction():
    st_ = segmentation_stats(Deterministic(100), 100)
    es, es2 = service_moments(st_, UNIT)
    w1, w2, w = waiting_time(0.005, st_, es, es2, 100, UNIT)
    assert (w1, w2, w) == pytest.approx((50.0, 0.0, 50.0), abs=1e-12)
    assert md1_wait(0.005, 100) == 50
    assert w == pytest.approx(mg1_waiting_approx(0.005, es, es2), rel=1e-12)


def test_batch_case_closed_form():
    st_ = segmentation_stats(Deterministic(100), 40)
    es, es2 = service_moments(st_, UNIT)
    w1, w2, w = waiting_time(0.005, st_, es, es2, 40, UNIT)
    expected_w1 = 0.005 * (3 * 1200 + 6 * (100 / 3) ** 2) / (2 * 0.5)
    assert w1 == pytest.approx(expected_w1, abs=1e-9)
    assert w1 == pytest.approx(51.333333333, abs=1e-8)
    assert w2 == 80.0
    assert w == pytest.approx(131.3333333333, abs=1e-9)


def test_response_time_composition():
    m = response_time(Scenario(Deterministic(100), 40, UNIT, 0.005))
    assert m.ER == pytest.approx(164.6666666667, abs=1e-9)
    assert m.EW == m.EW1 + m.EW2 and m.ER == m.ES + m.EW
    assert response_time(Scenario(Deterministic(100), 100, UNIT, 0.005)).ER == pytest.approx(150, abs=1e-12)


def test_empty_system_limit():
    m = response_time(Scenario(Deterministic(100), 100, UNIT, 1e-12))
    assert m.EW < 1e-8


def test_unstable_rejected():
    with pytest.raises(UnstableError):
        response_time(Scenario(Deterministic(100), 100, UNIT, 0.01))
    with pytest.raises(UnstableError):
        response_time(Scenario(Deterministic(100), 40, UNIT, 0.02))
    with pytest.raises(UnstableError):
        mg1_waiting_approx(0.02, 100, 1e4)


def test_high_load_flag():
    assert response_time(Scenario(Deterministic(100), 100, UNIT, 0.0096)).high_load
    assert not response_time(Scenario(Deterministic(100), 100, UNIT, 0.005)).high_load


def test_mg1_approx_examples():
    assert mg1_waiting_approx(0.005, 100, 10000) == pytest.approx(50)
    assert mg1_waiting_approx(0.002, 30, 900) == pytest.approx(0.002 * 900 / (2 * (1 - 0.06)))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(1.0, 1000.0), min_size=1, max_size=20), st.floats(0.01, 0.95), st.floats(0, 50))
def test_exact_mg1_reduction_without_segmentation(values, load, header):
    dist = Empirical(np.array(values))
    ell_d = 1000.0
    link = LinkParams(1e3, header)
    st_ = segmentation_stats(dist, ell_d)
    es, es2 = service_moments(st_, link)
    lam = load / es
    m = response_time(Scenario(dist, ell_d, link, lam), stats=st_)
    assert m.EW2 == 0
    assert m.EW == pytest.approx(mg1_waiting_approx(lam, es, es2), rel=1e-12)
    # without segmentation the batch workload is the packet itself
    assert batch_workload_wait(Scenario(dist, ell_d, link, lam), st_) == pytest.approx(m.EW1, rel=1e-12)


def test_response_increases_with_load():
    d = Lognormal(6.34, 2.07)
    st_ = segmentation_stats(d, 1500)
    ers = [response_time(Scenario(d, 1500, WEB_LINK, lam), stats=st_).ER for lam in np.linspace(10, 1300, 40)]
    assert np.all(np.diff(ers) > 0)


@pytest.mark.parametrize("dist,ell_d", [(Exponential(1000), 300), (Lognormal(6.34, 2.07), 1500)])
def test_capacity_scaling(dist, ell_d):
    link = LinkParams(1e6, 38)
    fast = LinkParams(2e6, 38)
    st_ = segmentation_stats(dist, ell_d)
    m1 = response_time(Scenario(dist, ell_d, link, 100.0), stats=st_)
    m2 = response_time(Scenario(dist, ell_d, fast, 200.0), stats=st_)
    assert m2.ES == pytest.approx(m1.ES / 2, rel=1e-14)
    assert m2.ES2 == pytest.approx(m1.ES2 / 4, rel=1e-14)
    assert m2.a == pytest.approx(m1.a, rel=1e-14)
    for name in ("EW1", "EW2", "EW", "ER"):
        assert getattr(m2, name) == pytest.approx(getattr(m1, name) / 2, rel=1e-12)


def test_service_cv_shrinks_with_payload():
    d = Lognormal(6.34, 2.07)
    cv = [service_cv(*service_moments(segmentation_stats(d, ld), WEB_LINK)) for ld in (100, 1e4, 1e6)]
    assert cv[0] < cv[1] < cv[2]


def test_batch_workload_wait_deterministic():
    sc = Scenario(Deterministic(100), 40, UNIT, 0.005)
    st_ = segmentation_stats(sc.dist, 40)
    # every batch carries exactly 100 bytes: M/D/1 with rho = 0.5
    assert batch_workload_wait(sc, st_) == pytest.approx(md1_wait(0.005, 100), rel=1e-12)


def test_invalid_parameters():
    with pytest.raises(ValueError):
        LinkParams(0, 1)
    with pytest.raises(ValueError):
        LinkParams(1, -1)
    with pytest.raises(ValueError):
        Scenario(Deterministic(1), 1, UNIT, 0)
