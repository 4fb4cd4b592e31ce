import math
import time

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, stats

from hpqrc.errors import DegenerateError, DimensionError, ParameterError, SizingError
from hpqrc.metrics import (
    ACCURACY_DEFINITION,
    accuracy_pct,
    auc,
    betainc_reg,
    bootstrap_ci,
    coeff_variation,
    measure_throughput,
    metric_report,
    nmse,
    paired_t_test,
    roi,
    roi_time,
    t_critical,
    t_sf_two_sided,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)


def t_two_sided_quad(t, df):
    """2 * integral of the Student-t density from |t| to infinity."""
    log_c = math.lgamma((df + 1) / 2) - math.lgamma(df / 2) - 0.5 * math.log(df * math.pi)
    dens = lambda u: math.exp(log_c - (df + 1) / 2 * math.log1p(u * u / df))  # noqa: E731
    val, _ = integrate.quad(dens, abs(t), math.inf, epsabs=1e-14, epsrel=1e-13, limit=200)
    return 2 * val


# nmse / accuracy

def test_nmse_examples():
    y = np.array([1.0, 2.0, 3.0])
    assert nmse(y, y) == 0.0
    assert nmse(y, np.full(3, 2.0)) == 1.0
    assert nmse(y, [1.0, 2.0, 4.0]) == 0.5


@given(st.lists(finite, min_size=2, max_size=50))
def test_mean_predictor_is_exactly_one(values):
    y = np.array(values)
    if np.ptp(y) < 1e-6:
        return
    assert nmse(y, np.full_like(y, y.mean())) == 1.0


@given(st.lists(st.tuples(finite, finite), min_size=2, max_size=50))
def test_nmse_nonnegative_and_accuracy_in_range(pairs):
    y, yhat = map(np.array, zip(*pairs))
    if np.ptp(y) < 1e-6:
        return
    e = nmse(y, yhat)
    a = accuracy_pct(y, yhat)
    assert e >= 0 and 0 <= a <= 100
    assert a == pytest.approx(100 * max(0.0, 1 - e))


def test_mean_predictor_exact_on_dyadic_data():
    y = np.array([0.0, 1.0, 2.0, 5.0])
    assert nmse(y, np.full(4, 2.0)) == 1.0


def test_accuracy_examples_and_monotonicity():
    y = np.array([1.0, 2.0, 3.0])
    assert accuracy_pct(y, y) == 100.0
    assert accuracy_pct(y, np.full(3, 2.0)) == 0.0
    # nmse 0.05 -> 95: residual SS must be 0.1 against total SS 2.
    d = math.sqrt(0.1)
    assert accuracy_pct(y, [1.0 + d, 2.0, 3.0]) == pytest.approx(95.0, abs=1e-12)
    accs = [accuracy_pct(y, y + k * np.array([1, -1, 1])) for k in (0.0, 0.1, 0.3, 0.6, 2.0)]
    assert accs == sorted(accs, reverse=True)
    assert "1 - NMSE" in ACCURACY_DEFINITION


def test_metric_errors():
    with pytest.raises(DegenerateError):
        nmse([2.0, 2.0], [1.0, 2.0])
    with pytest.raises(DimensionError):
        nmse([1.0, 2.0], [1.0])
    with pytest.raises(SizingError):
        nmse([], [])
    r = metric_report([1.0, 2.0, 3.0], [1.0, 2.0, 4.0])
    assert (r.nmse, r.accuracy_pct, r.n) == (0.5, 50.0, 3)


# ROI

def test_roi_worked_values():
    assert roi(92.37, 78.12) == pytest.approx(18.24, abs=0.01)
    assert roi_time(49.60, 21.8) == pytest.approx(56.05, abs=0.05)
    assert 56.0 <= roi_time(49.60, 21.8) <= 56.1
    assert roi(5.0, 5.0) == 0.0
    with pytest.raises(ParameterError):
        roi(1.0, 0.0)


@given(st.floats(0.1, 1e3), st.floats(0.1, 1e3), st.floats(1e-3, 1e3))
def test_roi_scale_invariance(g, b, c):
    assert roi(c * g, c * b) == pytest.approx(roi(g, b), rel=1e-9, abs=1e-9)


# AUC

def test_auc_examples(rng):
    assert auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert auc([0.1, 0.2, 0.8, 0.9], [1, 1, 0, 0]) == 0.0
    assert auc(np.ones(10), [0, 1] * 5) == 0.5
    n = 20_000
    a = auc(rng.normal(size=n), rng.integers(0, 2, n))
    assert abs(a - 0.5) <= 3 / math.sqrt(n)
    with pytest.raises(ParameterError):
        auc([1.0, 2.0], [1, 1])


def test_auc_matches_pairwise_count(rng):
    s = rng.integers(0, 5, 60).astype(float)
    lab = rng.integers(0, 2, 60)
    pos, neg = s[lab == 1], s[lab == 0]
    expected = np.mean([(p > q) + 0.5 * (p == q) for p in pos for q in neg])
    assert auc(s, lab) == pytest.approx(expected, abs=1e-12)


@given(st.integers(0, 2**31 - 1))
def test_auc_invariant_under_monotone_transform(seed):
    r = np.random.default_rng(seed)
    s = r.normal(size=40)
    lab = np.r_[0, 1, r.integers(0, 2, 38)]
    assert auc(np.exp(s), lab) == pytest.approx(auc(s, lab), abs=1e-12)
    assert auc(s**3 + 2 * s, lab) == pytest.approx(auc(s, lab), abs=1e-12)


# t distribution and paired test

@pytest.mark.parametrize("df", [1, 2, 5, 9, 30, 200])
@pytest.mark.parametrize("t", [0.0, 0.3, 1.0, 2.262, 4.0, 12.0])
def test_t_survival_matches_quadrature(t, df):
    assert abs(t_sf_two_sided(t, df) - t_two_sided_quad(t, df)) < 1e-10


def test_t_survival_matches_scipy():
    for df in (1, 3, 9, 49):
        for t in (0.5, 2.0, 8.21):
            assert t_sf_two_sided(t, df) == pytest.approx(2 * stats.t.sf(t, df), rel=1e-10, abs=1e-14)


def test_table_critical_value():
    assert t_two_sided_quad(2.262, 9) == pytest.approx(0.05, abs=1e-3)
    assert t_sf_two_sided(2.262, 9) == pytest.approx(0.05, abs=1e-3)
    assert t_critical(0.05, 9) == pytest.approx(2.262, abs=1e-3)


def test_betainc_against_scipy():
    from scipy import special

    for a, b, x in [(0.5, 0.5, 0.3), (4.5, 0.5, 0.9), (2.0, 7.0, 0.05), (30, 0.5, 0.99)]:
        assert betainc_reg(a, b, x) == pytest.approx(special.betainc(a, b, x), rel=1e-12, abs=1e-15)


def test_paired_t_examples():
    with pytest.raises(DegenerateError):
        paired_t_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    d = np.ones(4) + np.array([1e-6, -1e-6, 2e-6, -2e-6])
    r = paired_t_test(d, np.zeros(4))
    assert r.statistic > 1e5 and r.p_value < 1e-10
    a = np.array([5.1, 4.9, 6.0, 5.5, 5.8, 6.1, 4.7, 5.3, 5.9, 6.2])
    b = np.array([4.8, 4.7, 5.1, 5.0, 5.6, 5.2, 4.9, 4.8, 5.4, 5.5])
    ref = stats.ttest_rel(a, b)
    r = paired_t_test(a, b)
    assert r.statistic == pytest.approx(ref.statistic, rel=1e-12)
    assert r.p_value == pytest.approx(ref.pvalue, rel=1e-9)
    assert r.df == 9 and r.ci_low <= (a - b).mean() <= r.ci_high


@given(st.integers(0, 2**31 - 1))
def test_paired_t_is_antisymmetric(seed):
    r = np.random.default_rng(seed)
    a, b = r.normal(size=8), r.normal(size=8)
    assert paired_t_test(a, b).statistic == pytest.approx(-paired_t_test(b, a).statistic, rel=1e-12)
    assert 0 <= paired_t_test(a, b).p_value <= 1


# coefficient of variation

def test_coeff_variation_examples():
    assert coeff_variation([3.0, 3.0, 3.0]) == 0.0
    assert coeff_variation([9.0, 10.0, 11.0]) == pytest.approx(0.1, abs=1e-15)
    with pytest.raises(DegenerateError):
        coeff_variation([-1.0, 1.0])


@given(st.lists(st.floats(0.1, 100), min_size=2, max_size=20), st.floats(1e-3, 1e3))
def test_coeff_variation_scale_invariant(xs, c):
    assert coeff_variation(np.array(xs) * c) == pytest.approx(coeff_variation(xs), rel=1e-9, abs=1e-12)


# bootstrap

def test_bootstrap_examples(rng):
    c = bootstrap_ci(np.full(10, 0.1))
    assert c.ci_low == c.ci_high == 0.1
    x = rng.normal(size=30)
    a, b = bootstrap_ci(x, seed=3), bootstrap_ci(x, seed=3)
    assert (a.ci_low, a.ci_high) == (b.ci_low, b.ci_high)
    assert a.ci_low <= a.statistic <= a.ci_high


def test_bootstrap_width_for_standard_normal():
    widths = []
    for seed in range(20):
        x = np.random.default_rng(seed).normal(size=100)
        r = bootstrap_ci(x, 1000, seed=seed)
        widths.append(r.ci_high - r.ci_low)
    assert np.mean(widths) == pytest.approx(2 * 1.96 / 10, rel=0.25)


# throughput

def test_identity_runner_throughput_and_report():
    rep = measure_throughput(lambda chunk: chunk, 100_000)
    assert rep.points_per_sec > 1e6
    d = rep.to_dict()
    assert {"points_per_sec", "latency_ms", "batch_mean_s", "batch_std_s", "batch_cv"} <= set(d)
    assert rep.batch_cv >= 0 and len(rep.batch_times_s) == 100


def test_throughput_timings_vary_and_size_guard():
    def runner(chunk):
        time.sleep(1e-5 * len(chunk) / 100)

    a = measure_throughput(runner, 1000, batch_size=100)
    b = measure_throughput(runner, 1000, batch_size=100)
    assert a.batch_times_s != b.batch_times_s
    with pytest.raises(SizingError):
        measure_throughput(runner, 50)
