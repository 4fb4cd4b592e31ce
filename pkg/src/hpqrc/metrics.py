"""Evaluation metrics, significance tests and timing measurement."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import rankdata

from .errors import DegenerateError, DimensionError, ParameterError, SizingError

ACCURACY_DEFINITION = "accuracy_pct = 100 * max(0, 1 - NMSE)"


@dataclass
class MetricReport:
    nmse: float
    accuracy_pct: float
    n: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class StatResult:
    statistic: float
    p_value: float
    df: float
    ci_low: float
    ci_high: float

    def to_dict(self) -> dict:
        return asdict(self)


def _pair(y, yhat):
    y = np.asarray(y, dtype=float).reshape(-1)
    yhat = np.asarray(yhat, dtype=float).reshape(-1)
    if len(y) != len(yhat):
        raise DimensionError(f"length mismatch: {len(y)} targets vs {len(yhat)} predictions")
    if len(y) == 0:
        raise SizingError("empty target vector")
    return y, yhat


def nmse(y, yhat) -> float:
    """Residual sum of squares over total sum of squares about the target mean."""
    y, yhat = _pair(y, yhat)
    dev = y - y.mean()
    sst = float(dev @ dev)
    if sst == 0:
        raise DegenerateError("targets are constant; NMSE is undefined")
    r = y - yhat
    return float(r @ r) / sst


def accuracy_pct(y, yhat) -> float:
    return 100.0 * max(0.0, 1.0 - nmse(y, yhat))


def metric_report(y, yhat) -> MetricReport:
    e = nmse(y, yhat)
    return MetricReport(e, 100.0 * max(0.0, 1.0 - e), len(np.asarray(y).reshape(-1)))


def roi(gain: float, baseline: float) -> float:
    """Relative improvement of ``gain`` over ``baseline`` in percent."""
    if baseline == 0:
        raise ParameterError("ROI baseline must be non-zero")
    return (gain - baseline) / baseline * 100.0


def roi_time(baseline_time: float, new_time: float) -> float:
    """Latency reduction of ``new_time`` relative to ``baseline_time`` in percent."""
    if baseline_time == 0:
        raise ParameterError("ROI baseline must be non-zero")
    return (baseline_time - new_time) / baseline_time * 100.0


def auc(scores, labels) -> float:
    """Mann-Whitney AUC with midranks for ties."""
    s = np.asarray(scores, dtype=float).reshape(-1)
    lab = np.asarray(labels).reshape(-1)
    if len(s) != len(lab):
        raise DimensionError("scores and labels differ in length")
    pos = lab.astype(bool)
    n_pos = int(pos.sum())
    n_neg = len(lab) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ParameterError("AUC needs both positive and negative labels")
    ranks = rankdata(s, method="average")
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


# -- t distribution --------------------------------------------------------

def _betacf(a: float, b: float, x: float, max_iter: int = 500, eps: float = 1e-16) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = tiny if abs(d) < tiny else d
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta ``I_x(a, b)``."""
    if not 0.0 <= x <= 1.0:
        raise ParameterError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, 1.0 - x) / b


def t_sf_two_sided(t: float, df: float) -> float:
    """``P(|T| >= |t|)`` for Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ParameterError("df must be positive")
    if math.isinf(t):
        return 0.0
    return betainc_reg(df / 2.0, 0.5, df / (df + t * t))


def paired_t_test(a, b) -> StatResult:
    """Two-sided paired t-test on ``a - b`` with a 95% CI of the mean difference."""
    a, b = _pair(a, b)
    n = len(a)
    if n < 2:
        raise SizingError("paired t-test needs at least two pairs")
    d = a - b
    sd = float(np.std(d, ddof=1))
    if sd == 0:
        raise DegenerateError("paired differences have zero variance; t is undefined")
    mean = float(d.mean())
    se = sd / math.sqrt(n)
    t = mean / se
    df = n - 1
    crit = t_critical(0.05, df)
    return StatResult(t, t_sf_two_sided(t, df), float(df), mean - crit * se, mean + crit * se)


def t_critical(alpha: float, df: float) -> float:
    """Two-sided critical value by bisection on the survival function."""
    lo, hi = 0.0, 1.0
    while t_sf_two_sided(hi, df) > alpha:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t_sf_two_sided(mid, df) > alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def coeff_variation(xs) -> float:
    x = np.asarray(xs, dtype=float).reshape(-1)
    if len(x) < 2:
        raise SizingError("coefficient of variation needs at least two values")
    mean = float(x.mean())
    if mean == 0:
        raise DegenerateError("coefficient of variation undefined for zero mean")
    return float(np.std(x, ddof=1)) / mean


def bootstrap_ci(xs, n_resamples: int = 1000, level: float = 0.95, seed: int = 42) -> StatResult:
    """Percentile bootstrap CI of the mean.

    ``p_value`` is the two-sided bootstrap probability that the mean is on
    the other side of zero.
    """
    x = np.asarray(xs, dtype=float).reshape(-1)
    if len(x) < 2:
        raise SizingError("bootstrap needs at least two values")
    if not 0 < level < 1:
        raise ParameterError("level must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(x), size=(n_resamples, len(x)))
    means = x[idx].mean(axis=1)
    tail = (1.0 - level) / 2.0
    lo, hi = np.quantile(means, [tail, 1.0 - tail])
    mean = float(x.mean())
    # Constant data: pin the interval to the value itself despite rounding in the mean.
    if np.ptp(x) == 0:
        lo = hi = x[0]
    p = min(1.0, 2.0 * min(np.mean(means <= 0), np.mean(means >= 0)))
    return StatResult(mean, float(p), float(len(x) - 1), float(lo), float(hi))


@dataclass
class ThroughputReport:
    n_points: int
    points_per_sec: float
    latency_ms: float
    batch_mean_s: float
    batch_std_s: float
    batch_cv: float
    batch_times_s: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("batch_times_s")
        return d


def measure_throughput(
    runner: Callable[[np.ndarray], object],
    n_points: int,
    batch_size: int = 1000,
    warmup_points: int = 100,
    inputs: np.ndarray | None = None,
) -> ThroughputReport:
    """Time ``runner`` over ``n_points`` inputs in batches on the calling thread.

    ``runner`` receives one batch of inputs per call. The warm-up batch is not
    timed. Timings are not reproducible and are kept out of determinism checks.
    """
    if n_points < 100:
        raise SizingError("throughput measurement needs at least 100 points")
    if inputs is None:
        inputs = np.linspace(0.0, 1.0, n_points)
    runner(inputs[:warmup_points])
    times = []
    for start in range(0, n_points, batch_size):
        chunk = inputs[start:start + batch_size]
        t0 = time.perf_counter()
        runner(chunk)
        times.append(time.perf_counter() - t0)
    total = sum(times)
    t = np.asarray(times)
    # Normalize by batch length so a short final batch does not skew the spread.
    sizes = np.array([min(batch_size, n_points - s) for s in range(0, n_points, batch_size)])
    per_point = t / sizes
    cv = float(np.std(per_point, ddof=1) / np.mean(per_point)) if len(t) > 1 else 0.0
    return ThroughputReport(
        n_points=n_points,
        points_per_sec=n_points / total if total > 0 else math.inf,
        latency_ms=1e3 * total / n_points,
        batch_mean_s=float(t.mean()),
        batch_std_s=float(t.std(ddof=1)) if len(t) > 1 else 0.0,
        batch_cv=cv,
        batch_times_s=times,
    )
