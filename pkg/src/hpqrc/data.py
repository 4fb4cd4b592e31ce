"""Chaotic benchmark series, CSV ingestion, normalization, noise and windowing."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DegenerateError, DivergenceError, IngestionError, ParameterError, SizingError

DEFAULT_SEED = 42


@dataclass
class TimeSeries:
    """Sampled signal of shape ``(n,)`` or ``(n, 3)``."""

    values: np.ndarray
    dt: float = 1.0
    name: str = "series"
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim not in (1, 2) or len(self.values) < 1:
            raise ParameterError("series must be a non-empty 1-D or 2-D array")
        if not np.all(np.isfinite(self.values)):
            raise ParameterError(f"series {self.name!r} contains non-finite values")
        if not self.dt > 0:
            raise ParameterError(f"dt must be positive, got {self.dt}")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def dim(self) -> int:
        return 1 if self.values.ndim == 1 else self.values.shape[1]

    def component(self, index: int) -> "TimeSeries":
        """Select one coordinate of a multi-dimensional series."""
        if self.values.ndim == 1:
            if index != 0:
                raise ParameterError("1-D series only has component 0")
            return self
        return TimeSeries(self.values[:, index].copy(), self.dt, f"{self.name}[{index}]", self.seed, dict(self.meta))

    def subsample(self, every: int) -> "TimeSeries":
        return TimeSeries(self.values[::every].copy(), self.dt * every, self.name, self.seed, dict(self.meta))


@dataclass(frozen=True)
class MackeyGlassParams:
    a: float = 0.2
    b: float = 0.1
    n: float = 10.0
    tau: float = 17.0
    dt: float = 0.1
    history: float = 1.2

    def validate(self) -> int:
        """Check the parameters and return the delay length in steps."""
        if not (self.tau > 0 and self.dt > 0):
            raise ParameterError("tau and dt must be positive")
        ratio = self.tau / self.dt
        steps = int(round(ratio))
        if steps < 1 or abs(ratio - steps) > 1e-9 * max(1.0, ratio):
            raise ParameterError(f"tau/dt must be a positive integer, got {ratio}")
        for name in ("a", "b", "n", "history"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")
        return steps


@dataclass(frozen=True)
class LorenzParams:
    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0
    dt: float = 0.01
    init: tuple[float, float, float] = (1.0, 1.0, 1.0)


@dataclass(frozen=True)
class NormParams:
    """Affine map from ``[src_min, src_max]`` onto ``[dst_lo, dst_hi]``."""

    src_min: float
    src_max: float
    dst_lo: float = 0.0
    dst_hi: float = 1.0

    def __post_init__(self):
        if not self.src_max > self.src_min:
            raise DegenerateError("normalization source range is empty")
        if not self.dst_hi > self.dst_lo:
            raise ParameterError("normalization target range is empty")

    @property
    def scale(self) -> float:
        return (self.dst_hi - self.dst_lo) / (self.src_max - self.src_min)

    def apply(self, x):
        return self.dst_lo + (np.asarray(x, dtype=float) - self.src_min) * self.scale

    def invert(self, y):
        return self.src_min + (np.asarray(y, dtype=float) - self.dst_lo) / self.scale


@dataclass
class SupervisedSet:
    """Input/target pairs; ``prefix`` holds the washout inputs preceding the first pair."""

    inputs: np.ndarray
    targets: np.ndarray
    horizon: int = 1
    washout: int = 0
    split: float = 0.8
    prefix: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=float)
        self.targets = np.asarray(self.targets, dtype=float)
        self.prefix = np.asarray(self.prefix, dtype=float)
        if len(self.inputs) != len(self.targets):
            raise SizingError("inputs and targets differ in length")
        if not 0 < self.split < 1:
            raise ParameterError("split must lie in (0, 1)")
        if self.washout < 0:
            raise ParameterError("washout must be non-negative")

    def __len__(self) -> int:
        return len(self.inputs)


def gen_mackey_glass(params: MackeyGlassParams, n_steps: int) -> TimeSeries:
    """Integrate the Mackey-Glass delay equation with fixed-step RK4.

    The delayed term at RK4 half steps is linearly interpolated from the
    stored trajectory; ``tau/dt`` is an integer so the interpolation is the
    mean of two neighbouring samples. ``values[0]`` is the state at ``t=0``
    and the history is constant for ``t < 0``.
    """
    if n_steps < 1:
        raise ParameterError("n_steps must be >= 1")
    delay = params.validate()
    a, b, n, dt = params.a, params.b, params.n, params.dt

    def f(x, xd):
        return a * xd / (1.0 + xd**n) - b * x

    buf = [float(params.history)] * (delay + n_steps)
    x = buf[delay]
    for i in range(n_steps - 1):
        d0 = buf[i]
        d1 = buf[i + 1]
        dm = 0.5 * (d0 + d1)
        k1 = f(x, d0)
        k2 = f(x + 0.5 * dt * k1, dm)
        k3 = f(x + 0.5 * dt * k2, dm)
        k4 = f(x + dt * k3, d1)
        x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not math.isfinite(x):
            raise DivergenceError(f"Mackey-Glass state became non-finite at step {i + 1}", step=i + 1)
        buf[delay + i + 1] = x
    meta = {"generator": "mackey_glass", "a": a, "b": b, "n": n, "tau": params.tau, "dt": dt, "history": params.history}
    return TimeSeries(np.array(buf[delay:]), dt=dt, name="mackey_glass", meta=meta)


def gen_lorenz(params: LorenzParams, n_steps: int) -> TimeSeries:
    """RK4 integration of the Lorenz-63 system; returns an ``(n_steps, 3)`` series."""
    if n_steps < 1:
        raise ParameterError("n_steps must be >= 1")
    s, r, beta, dt = params.sigma, params.rho, params.beta, params.dt
    if not dt > 0 or not all(math.isfinite(v) for v in (s, r, beta)):
        raise ParameterError("Lorenz parameters must be finite with dt > 0")

    def f(x, y, z):
        return s * (y - x), x * (r - z) - y, x * y - beta * z

    out = np.empty((n_steps, 3))
    x, y, z = (float(v) for v in params.init)
    out[0] = x, y, z
    h = 0.5 * dt
    for i in range(1, n_steps):
        a1, b1, c1 = f(x, y, z)
        a2, b2, c2 = f(x + h * a1, y + h * b1, z + h * c1)
        a3, b3, c3 = f(x + h * a2, y + h * b2, z + h * c2)
        a4, b4, c4 = f(x + dt * a3, y + dt * b3, z + dt * c3)
        x += dt / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
        y += dt / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4)
        z += dt / 6.0 * (c1 + 2 * c2 + 2 * c3 + c4)
        if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(z)):
            raise DivergenceError(f"Lorenz state became non-finite at step {i}", step=i)
        out[i] = x, y, z
    meta = {"generator": "lorenz", "sigma": s, "rho": r, "beta": beta, "dt": dt, "init": list(params.init)}
    return TimeSeries(out, dt=dt, name="lorenz", meta=meta)


def load_csv(path: str | Path, column: str | int, dt: float = 1.0) -> TimeSeries:
    """Read one numeric column from a headed UTF-8 CSV file.

    Lines starting with ``#`` before the header are skipped. Data rows are
    numbered from 1 in error messages.
    """
    path = Path(path)
    if not path.is_file():
        raise IngestionError(f"{path}: no such file")
    with path.open(newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None:
        raise IngestionError(f"{path}: missing header row")
    header = [h.strip() for h in header]
    if isinstance(column, int):
        if not 0 <= column < len(header):
            raise IngestionError(f"{path}: column index {column} out of range ({len(header)} columns)")
        col = column
    else:
        if column not in header:
            raise IngestionError(f"{path}: column {column!r} not found in header {header}")
        col = header.index(column)

    values = []
    for row_no, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            v = float(row[col])
        except (IndexError, ValueError):
            raise IngestionError(f"{path}: row {row_no}: cannot parse column {header[col]!r}") from None
        if not math.isfinite(v):
            raise IngestionError(f"{path}: row {row_no}: non-finite value {row[col]!r} in column {header[col]!r}")
        values.append(v)
    if not values:
        raise IngestionError(f"{path}: no rows")
    return TimeSeries(np.array(values), dt=dt, name=f"{path.stem}:{header[col]}", meta={"source": str(path)})


def write_csv(series: TimeSeries, path: str | Path, comments: Sequence[str] = ()) -> Path:
    """Write ``index,value`` (or ``index,x,y,z``) rows with optional ``#`` comment lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = ["value"] if series.dim == 1 else (["x", "y", "z"] if series.dim == 3 else [f"v{i}" for i in range(series.dim)])
    vals = series.values.reshape(len(series), -1)
    with path.open("w", newline="", encoding="utf-8") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", *cols])
        for i, row in enumerate(vals):
            w.writerow([i, *(repr(float(v)) for v in row)])
    return path


def normalize(series: TimeSeries, lo: float = 0.0, hi: float = 1.0) -> tuple[TimeSeries, NormParams]:
    """Affinely map the observed ``[min, max]`` of ``series`` onto ``[lo, hi]``."""
    vmin = float(np.min(series.values))
    vmax = float(np.max(series.values))
    if not vmax > vmin:
        raise DegenerateError(f"cannot normalize constant series {series.name!r}")
    params = NormParams(vmin, vmax, float(lo), float(hi))
    out = params.apply(series.values)
    # Pin the extremes exactly; the affine map can be off by an ulp.
    out = np.clip(out, lo, hi)
    return TimeSeries(out, series.dt, series.name, series.seed, dict(series.meta)), params


def add_gaussian_noise(series: TimeSeries, sigma: float, seed: int = DEFAULT_SEED) -> TimeSeries:
    """Normalize to [0, 1], add N(0, sigma^2) noise, and renormalize to [0, 1]."""
    if not sigma >= 0:
        raise ParameterError(f"sigma must be >= 0, got {sigma}")
    base, _ = normalize(series, 0.0, 1.0)
    if sigma == 0:
        return base
    rng = np.random.default_rng(seed)
    noisy = base.values + rng.normal(0.0, sigma, size=base.values.shape)
    out, _ = normalize(TimeSeries(noisy, series.dt, series.name), 0.0, 1.0)
    meta = dict(series.meta, noise_sigma=sigma, noise_seed=seed)
    return TimeSeries(out.values, series.dt, series.name, seed, meta)


def snr_db(clean: np.ndarray, noisy: np.ndarray) -> float:
    """Peak-to-peak signal over noise standard deviation, in decibels."""
    clean = np.asarray(clean, dtype=float)
    noise = np.asarray(noisy, dtype=float) - clean
    return 20.0 * math.log10(float(np.ptp(clean)) / float(np.std(noise)))


def make_supervised(
    series: TimeSeries,
    horizon: int = 1,
    washout: int = 0,
    split: float = 0.8,
    target_series: TimeSeries | None = None,
) -> tuple[SupervisedSet, SupervisedSet]:
    """Chronological train/test pairs mapping ``x[t]`` to ``y[t + horizon]``.

    Pairs start at index ``washout``; the skipped inputs are kept in the
    training set's ``prefix`` so recurrent models can warm up on them.
    ``target_series`` defaults to ``series`` itself.
    """
    x = np.asarray(series.values, dtype=float)
    y = x if target_series is None else np.asarray(target_series.values, dtype=float)
    if x.ndim != 1 or y.ndim != 1:
        raise ParameterError("make_supervised needs 1-D series; select a component first")
    if len(y) != len(x):
        raise SizingError("target series length differs from input series")
    if horizon < 1:
        raise ParameterError("horizon must be >= 1")
    if not 0 < split < 1:
        raise ParameterError("split must lie in (0, 1)")
    if washout < 0:
        raise ParameterError("washout must be non-negative")
    if len(x) <= washout + horizon + 10:
        raise SizingError(f"series of length {len(x)} too short for washout={washout}, horizon={horizon}")
    n_pairs = len(x) - washout - horizon
    n_train = int(split * n_pairs)
    if n_train < 1 or n_train >= n_pairs:
        raise SizingError("split leaves an empty train or test set")
    inputs = x[washout:washout + n_pairs]
    targets = y[washout + horizon:washout + horizon + n_pairs]
    train = SupervisedSet(inputs[:n_train], targets[:n_train], horizon, washout, split, prefix=x[:washout])
    test = SupervisedSet(inputs[n_train:], targets[n_train:], horizon, washout, split)
    return train, test
