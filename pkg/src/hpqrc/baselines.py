"""Comparison models: echo state network, quantum-only reservoir, AR(p) with AIC."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import sparse

from .errors import ConfigurationError, DegenerateError, ParameterError, SizingError
from .pipeline import _round
from .quantum import MAX_QUBITS, QuantumConfig, QuantumReservoir


@dataclass(frozen=True)
class EsnConfig:
    n_nodes: int = 500
    spectral_radius: float = 0.95
    leak_rate: float = 0.3
    input_scale: float = 0.5
    density: float = 0.05
    seed: int = 42

    def validate(self) -> "EsnConfig":
        if self.n_nodes < 1:
            raise ConfigurationError("n_nodes must be >= 1")
        if not self.spectral_radius > 0:
            raise ConfigurationError("spectral_radius must be positive")
        if not 0 < self.leak_rate <= 1:
            raise ConfigurationError("leak_rate must lie in (0, 1]")
        if not 0 < self.density <= 1:
            raise ConfigurationError("density must lie in (0, 1]")
        return self


ESN_CHAOS = EsnConfig(n_nodes=500)
ESN_DATASET = EsnConfig(n_nodes=1000)


def spectral_radius(w: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(w))))


@dataclass
class Esn:
    w: np.ndarray
    w_in: np.ndarray
    config: EsnConfig
    state: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.state is None:
            self.state = np.zeros(self.config.n_nodes)
        # The recurrent matrix is sparse; stepping with CSR halves the cost.
        self._w_csr = sparse.csr_matrix(self.w)

    def step(self, u: float) -> np.ndarray:
        a = self.config.leak_rate
        self.state = (1.0 - a) * self.state + a * np.tanh(self._w_csr @ self.state + self.w_in * u)
        return self.state


def esn_init(cfg: EsnConfig) -> Esn:
    """Draw a sparse recurrent matrix and rescale it to the target spectral radius."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_nodes
    w = rng.uniform(-1.0, 1.0, (n, n)) * (rng.random((n, n)) < cfg.density)
    rho = spectral_radius(w)
    if rho == 0:
        raise ConfigurationError(
            f"recurrent matrix has zero spectral radius (n_nodes={n}, density={cfg.density}); raise density"
        )
    w *= cfg.spectral_radius / rho
    w_in = rng.uniform(-cfg.input_scale, cfg.input_scale, n)
    return Esn(w, w_in, cfg)


def esn_run(inputs, cfg: EsnConfig, esn: Esn | None = None, washout: int = 0) -> tuple[np.ndarray, Esn]:
    """Drive the ESN with ``inputs``; rows are states after the first ``washout`` steps."""
    esn = esn or esn_init(cfg)
    inputs = np.asarray(inputs, dtype=float)
    rows = np.empty((max(len(inputs) - washout, 0), cfg.n_nodes))
    for t, u in enumerate(inputs):
        s = esn.step(float(u))
        if t >= washout:
            rows[t - washout] = s
    return rows, esn


def quantum_only_config(base: QuantumConfig | None = None, n_qubits: int = 8) -> QuantumConfig:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigurationError(f"n_qubits must be in [1, {MAX_QUBITS}]")
    return replace(base or QuantumConfig(), n_qubits=n_qubits)


def quantum_only_run(
    inputs,
    n_qubits: int = 8,
    config: QuantumConfig | None = None,
    encode_scale: float = math.pi,
    precision: str = "double",
    reservoir: QuantumReservoir | None = None,
) -> tuple[np.ndarray, QuantumReservoir]:
    """Quantum reservoir features alone for inputs in [0, 1]."""
    if reservoir is None:
        cfg = config if config is not None and config.n_qubits == n_qubits else quantum_only_config(config, n_qubits)
        reservoir = QuantumReservoir(cfg)
    inputs = np.asarray(inputs, dtype=float)
    rows = np.empty((len(inputs), reservoir.n_features))
    for t, x in enumerate(inputs):
        rows[t] = _round(reservoir.step(encode_scale * float(x)), precision)
    return rows, reservoir


@dataclass
class ArModel:
    order_p: int
    coeffs: np.ndarray
    intercept: float
    aic: float
    aic_by_order: dict = field(default_factory=dict)
    differenced: bool = False

    def predict_next(self, history) -> float:
        """One-step prediction from the most recent values (oldest first)."""
        h = np.asarray(history, dtype=float)
        if self.differenced:
            d = np.diff(h)
            step = self.intercept + (self.coeffs @ d[::-1][: self.order_p] if self.order_p else 0.0)
            return float(h[-1] + step)
        lags = h[::-1][: self.order_p]
        return float(self.intercept + (self.coeffs @ lags if self.order_p else 0.0))


def aic_value(rss: float, n_obs: int, order: int) -> float:
    return n_obs * math.log(rss / n_obs) + 2.0 * (order + 1)


def _lag_matrix(x: np.ndarray, p: int, start: int) -> np.ndarray:
    cols = [x[start - k:len(x) - k] for k in range(1, p + 1)]
    return np.column_stack([np.ones(len(x) - start), *cols])


def fit_ar_aic(series, p_max: int = 10, difference: bool = False) -> ArModel:
    """Least-squares AR(p) for ``p = 0..p_max`` on a common sample; keep the AIC minimizer."""
    x = np.asarray(getattr(series, "values", series), dtype=float).reshape(-1)
    if difference:
        x = np.diff(x)
    if p_max < 0:
        raise ParameterError("p_max must be >= 0")
    if len(x) <= p_max + 10:
        raise SizingError(f"series of length {len(x)} too short for p_max={p_max}")
    if np.ptp(x) == 0:
        raise DegenerateError("AR fit on a constant series is degenerate")
    y = x[p_max:]
    n_obs = len(y)
    best = None
    aics = {}
    for p in range(p_max + 1):
        A = _lag_matrix(x, p, p_max)
        beta, *_ = np.linalg.lstsq(A, y, rcond=None)
        r = y - A @ beta
        rss = float(r @ r)
        if rss <= 0:
            raise DegenerateError(f"AR({p}) fits exactly; AIC is undefined")
        aics[p] = aic_value(rss, n_obs, p)
        if best is None or aics[p] < best[0]:
            best = (aics[p], p, beta)
    aic, p, beta = best
    return ArModel(p, beta[1:].copy(), float(beta[0]), aic, aics, difference)


def ar_one_step(model: ArModel, history, inputs) -> np.ndarray:
    """Predict the value following each of ``inputs``, appended after ``history``."""
    buf = list(np.asarray(history, dtype=float))
    out = np.empty(len(inputs))
    need = max(model.order_p + (1 if model.differenced else 0), 1)
    for t, v in enumerate(np.asarray(inputs, dtype=float)):
        buf.append(float(v))
        out[t] = model.predict_next(buf[-need:])
    return out
