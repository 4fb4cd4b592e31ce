"""Hybrid photonic-quantum reservoir: encode, evolve, bridge, fuse, read out."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import SupervisedSet
from .errors import ConfigurationError, DimensionError, DivergenceError, ParameterError
from .photonic import PhotonicConfig, PhotonicReservoir, PhotonicState, PidController, control_error
from .quantum import QuantumConfig, QuantumReservoir
from .readout import ReadoutModel

TOPOLOGIES = ("parallel", "sequential")
PRECISIONS = ("single", "double")
FUSIONS = ("concat", "concat_plus_products")

# Recorded with every run; the simulation is step-synchronous so none of
# these are simulated.
HARDWARE_METADATA = {"bridge_latency_ms": 0.8, "modulator_rise_time_us": 5.0, "wavelength_nm": 1550.0}


@dataclass(frozen=True)
class PidConfig:
    kp: float = 0.45
    ki: float = 0.12
    kd: float = 0.08
    dt_s: float = 1e-3
    lpf_cutoff_hz: float = 50.0


@dataclass(frozen=True)
class HybridConfig:
    topology: str = "parallel"
    quantum: QuantumConfig = field(default_factory=QuantumConfig)
    photonic: PhotonicConfig = field(default_factory=PhotonicConfig)
    pid: PidConfig = field(default_factory=PidConfig)
    # Closed-loop phase control is opt-in; see the README for why.
    pid_enabled: bool = False
    bridge_precision: str = "single"
    fusion: str = "concat"
    # Inputs arrive in [0, 1]; the quantum encoder sees angle = encode_scale * x.
    encode_scale: float = math.pi

    def validate(self) -> "HybridConfig":
        if self.topology not in TOPOLOGIES:
            raise ConfigurationError(f"topology must be one of {TOPOLOGIES}, got {self.topology!r}")
        if self.bridge_precision not in PRECISIONS:
            raise ConfigurationError(f"bridge_precision must be one of {PRECISIONS}")
        if self.fusion not in FUSIONS:
            raise ConfigurationError(f"fusion must be one of {FUSIONS}")
        self.quantum.validate()
        self.photonic.validate()
        return self

    @property
    def n_features(self) -> int:
        nq = 2 * self.quantum.n_qubits - 1
        npf = self.photonic.n_virtual
        extra = min(nq, npf) if self.fusion == "concat_plus_products" else 0
        return nq + npf + extra

    def make_pid(self) -> PidController:
        lim = self.photonic.actuator_limit
        p = self.pid
        return PidController(p.kp, p.ki, p.kd, p.dt_s, p.lpf_cutoff_hz, -lim, lim)


@dataclass
class RunState:
    rho: np.ndarray
    photonic: PhotonicState
    pid: PidController
    last_error: float = 0.0


def _round(values: np.ndarray, precision: str) -> np.ndarray:
    if precision == "single":
        return values.astype(np.float32).astype(float)
    return values


def bridge_convert(qf, precision: str = "single") -> np.ndarray:
    """Map quantum expectations in [-1, 1] to photonic drive amplitudes in [0, 1]."""
    v = np.asarray(qf.as_vector() if hasattr(qf, "as_vector") else qf, dtype=float)
    return _round(np.clip(0.5 * (v + 1.0), 0.0, 1.0), precision)


def combine_features(qf, pf, fusion: str = "concat") -> np.ndarray:
    """Quantum block first, then photonic intensities, then optional products."""
    q = np.asarray(qf.as_vector() if hasattr(qf, "as_vector") else qf, dtype=float)
    p = np.asarray(pf, dtype=float)
    if q.size == 0 or p.size == 0:
        raise DimensionError("feature fusion needs non-empty quantum and photonic blocks")
    if fusion == "concat":
        return np.concatenate([q, p])
    if fusion == "concat_plus_products":
        m = min(q.size, p.size)
        return np.concatenate([q, p, q[:m] * p[:m]])
    raise ConfigurationError(f"unknown fusion {fusion!r}")


class HybridReservoir:
    """One live pipeline instance; advance it with :meth:`step`."""

    def __init__(self, cfg: HybridConfig, state: RunState | None = None):
        self.cfg = cfg.validate()
        if state is None:
            self.quantum = QuantumReservoir(cfg.quantum)
            self.photonic = PhotonicReservoir(cfg.photonic)
            self.pid = cfg.make_pid()
            self.last_error = 0.0
        else:
            self.quantum = QuantumReservoir(cfg.quantum, rho=state.rho)
            self.photonic = PhotonicReservoir(cfg.photonic, PhotonicState(state.photonic.fields.copy(), state.photonic.step_index))
            p = state.pid
            self.pid = PidController(p.kp, p.ki, p.kd, p.dt_s, p.lpf_cutoff_hz, p.out_min, p.out_max, p.integ, p.deriv_filtered, p.prev_error)
            self.last_error = state.last_error
        n_nodes = cfg.photonic.n_virtual
        m = 2 * cfg.quantum.n_qubits - 1
        self._bridge_index = np.arange(n_nodes) % m

    @property
    def n_features(self) -> int:
        return self.cfg.n_features

    def step(self, x: float, error: float | None = None) -> np.ndarray:
        """Feed one input in [0, 1]; ``error`` is the previous step's readout error."""
        cfg = self.cfg
        if error is not None:
            self.last_error = error
        phase = self.pid.update(self.last_error) if cfg.pid_enabled else 0.0
        qf = self.quantum.step(cfg.encode_scale * x)
        if cfg.topology == "parallel":
            drive = x
        else:
            drive = bridge_convert(qf, cfg.bridge_precision)[self._bridge_index]
        pf = self.photonic.step(drive, phase)
        return _round(combine_features(qf, pf, cfg.fusion), cfg.bridge_precision)

    def state(self) -> RunState:
        p = self.pid
        pid = PidController(p.kp, p.ki, p.kd, p.dt_s, p.lpf_cutoff_hz, p.out_min, p.out_max, p.integ, p.deriv_filtered, p.prev_error)
        ph = self.photonic.state
        return RunState(self.quantum.rho, PhotonicState(ph.fields.copy(), ph.step_index), pid, self.last_error)


def run_pipeline(series: SupervisedSet, cfg: HybridConfig, state: RunState | None = None) -> tuple[np.ndarray, RunState]:
    """Teacher-forced feature harvest: one fused row per input, PID error held at 0.

    The washout ``prefix`` is fed first without producing rows.
    """
    res = HybridReservoir(cfg, state)
    for x in series.prefix:
        res.step(float(x), 0.0)
    rows = np.empty((len(series.inputs), res.n_features))
    for t, x in enumerate(series.inputs):
        rows[t] = res.step(float(x), 0.0)
    return rows, res.state()


def forecast(
    model: ReadoutModel,
    state: RunState,
    cfg: HybridConfig,
    n_steps: int,
    mode: str = "one_step",
    test_inputs=None,
    test_targets=None,
    feedback_clip: tuple[float, float] | None = (0.0, 1.0),
) -> np.ndarray:
    """Roll the pipeline forward from ``state`` and predict ``n_steps`` values.

    ``one_step`` feeds the true inputs and, when targets are given, drives the
    PID with each realized prediction error. ``free_run`` feeds every
    prediction back as the next input with the PID error held at zero; fed-back
    values are clipped to ``feedback_clip`` (the encoder's input domain).
    """
    if mode not in ("one_step", "free_run"):
        raise ParameterError(f"unknown forecast mode {mode!r}")
    if n_steps == 0:
        return np.zeros(0)
    if model.n_features != cfg.n_features:
        raise DimensionError(f"model expects {model.n_features} features, pipeline produces {cfg.n_features}")
    inputs = np.asarray(test_inputs, dtype=float)
    need = n_steps if mode == "one_step" else 1
    if len(inputs) < need:
        raise DimensionError(f"{mode} needs {need} inputs, got {len(inputs)}")
    targets = None if test_targets is None else np.asarray(test_targets, dtype=float)
    w, b = model.weights[:-1], model.weights[-1]
    res = HybridReservoir(cfg, state)
    out = np.empty(n_steps)
    x = float(inputs[0])
    for t in range(n_steps):
        if mode == "one_step":
            x = float(inputs[t])
        feats = res.step(x)
        y = float(feats @ w + b)
        if not math.isfinite(y):
            raise DivergenceError(f"forecast became non-finite at step {t}", step=t)
        out[t] = y
        if mode == "one_step":
            res.last_error = control_error(y, targets[t]) if targets is not None else 0.0
        else:
            res.last_error = 0.0
            x = min(max(y, feedback_clip[0]), feedback_clip[1]) if feedback_clip else y
    return out
