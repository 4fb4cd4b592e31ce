"""Lumped time-delay photonic reservoir with PID phase control."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, DivergenceError, ParameterError


def loss_factor(loss_db_per_cm: float, length_cm: float) -> float:
    """Amplitude transmission ``10**(-loss * length / 20)``."""
    if loss_db_per_cm < 0 or length_cm < 0:
        raise ParameterError("loss and length must be non-negative")
    return 10.0 ** (-loss_db_per_cm * length_cm / 20.0)


@dataclass(frozen=True)
class PhotonicConfig:
    n_virtual: int = 50
    mask_seed: int = 42
    feedback_gain: float = 0.6
    input_gain: float = 0.5
    kerr_coeff: float = 0.4
    loss_db_per_cm: float = 0.5
    length_cm: float = 0.1
    bias_phase: float = 2.0
    actuator_limit: float = math.pi
    # 1: node k is fed by node k-1 of the previous round (desynchronised ring);
    # 0: each node recurs on itself only.
    ring_shift: int = 1
    wavelength_nm: float = 1550.0
    rise_time_us: float = 5.0

    @property
    def transmission(self) -> float:
        return loss_factor(self.loss_db_per_cm, self.length_cm)

    def validate(self) -> "PhotonicConfig":
        if self.n_virtual < 1:
            raise ConfigurationError("n_virtual must be >= 1")
        if self.loss_db_per_cm < 0 or self.length_cm < 0:
            raise ConfigurationError("loss_db_per_cm and length_cm must be >= 0")
        if not 0 <= self.feedback_gain < 1:
            raise ConfigurationError("feedback_gain must lie in [0, 1)")
        if not self.feedback_gain * self.transmission < 1:
            raise ConfigurationError("feedback_gain * loss factor must be < 1")
        if self.actuator_limit <= 0:
            raise ConfigurationError("actuator_limit must be positive")
        return self

    def mask(self) -> np.ndarray:
        """Binary +-1 input mask, a pure function of ``mask_seed``."""
        rng = np.random.default_rng(self.mask_seed)
        return rng.choice(np.array([-1.0, 1.0]), size=self.n_virtual)

    def field_bound(self, max_input: float) -> float:
        a_l = self.feedback_gain * self.transmission
        return (abs(self.input_gain) * max_input + abs(self.bias_phase)) / (1.0 - a_l)


@dataclass
class PhotonicState:
    fields: np.ndarray
    step_index: int = 0

    @classmethod
    def zeros(cls, n_virtual: int) -> "PhotonicState":
        return cls(np.zeros(n_virtual, dtype=complex))


def node_update(e_prev, drive, phase_shift: float, config: PhotonicConfig):
    """Lossy Kerr feedback update of one (or an array of) delay-line nodes."""
    e_prev = np.asarray(e_prev, dtype=complex)
    phase = config.bias_phase + phase_shift + config.kerr_coeff * (e_prev.real**2 + e_prev.imag**2)
    out = config.transmission * (config.feedback_gain * e_prev * np.exp(1j * phase) + config.input_gain * np.asarray(drive))
    return out if out.ndim else complex(out)


def p_step(state: PhotonicState, x_t, phase_shift: float, config: PhotonicConfig, mask: np.ndarray | None = None):
    """Drive every virtual node with ``mask * x_t`` and advance one round.

    ``x_t`` is a scalar or one value per node. Returns the new state and the
    per-node intensities ``|E|**2``.
    """
    if mask is None:
        mask = config.mask()
    delayed = np.roll(state.fields, config.ring_shift) if config.ring_shift else state.fields
    with np.errstate(over="ignore", invalid="ignore"):
        fields = node_update(delayed, mask * x_t, phase_shift, config)
    step = state.step_index + 1
    if not np.all(np.isfinite(fields)):
        raise DivergenceError(f"photonic field became non-finite at step {step}", step=step)
    return PhotonicState(fields, step), fields.real**2 + fields.imag**2


class PhotonicReservoir:
    """Stateful wrapper around :func:`p_step` with the mask cached."""

    def __init__(self, config: PhotonicConfig, state: PhotonicState | None = None):
        self.config = config.validate()
        self.mask = config.mask()
        self.state = state or PhotonicState.zeros(config.n_virtual)

    @property
    def n_features(self) -> int:
        return self.config.n_virtual

    def step(self, x_t, phase_shift: float = 0.0) -> np.ndarray:
        self.state, feats = p_step(self.state, x_t, phase_shift, self.config, self.mask)
        return feats


@dataclass
class PidController:
    """Discrete PID with trapezoidal integral, clamping anti-windup and a
    first-order low-pass on the derivative."""

    kp: float = 0.45
    ki: float = 0.12
    kd: float = 0.08
    dt_s: float = 1e-3
    lpf_cutoff_hz: float = 50.0
    out_min: float = -math.pi
    out_max: float = math.pi
    integ: float = 0.0
    deriv_filtered: float = 0.0
    prev_error: float = 0.0

    def __post_init__(self):
        if not self.dt_s > 0:
            raise ConfigurationError("dt_s must be positive")
        if not self.out_max > self.out_min:
            raise ConfigurationError("out_max must exceed out_min")

    @property
    def filter_alpha(self) -> float:
        tau = 1.0 / (2.0 * math.pi * self.lpf_cutoff_hz)
        return self.dt_s / (tau + self.dt_s)

    def reset(self) -> None:
        self.integ = self.deriv_filtered = self.prev_error = 0.0

    def update(self, error: float) -> float:
        if not math.isfinite(error):
            raise ParameterError("PID error must be finite")
        p = self.kp * error
        self.integ += 0.5 * self.dt_s * (error + self.prev_error)
        if self.ki != 0:
            lo, hi = sorted((self.out_min / self.ki, self.out_max / self.ki))
            self.integ = min(max(self.integ, lo), hi)
        raw = (error - self.prev_error) / self.dt_s
        self.deriv_filtered += self.filter_alpha * (raw - self.deriv_filtered)
        self.prev_error = error
        u = p + self.ki * self.integ + self.kd * self.deriv_filtered
        return min(max(u, self.out_min), self.out_max)


def pid_update(pid: PidController, error: float) -> tuple[PidController, float]:
    """Functional form of :meth:`PidController.update`; ``pid`` is left untouched."""
    nxt = replace(pid)
    u = nxt.update(error)
    return nxt, u


def control_error(y_pred: float, y_true: float) -> float:
    return y_pred - y_true
