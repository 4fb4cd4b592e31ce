"""Benchmark configuration: a validated YAML tree with units in key names.

Every key has a type, a default and an accepted range. Unknown keys and
out-of-range values raise :class:`ConfigurationError` naming the key.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import yaml

from .baselines import EsnConfig
from .errors import ConfigurationError
from .photonic import PhotonicConfig
from .pipeline import FUSIONS, PRECISIONS, TOPOLOGIES, HybridConfig, PidConfig
from .quantum import MAX_QUBITS, QuantumConfig

MODELS = ("hpqrc", "quantum_only", "esn", "ar")
TRAINERS = ("ridge", "adam")


@dataclass(frozen=True)
class Key:
    kind: type | tuple
    default: Any
    check: Callable[[Any], bool] = lambda v: True
    accepted: str = "any value"
    nullable: bool = False


def _num(lo=-math.inf, hi=math.inf, lo_open=False, hi_open=False, integer=False) -> Key:
    def check(v):
        if not math.isfinite(v):
            return False
        ok_lo = v > lo if lo_open else v >= lo
        ok_hi = v < hi if hi_open else v <= hi
        return ok_lo and ok_hi

    left = "(" if lo_open or math.isinf(lo) else "["
    right = ")" if hi_open or math.isinf(hi) else "]"
    text = f"{'integer' if integer else 'number'} in {left}{lo:g}, {hi:g}{right}"
    return Key(int if integer else (int, float), None, check, text)


def _k(base: Key, default: Any, nullable: bool = False) -> Key:
    return Key(base.kind, default, base.check, base.accepted + (" or null" if nullable else ""), nullable)


def _choice(options: tuple, default: str) -> Key:
    return Key(str, default, lambda v: v in options, f"one of {', '.join(options)}")


def _dataset_ok(v: str) -> bool:
    return v in ("mackey_glass", "lorenz") or (v.startswith("csv:") and len(v) > 4)


_POS_INT = _num(1, integer=True)
_NONNEG_INT = _num(0, integer=True)
_ANY_INT = _num(integer=True)
_REAL = _num()
_POS = _num(0, lo_open=True)
_NONNEG = _num(0)
_UNIT = _num(0, 1)

_q, _p, _pid, _esn = QuantumConfig(), PhotonicConfig(), PidConfig(), EsnConfig()

SCHEMA: dict[str, Key | dict[str, Key]] = {
    "model": _choice(MODELS, "hpqrc"),
    "dataset": Key(str, "mackey_glass", _dataset_ok, "mackey_glass, lorenz or csv:<path>"),
    "seed": _k(_ANY_INT, 42),
    "sigma": _k(_NONNEG, 0.0),
    "data": {
        "n_points": _k(_num(20, integer=True), 5000),
        "split": _k(_num(0, 1, True, True), 0.8),
        "washout": _k(_NONNEG_INT, 100),
        "horizon": _k(_POS_INT, 1),
        "transient": _k(_NONNEG_INT, 500),
        "sample_every": _k(_POS_INT, None, nullable=True),
        "component": _k(_num(0, 2, integer=True), 0),
        "mg_tau": _k(_POS, 17.0),
        "mg_dt": _k(_POS, 0.1),
        "mg_history": _k(_REAL, 1.2),
        "lorenz_dt": _k(_POS, 0.01),
        "csv_column": Key((str, int), "value", lambda v: True, "column name or index"),
        "csv_dt": _k(_POS, 1.0),
    },
    "quantum": {
        "n_qubits": _k(_num(1, MAX_QUBITS, integer=True), _q.n_qubits),
        "n_layers": _k(_POS_INT, _q.n_layers),
        "coupling_J": _k(_REAL, _q.coupling_J),
        "field_h": _k(_REAL, _q.field_h),
        "layer_dt_us": _k(_NONNEG, _q.layer_dt),
        "t1_us": _k(_POS, _q.t1_us),
        "t2_us": _k(_POS, _q.t2_us),
        "meas_strength": _k(_UNIT, _q.meas_strength),
        "input_masks": Key(bool, _q.input_masks, accepted="true or false"),
    },
    "photonic": {
        "n_virtual": _k(_POS_INT, _p.n_virtual),
        "feedback_gain": _k(_num(0, 1, hi_open=True), _p.feedback_gain),
        "input_gain": _k(_REAL, _p.input_gain),
        "kerr_coeff": _k(_REAL, _p.kerr_coeff),
        "loss_db_per_cm": _k(_NONNEG, _p.loss_db_per_cm),
        "length_cm": _k(_NONNEG, _p.length_cm),
        "bias_phase_rad": _k(_REAL, _p.bias_phase),
        "actuator_limit_rad": _k(_POS, _p.actuator_limit),
        "ring_shift": _k(_NONNEG_INT, _p.ring_shift),
        "wavelength_nm": _k(_POS, _p.wavelength_nm),
        "rise_time_us": _k(_NONNEG, _p.rise_time_us),
    },
    "pid": {
        "enabled": Key(bool, False, accepted="true or false"),
        "kp": _k(_REAL, _pid.kp),
        "ki": _k(_REAL, _pid.ki),
        "kd": _k(_REAL, _pid.kd),
        "dt_s": _k(_POS, _pid.dt_s),
        "lpf_cutoff_hz": _k(_POS, _pid.lpf_cutoff_hz),
    },
    "hybrid": {
        "topology": _choice(TOPOLOGIES, "parallel"),
        "bridge_precision": _choice(PRECISIONS, "single"),
        "fusion": _choice(FUSIONS, "concat"),
        "encode_scale_rad": _k(_REAL, math.pi),
    },
    "esn": {
        "n_nodes": _k(_POS_INT, _esn.n_nodes),
        "spectral_radius": _k(_POS, _esn.spectral_radius),
        "leak_rate": _k(_num(0, 1, lo_open=True), _esn.leak_rate),
        "input_scale": _k(_REAL, _esn.input_scale),
        "density": _k(_num(0, 1, lo_open=True), _esn.density),
    },
    "ar": {
        "p_max": _k(_NONNEG_INT, 10),
        "difference": Key(bool, False, accepted="true or false"),
    },
    "quantum_only": {
        "n_qubits": _k(_num(1, MAX_QUBITS, integer=True), 8),
    },
    "readout": {
        "lambda": _k(_NONNEG, 0.01),
        "lambda_grid": Key(list, [], lambda v: all(isinstance(x, (int, float)) and x >= 0 for x in v),
                           "list of numbers >= 0 (empty: use lambda)"),
        "cv_folds": _k(_num(2, integer=True), 5),
        "trainer": _choice(TRAINERS, "ridge"),
        "epochs": _k(_POS_INT, 100),
        "lr": _k(_POS, 0.001),
        "batch_size": _k(_POS_INT, 32),
        "epoch_curve": Key(bool, True, accepted="true or false"),
    },
    "evaluate": {
        "free_run_steps": _k(_NONNEG_INT, 200),
        "throughput": Key(bool, True, accepted="true or false"),
    },
    "sweep": {
        "models": Key(list, ["hpqrc", "esn"], lambda v: len(v) > 0 and all(m in MODELS for m in v),
                      f"non-empty list drawn from {', '.join(MODELS)}"),
        "datasets": Key(list, ["mackey_glass"], lambda v: len(v) > 0 and all(isinstance(d, str) and _dataset_ok(d) for d in v),
                        "non-empty list of mackey_glass, lorenz or csv:<path>"),
        "sigmas": Key(list, [0.0, 0.1, 0.3], lambda v: len(v) > 0 and all(isinstance(s, (int, float)) and s >= 0 for s in v),
                      "non-empty list of numbers >= 0"),
        "trials": _k(_POS_INT, 10),
        "seeds": Key(list, [], lambda v: all(isinstance(s, int) and not isinstance(s, bool) for s in v),
                     "list of integers (empty: seed, seed+1, ...)"),
        "workers": _k(_POS_INT, 1),
    },
}


def _type_ok(value: Any, spec: Key) -> bool:
    if value is None:
        return spec.nullable
    if isinstance(value, bool) and spec.kind is not bool:
        return False
    if spec.kind is float or spec.kind == (int, float):
        return isinstance(value, (int, float))
    return isinstance(value, spec.kind)


def _check(path: str, value: Any, spec: Key) -> Any:
    if not _type_ok(value, spec) or (value is not None and not spec.check(value)):
        raise ConfigurationError(f"config key '{path}' has invalid value {value!r}; accepted: {spec.accepted}")
    if spec.kind == (int, float) and value is not None:
        return float(value)
    return copy.deepcopy(value)


def defaults() -> dict:
    out = {}
    for name, spec in SCHEMA.items():
        if isinstance(spec, dict):
            out[name] = {k: copy.deepcopy(s.default) for k, s in spec.items()}
        else:
            out[name] = copy.deepcopy(spec.default)
    return out


def validate(raw: dict | None) -> dict:
    """Merge ``raw`` over the defaults, rejecting unknown keys and bad values."""
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigurationError("config root must be a mapping")
    cfg = defaults()
    for name, value in raw.items():
        if name not in SCHEMA:
            raise ConfigurationError(f"unknown config key '{name}'; known keys: {', '.join(SCHEMA)}")
        spec = SCHEMA[name]
        if isinstance(spec, dict):
            if value is None:
                continue
            if not isinstance(value, dict):
                raise ConfigurationError(f"config key '{name}' must be a mapping")
            for key, v in value.items():
                if key not in spec:
                    raise ConfigurationError(f"unknown config key '{name}.{key}'; known keys: {', '.join(spec)}")
                cfg[name][key] = _check(f"{name}.{key}", v, spec[key])
        else:
            cfg[name] = _check(name, value, spec)
    q = cfg["quantum"]
    if q["t2_us"] > 2 * q["t1_us"]:
        raise ConfigurationError(f"config key 'quantum.t2_us' must be <= 2 * quantum.t1_us ({2 * q['t1_us']:g})")
    build_hybrid(cfg).validate()
    return cfg


def load(path: str | Path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror or exc}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"cannot parse config {path}: {exc}") from None
    return validate(raw)


def dump(cfg: dict) -> str:
    return yaml.safe_dump(cfg, sort_keys=False, default_flow_style=None)


def with_overrides(cfg: dict, **flat: Any) -> dict:
    """Return a re-validated copy with dotted keys (``"hybrid.topology"``) replaced."""
    out = copy.deepcopy(cfg)
    for dotted, value in flat.items():
        if value is None:
            continue
        node = out
        *parents, leaf = dotted.split(".")
        for p in parents:
            node = node[p]
        node[leaf] = value
    return validate(out)


def build_quantum(cfg: dict, seed: int | None = None, n_qubits: int | None = None) -> QuantumConfig:
    q = cfg["quantum"]
    return QuantumConfig(
        n_qubits=n_qubits or q["n_qubits"],
        n_layers=q["n_layers"],
        coupling_J=q["coupling_J"],
        field_h=q["field_h"],
        layer_dt=q["layer_dt_us"],
        t1_us=q["t1_us"],
        t2_us=q["t2_us"],
        meas_strength=q["meas_strength"],
        seed=cfg["seed"] if seed is None else seed,
        input_masks=q["input_masks"],
    )


def build_hybrid(cfg: dict, seed: int | None = None) -> HybridConfig:
    seed = cfg["seed"] if seed is None else seed
    p, pid, h = cfg["photonic"], cfg["pid"], cfg["hybrid"]
    photonic = PhotonicConfig(
        n_virtual=p["n_virtual"],
        mask_seed=seed,
        feedback_gain=p["feedback_gain"],
        input_gain=p["input_gain"],
        kerr_coeff=p["kerr_coeff"],
        loss_db_per_cm=p["loss_db_per_cm"],
        length_cm=p["length_cm"],
        bias_phase=p["bias_phase_rad"],
        actuator_limit=p["actuator_limit_rad"],
        ring_shift=p["ring_shift"],
        wavelength_nm=p["wavelength_nm"],
        rise_time_us=p["rise_time_us"],
    )
    return HybridConfig(
        topology=h["topology"],
        quantum=build_quantum(cfg, seed),
        photonic=photonic,
        pid=PidConfig(pid["kp"], pid["ki"], pid["kd"], pid["dt_s"], pid["lpf_cutoff_hz"]),
        pid_enabled=pid["enabled"],
        bridge_precision=h["bridge_precision"],
        fusion=h["fusion"],
        encode_scale=h["encode_scale_rad"],
    )


def build_esn(cfg: dict, seed: int | None = None) -> EsnConfig:
    e = cfg["esn"]
    return EsnConfig(
        n_nodes=e["n_nodes"],
        spectral_radius=e["spectral_radius"],
        leak_rate=e["leak_rate"],
        input_scale=e["input_scale"],
        density=e["density"],
        seed=cfg["seed"] if seed is None else seed,
    )
