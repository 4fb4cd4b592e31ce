"""Benchmark cells: dataset preparation and one train/evaluate run per model.

A cell is (model, dataset, sigma, seed). Inputs carry the injected noise,
targets stay clean, and the trial seed drives every random draw in the cell
(photonic mask, ESN weights, noise).
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import config as cfgmod
from .baselines import ar_one_step, esn_init, esn_run, fit_ar_aic, quantum_only_run
from .data import (
    LorenzParams,
    MackeyGlassParams,
    SupervisedSet,
    TimeSeries,
    add_gaussian_noise,
    gen_lorenz,
    gen_mackey_glass,
    load_csv,
    make_supervised,
    normalize,
)
from .errors import ConfigurationError
from .metrics import measure_throughput, metric_report, nmse
from .pipeline import HybridReservoir, forecast, run_pipeline
from .quantum import QuantumReservoir
from .readout import ReadoutModel, cross_validate, fit_iterative, fit_ridge, predict

# Samples per model-time unit: Mackey-Glass is read once per time unit
# (every 10th RK4 step), Lorenz at every integration step.
DEFAULT_SAMPLE_EVERY = {"mackey_glass": 10, "lorenz": 1}


@lru_cache(maxsize=16)
def _generated(dataset: str, n_total: int, every: int, tau: float, dt: float, history: float, lorenz_dt: float, component: int):
    if dataset == "mackey_glass":
        s = gen_mackey_glass(MackeyGlassParams(tau=tau, dt=dt, history=history), n_total * every)
    else:
        s = gen_lorenz(LorenzParams(dt=lorenz_dt), n_total * every).component(component)
    return s.subsample(every).values


def load_series(cfg: dict) -> TimeSeries:
    """Clean series for the configured dataset, transient removed, scaled to [0, 1]."""
    d = cfg["data"]
    name = cfg["dataset"]
    n_needed = d["n_points"] + d["washout"] + d["horizon"]
    if name.startswith("csv:"):
        raw = load_csv(name[4:], d["csv_column"], d["csv_dt"])
        if raw.dim != 1:
            raw = raw.component(d["component"])
        if len(raw) < n_needed:
            raise ConfigurationError(
                f"config key 'data.n_points' needs {n_needed} rows with washout and horizon; {name} has {len(raw)}"
            )
        s = TimeSeries(raw.values[-n_needed:], raw.dt, raw.name, meta=raw.meta)
    else:
        every = d["sample_every"] or DEFAULT_SAMPLE_EVERY[name]
        total = d["transient"] + n_needed
        vals = _generated(name, total, every, d["mg_tau"], d["mg_dt"], d["mg_history"], d["lorenz_dt"], d["component"])
        dt = (d["mg_dt"] if name == "mackey_glass" else d["lorenz_dt"]) * every
        s = TimeSeries(vals[d["transient"]:].copy(), dt, name)
    return normalize(s, 0.0, 1.0)[0]


def prepare(cfg: dict, sigma: float, seed: int) -> tuple[SupervisedSet, SupervisedSet]:
    d = cfg["data"]
    clean = load_series(cfg)
    noisy = add_gaussian_noise(clean, sigma, seed)
    return make_supervised(noisy, d["horizon"], d["washout"], d["split"], target_series=clean)


@dataclass
class CellResult:
    model: str
    dataset: str
    sigma: float
    seed: int
    predictions: np.ndarray
    targets: np.ndarray
    metrics: dict
    timings: dict
    n_features: int
    readout: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def key(self) -> tuple:
        return (self.model, self.dataset, self.sigma, self.seed)


def _fit_readout(X: np.ndarray, y: np.ndarray, rcfg: dict) -> tuple[ReadoutModel, dict]:
    grid = rcfg["lambda_grid"] or [rcfg["lambda"]]
    rep = cross_validate(X, y, rcfg["cv_folds"], grid)
    if rcfg["trainer"] == "adam":
        model = fit_iterative(X, y, rep.chosen_lambda, rcfg["lr"], rcfg["epochs"], batch_size=rcfg["batch_size"])
    else:
        model = fit_ridge(X, y, rep.chosen_lambda)
    info = {
        "trainer": rcfg["trainer"],
        "lambda": rep.chosen_lambda,
        "cv_fold_nmse": [float(s) for s in rep.fold_scores],
        "cv_mean_nmse": rep.mean,
        "cv_std_nmse": rep.std,
        "weights": [float(w) for w in model.weights],
    }
    return model, info


def _epoch_curve(X, y, Xt, yt, rcfg: dict, lam: float) -> list[dict]:
    # Feature columns are standardized on the training rows so one learning
    # rate serves every model's feature scale.
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    m = fit_iterative((X - mu) / sd, y, lam, rcfg["lr"], rcfg["epochs"], batch_size=rcfg["batch_size"],
                      X_val=(Xt - mu) / sd, y_val=yt)
    return [
        {"epoch": i + 1, "train_loss": float(loss), "test_accuracy_pct": 100.0 * max(0.0, 1.0 - float(v))}
        for i, (loss, v) in enumerate(zip(m.meta["loss_history"], m.meta["val_nmse_history"]))
    ]


def _throughput(step_predict, inputs: np.ndarray) -> dict:
    def runner(chunk):
        for x in chunk:
            step_predict(float(x))

    n = len(inputs)
    rep = measure_throughput(runner, n, batch_size=max(n // 10, 10), warmup_points=min(100, n), inputs=inputs)
    return rep.to_dict()


def run_cell(cfg: dict, model: str | None = None, sigma: float | None = None, seed: int | None = None) -> CellResult:
    """Train and evaluate one model on one (dataset, sigma, seed) cell."""
    model = model or cfg["model"]
    sigma = cfg["sigma"] if sigma is None else float(sigma)
    seed = cfg["seed"] if seed is None else int(seed)
    train, test = prepare(cfg, sigma, seed)
    rcfg = cfg["readout"]
    extras: dict = {}
    readout: dict = {}
    t0 = time.perf_counter()

    if model == "ar":
        if cfg["data"]["horizon"] != 1:
            raise ConfigurationError("config key 'data.horizon' must be 1 for the ar model")
        history = np.concatenate([train.prefix, train.inputs])
        ar = fit_ar_aic(history, cfg["ar"]["p_max"], cfg["ar"]["difference"])
        t_fit = time.perf_counter()
        preds = ar_one_step(ar, history, test.inputs)
        t_inf = time.perf_counter()
        n_features = ar.order_p
        readout = {"order_p": ar.order_p, "aic": ar.aic, "coeffs": ar.coeffs.tolist(), "intercept": ar.intercept}
        step_predict = None
    else:
        if model == "hpqrc":
            hcfg = cfgmod.build_hybrid(cfg, seed)
            X, state = run_pipeline(train, hcfg)
        elif model == "esn":
            ecfg = cfgmod.build_esn(cfg, seed)
            rows, esn = esn_run(np.concatenate([train.prefix, train.inputs]), ecfg, washout=len(train.prefix))
            X = rows
        elif model == "quantum_only":
            qcfg = cfgmod.build_quantum(cfg, seed, cfg["quantum_only"]["n_qubits"])
            scale, prec = cfg["hybrid"]["encode_scale_rad"], cfg["hybrid"]["bridge_precision"]
            res = QuantumReservoir(qcfg)
            quantum_only_run(train.prefix, config=qcfg, n_qubits=qcfg.n_qubits, encode_scale=scale, precision=prec, reservoir=res)
            X, _ = quantum_only_run(train.inputs, n_qubits=qcfg.n_qubits, encode_scale=scale, precision=prec, reservoir=res)
        else:
            raise ConfigurationError(f"config key 'model' has invalid value {model!r}; accepted: one of {', '.join(cfgmod.MODELS)}")
        n_features = X.shape[1]
        ro, readout = _fit_readout(X, train.targets, rcfg)
        t_fit = time.perf_counter()
        if model == "hpqrc":
            preds = forecast(ro, state, hcfg, len(test), "one_step", test.inputs, test.targets)
            t_inf = time.perf_counter()
            Xt = None
        else:
            if model == "esn":
                Xt, _ = esn_run(test.inputs, ecfg, esn=esn)
            else:
                Xt, _ = quantum_only_run(test.inputs, n_qubits=qcfg.n_qubits, encode_scale=scale, precision=prec, reservoir=res)
            preds = predict(ro, Xt)
            t_inf = time.perf_counter()

        if rcfg["epoch_curve"]:
            if Xt is None:
                Xt, _ = run_pipeline(SupervisedSet(test.inputs, test.targets), hcfg, state)
            extras["epoch_curve"] = _epoch_curve(X, train.targets, Xt, test.targets, rcfg, readout["lambda"])

        steps = cfg["evaluate"]["free_run_steps"]
        if model == "hpqrc" and steps:
            extras["free_run"] = _free_run(ro, state, hcfg, steps, train, test)

        if cfg["evaluate"]["throughput"]:
            step_predict = _step_predictor(model, ro, hcfg if model == "hpqrc" else None, state if model == "hpqrc" else None,
                                           ecfg if model == "esn" else None, esn if model == "esn" else None,
                                           res if model == "quantum_only" else None, cfg)
        else:
            step_predict = None

    if step_predict is not None:
        extras["throughput"] = _throughput(step_predict, test.inputs)

    rep = metric_report(test.targets, preds)
    return CellResult(
        model=model,
        dataset=cfg["dataset"],
        sigma=sigma,
        seed=seed,
        predictions=np.asarray(preds),
        targets=test.targets,
        metrics=rep.to_dict(),
        timings={
            "fit_s": t_fit - t0,
            "inference_s": t_inf - t_fit,
            "total_s": t_inf - t0,
            "latency_ms": 1e3 * (t_inf - t_fit) / max(len(test), 1),
        },
        n_features=int(n_features),
        readout=readout,
        extras=extras,
    )


def _free_run(ro, state, hcfg, steps: int, train: SupervisedSet, test: SupervisedSet) -> dict:
    lo, hi = float(np.min(train.targets)), float(np.max(train.targets))
    span = hi - lo
    out = forecast(ro, state, hcfg, steps, "free_run", test.inputs)
    return {
        "steps": steps,
        "min": float(out.min()),
        "max": float(out.max()),
        "train_min": lo,
        "train_max": hi,
        "bounded": bool(out.min() >= lo - 0.5 * span and out.max() <= hi + 0.5 * span),
    }


def _step_predictor(model, ro, hcfg, state, ecfg, esn, qres, cfg):
    """A per-point closure (state update plus readout) for throughput timing."""
    w, b = ro.weights[:-1], ro.weights[-1]
    if model == "hpqrc":
        res = HybridReservoir(hcfg, state)
        return lambda x: float(res.step(x) @ w + b)
    if model == "esn":
        clone = esn_init(ecfg)
        clone.state = esn.state.copy()
        return lambda x: float(clone.step(x) @ w + b)
    clone = QuantumReservoir(qres.config, rho=qres.rho)
    scale = cfg["hybrid"]["encode_scale_rad"]
    return lambda x: float(clone.step(scale * x) @ w + b)


@dataclass(frozen=True)
class Cell:
    model: str
    dataset: str
    sigma: float
    seed: int


def grid_cells(cfg: dict) -> list[Cell]:
    """Cartesian product of the sweep axes; seeds default to seed, seed+1, ..."""
    sw = cfg["sweep"]
    seeds = sw["seeds"] or [cfg["seed"] + i for i in range(sw["trials"])]
    return [
        Cell(m, d, float(s), int(k))
        for m, d, s, k in itertools.product(sw["models"], sw["datasets"], sw["sigmas"], seeds)
    ]


def cell_config(cfg: dict, cell: Cell) -> dict:
    return cfgmod.with_overrides(cfg, model=cell.model, dataset=cell.dataset, sigma=cell.sigma, seed=cell.seed)


def summarize(rows: list[dict]) -> list[dict]:
    """Mean and sample std of nmse, accuracy and time per (model, dataset, sigma)."""
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault((r["model"], r["dataset"], float(r["sigma"])), []).append(r)
    out = []
    for (m, d, s), rs in sorted(groups.items()):
        entry = {"model": m, "dataset": d, "sigma": s, "n": len(rs)}
        for col in ("nmse", "accuracy_pct", "time_s"):
            v = np.array([float(r[col]) for r in rs])
            entry[f"{col}_mean"] = float(np.mean(v))
            entry[f"{col}_std"] = float(np.std(v, ddof=1)) if len(v) > 1 else math.nan
        out.append(entry)
    return out
