"""Linear readout: closed-form ridge, Adam-trained ridge, and k-fold CV.

Feature matrices are passed without the bias column; every function here
appends a constant-1 column internally and the last model weight is the
(unregularized) bias.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import linalg

from .errors import DimensionError, DivergenceError, ParameterError, SizingError, SolverError
from .metrics import nmse

DEFAULT_LAMBDA = 0.01
DEFAULT_LAMBDA_GRID = (1e-8, 1e-6, 1e-4, 1e-2, 1.0)


@dataclass
class ReadoutModel:
    weights: np.ndarray
    lam: float = DEFAULT_LAMBDA
    meta: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return len(self.weights) - 1

    def to_dict(self) -> dict:
        return {
            "weights": [float(w) for w in self.weights],
            "lambda": self.lam,
            "n_features": self.n_features,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReadoutModel":
        w = np.asarray(d["weights"], dtype=float)
        if len(w) != d["n_features"] + 1:
            raise DimensionError("weight count does not match n_features + 1")
        return cls(w, float(d["lambda"]), dict(d.get("meta", {})))

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        record = self.to_dict()
        record["created"] = time.strftime("%Y-%m-%dT%H:%M:%S")
        path.write_text(json.dumps(record, indent=2), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "ReadoutModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class CvReport:
    fold_scores: np.ndarray
    mean: float
    std: float
    chosen_lambda: float
    lambda_scores: dict = field(default_factory=dict)


def add_bias(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionError(f"feature matrix must be 2-D, got shape {X.shape}")
    return np.hstack([X, np.ones((X.shape[0], 1))])


def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise DimensionError(f"feature matrix must be 2-D and non-empty, got shape {X.shape}")
    if X.shape[0] != len(y):
        raise DimensionError(f"{X.shape[0]} feature rows but {len(y)} targets")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ParameterError("features and targets must be finite")
    return X, y


def _penalty(n_cols: int, lam: float) -> np.ndarray:
    p = np.full(n_cols, float(lam))
    p[-1] = 0.0
    return p


def ridge_loss(Xb: np.ndarray, y: np.ndarray, w: np.ndarray, lam: float) -> float:
    """``(||Xb w - y||^2 + lam ||w_nonbias||^2) / T`` for a bias-augmented ``Xb``."""
    r = Xb @ w - y
    return float((r @ r + lam * (w[:-1] @ w[:-1])) / len(y))


def fit_ridge(X, y, lam: float = DEFAULT_LAMBDA) -> ReadoutModel:
    """Solve ``(Xb^T Xb + lam I') w = Xb^T y`` by Cholesky, ``I'`` sparing the bias."""
    X, y = _check_xy(X, y)
    if lam < 0:
        raise ParameterError("lambda must be >= 0")
    Xb = add_bias(X)
    A = Xb.T @ Xb
    A[np.diag_indices_from(A)] += _penalty(Xb.shape[1], lam)
    b = Xb.T @ y
    try:
        w = linalg.cho_solve(linalg.cho_factor(A, lower=True, check_finite=False), b, check_finite=False)
    except linalg.LinAlgError:
        raise SolverError(
            f"normal equations are singular at lambda={lam}; use lambda > 0 for rank-deficient features"
        ) from None
    if not np.all(np.isfinite(w)):
        raise SolverError(f"ridge solve produced non-finite weights at lambda={lam}; increase lambda")
    return ReadoutModel(w, float(lam), {"solver": "cholesky", "n_rows": len(y)})


def normal_equation_residual(X, y, model: ReadoutModel) -> float:
    X, y = _check_xy(X, y)
    Xb = add_bias(X)
    A = Xb.T @ Xb
    A[np.diag_indices_from(A)] += _penalty(Xb.shape[1], model.lam)
    b = Xb.T @ y
    return float(np.linalg.norm(A @ model.weights - b) / max(np.linalg.norm(b), np.finfo(float).tiny))


def predict(model: ReadoutModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.n_features:
        raise DimensionError(f"model expects {model.n_features} features, got {X.shape[1]}")
    return X @ model.weights[:-1] + model.weights[-1]


def fit_iterative(
    X,
    y,
    lam: float = 0.0,
    lr: float = 0.001,
    epochs: int = 100,
    seed: int = 0,
    batch_size: int = 1,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    X_val=None,
    y_val=None,
) -> ReadoutModel:
    """Minimize the ridge loss with Adam over seeded, shuffled mini-batches.

    Weights start at zero. ``meta["loss_history"]`` holds the full-data loss
    after each epoch; with a validation set, ``meta["val_nmse_history"]``
    tracks held-out NMSE as well.
    """
    X, y = _check_xy(X, y)
    if lam < 0:
        raise ParameterError("lambda must be >= 0")
    if epochs < 1 or batch_size < 1:
        raise ParameterError("epochs and batch_size must be >= 1")
    Xb = add_bias(X)
    T, D = Xb.shape
    rng = np.random.default_rng(seed)
    w = np.zeros(D)
    m = np.zeros(D)
    v = np.zeros(D)
    reg = 2.0 * _penalty(D, lam) / T
    t = 0
    losses, val_hist = [], []
    Xv = add_bias(np.asarray(X_val, dtype=float)) if X_val is not None else None
    for epoch in range(epochs):
        order = rng.permutation(T)
        # Overflow is caught below as a non-finite loss.
        with np.errstate(over="ignore", invalid="ignore"):
            for start in range(0, T, batch_size):
                idx = order[start:start + batch_size]
                xb = Xb[idx]
                grad = (2.0 / len(idx)) * (xb.T @ (xb @ w - y[idx])) + reg * w
                t += 1
                m = beta1 * m + (1 - beta1) * grad
                v = beta2 * v + (1 - beta2) * grad * grad
                m_hat = m / (1 - beta1**t)
                v_hat = v / (1 - beta2**t)
                w = w - lr * m_hat / (np.sqrt(v_hat) + eps)
            loss = ridge_loss(Xb, y, w, lam)
        if not np.isfinite(loss):
            raise DivergenceError(f"iterative readout loss became non-finite in epoch {epoch + 1}", step=epoch + 1)
        losses.append(loss)
        if Xv is not None:
            val_hist.append(nmse(np.asarray(y_val, dtype=float), Xv @ w))
    meta = {"solver": "adam", "lr": lr, "epochs": epochs, "seed": seed, "batch_size": batch_size, "loss_history": losses}
    if Xv is not None:
        meta["val_nmse_history"] = val_hist
    return ReadoutModel(w, float(lam), meta)


def chronological_folds(n_rows: int, k: int) -> list[np.ndarray]:
    return np.array_split(np.arange(n_rows), k)


def cross_validate(X, y, k: int = 5, lambdas: Sequence[float] = DEFAULT_LAMBDA_GRID) -> CvReport:
    """Contiguous k-fold CV over a lambda grid; ties go to the larger lambda."""
    X, y = _check_xy(X, y)
    if k < 2:
        raise ParameterError("k must be >= 2")
    if len(y) < 2 * k:
        raise SizingError(f"{len(y)} rows is too few for {k}-fold cross-validation")
    lambdas = sorted(float(l) for l in lambdas)
    if not lambdas:
        raise ParameterError("lambda grid is empty")
    folds = chronological_folds(len(y), k)
    scores = {lam: np.empty(k) for lam in lambdas}
    for i, test_idx in enumerate(folds):
        train_mask = np.ones(len(y), dtype=bool)
        train_mask[test_idx] = False
        for lam in lambdas:
            model = fit_ridge(X[train_mask], y[train_mask], lam)
            scores[lam][i] = _fold_nmse(y[test_idx], predict(model, X[test_idx]))
    means = {lam: float(np.mean(s)) for lam, s in scores.items()}
    best = min(means.values())
    chosen = max(lam for lam, m in means.items() if m <= best + 1e-12)
    s = scores[chosen]
    return CvReport(s, float(np.mean(s)), float(np.std(s, ddof=1)), chosen, means)


def _fold_nmse(y, yhat) -> float:
    # A constant fold has no variance to normalize by; fall back to plain MSE.
    if np.var(y) == 0:
        return float(np.mean((y - yhat) ** 2))
    return nmse(y, yhat)


def fit_with_cv(X, y, k: int = 5, lambdas: Sequence[float] = DEFAULT_LAMBDA_GRID) -> tuple[ReadoutModel, CvReport]:
    report = cross_validate(X, y, k, lambdas)
    model = fit_ridge(X, y, report.chosen_lambda)
    model.meta["cv_mean_nmse"] = report.mean
    return model, report
