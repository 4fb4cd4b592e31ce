"""Cross-run statistics (paired comparisons, ROI) and plot-data tables."""

from __future__ import annotations

import csv
import itertools
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateError, IngestionError, PairingError
from .manifest import RunManifest
from .metrics import ACCURACY_DEFINITION, bootstrap_ci, paired_t_test, roi, roi_time

N_BOOTSTRAP = 1000


def result_rows(manifests: Iterable[RunManifest], label: str | None = None) -> list[dict]:
    """Flat per-run records; ``label`` names the result set (defaults to the model)."""
    return [
        {
            "run_id": m.run_id,
            "label": label or m.model,
            "model": m.model,
            "dataset": m.dataset,
            "sigma": float(m.sigma),
            "seed": int(m.seed),
            "nmse": float(m.metrics["nmse"]),
            "accuracy_pct": float(m.metrics["accuracy_pct"]),
            "time_s": float(m.timings["total_s"]),
        }
        for m in manifests
    ]


def roi_figures(acc_new: float, acc_base: float, time_new: float, time_base: float) -> dict:
    """Accuracy ROI of the new model over the baseline and its latency reduction, in percent."""
    return {"roi_accuracy_pct": roi(acc_new, acc_base), "roi_time_pct": roi_time(time_base, time_new)}


def _safe_t(a: np.ndarray, b: np.ndarray) -> dict:
    try:
        r = paired_t_test(a, b)
        return {"t": r.statistic, "p": r.p_value, "df": r.df, "note": ""}
    except DegenerateError:
        return {"t": math.nan, "p": math.nan, "df": float(len(a) - 1), "note": "zero-variance differences; t undefined"}


def default_pairs(models: Sequence[str]) -> list[tuple[str, str]]:
    models = sorted(set(models))
    if "hpqrc" in models:
        return [("hpqrc", m) for m in models if m != "hpqrc"]
    return list(itertools.combinations(models, 2))


def compare(rows: list[dict], pairs: Sequence[tuple[str, str]] | None = None) -> list[dict]:
    """Paired statistics per (pair of result sets, dataset, sigma) over matched seeds."""
    by_model: dict[str, dict[tuple, dict]] = {}
    for r in rows:
        by_model.setdefault(r.get("label", r["model"]), {})[(r["dataset"], r["sigma"], r["seed"])] = r
    if len(by_model) < 2:
        raise PairingError(f"comparison needs at least two result sets, found {sorted(by_model) or 'none'}")
    pairs = list(pairs) if pairs else default_pairs(list(by_model))
    out = []
    for a, b in pairs:
        for m in (a, b):
            if m not in by_model:
                raise PairingError(f"result set {m!r} has no runs; available: {', '.join(sorted(by_model))}")
        ka, kb = set(by_model[a]), set(by_model[b])
        missing = [f"{b} lacks {k}" for k in sorted(ka - kb)] + [f"{a} lacks {k}" for k in sorted(kb - ka)]
        if missing:
            raise PairingError(f"unmatched cells for {a} vs {b}: " + "; ".join(missing))
        groups: dict[tuple, list[tuple]] = {}
        for k in sorted(ka):
            groups.setdefault(k[:2], []).append(k)
        for (dataset, sigma), keys in sorted(groups.items()):
            ra = [by_model[a][k] for k in keys]
            rb = [by_model[b][k] for k in keys]
            acc_a = np.array([r["accuracy_pct"] for r in ra])
            acc_b = np.array([r["accuracy_pct"] for r in rb])
            nm_a = np.array([r["nmse"] for r in ra])
            nm_b = np.array([r["nmse"] for r in rb])
            t_a = np.array([r["time_s"] for r in ra])
            t_b = np.array([r["time_s"] for r in rb])
            row = {
                "model_a": a, "model_b": b, "dataset": dataset, "sigma": sigma, "n": len(keys),
                "accuracy_a": float(acc_a.mean()), "accuracy_b": float(acc_b.mean()),
                "nmse_a": float(nm_a.mean()), "nmse_b": float(nm_b.mean()),
                "time_a_s": float(t_a.mean()), "time_b_s": float(t_b.mean()),
            }
            if len(keys) >= 2:
                ta = _safe_t(acc_a, acc_b)
                tn = _safe_t(nm_a, nm_b)
                bs = bootstrap_ci(acc_a - acc_b, N_BOOTSTRAP)
                ci = (bs.ci_low, bs.ci_high)
            else:
                ta = tn = {"t": math.nan, "p": math.nan, "df": 0.0, "note": "single pair; no test"}
                ci = (math.nan, math.nan)
            row.update({
                "t_accuracy": ta["t"], "p_accuracy": ta["p"],
                "t_nmse": tn["t"], "p_nmse": tn["p"], "df": ta["df"],
                "acc_diff_ci95_low": ci[0], "acc_diff_ci95_high": ci[1],
                "note": ta["note"],
            })
            row.update(_roi_or_nan(row))
            out.append(row)
    return out


def _roi_or_nan(row: dict) -> dict:
    r = {"roi_accuracy_pct": math.nan, "roi_time_pct": math.nan}
    if row["accuracy_b"] != 0:
        r["roi_accuracy_pct"] = roi(row["accuracy_a"], row["accuracy_b"])
    if row["time_b_s"] != 0:
        r["roi_time_pct"] = roi_time(row["time_b_s"], row["time_a_s"])
    return r


def compare_summary(rows: list[dict]) -> str:
    k = len(rows)
    lines = [f"Paired comparisons ({ACCURACY_DEFINITION})"]
    for r in rows:
        lines.append(
            f"{r['model_a']} vs {r['model_b']} on {r['dataset']} sigma={r['sigma']:g} (n={r['n']}): "
            f"accuracy {r['accuracy_a']:.3f} vs {r['accuracy_b']:.3f}, "
            f"t={r['t_accuracy']:.3f} p={r['p_accuracy']:.3g}, "
            f"95% CI of difference [{r['acc_diff_ci95_low']:.3f}, {r['acc_diff_ci95_high']:.3f}], "
            f"ROI {r['roi_accuracy_pct']:.2f}%, time ROI {r['roi_time_pct']:.2f}%"
            + (f" [{r['note']}]" if r["note"] else "")
        )
    if k > 1:
        lines.append(f"Multiple comparisons: {k} tests; Bonferroni threshold p < {0.05 / k:.4g} for family-wise 0.05.")
    return "\n".join(lines) + "\n"


def write_csv(path: Path, rows: list[dict], columns: Sequence[str], comment: str | None = None) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in r.items()})
    return path


def _mean_ci(values: np.ndarray) -> tuple[float, float, float]:
    if len(values) < 2:
        v = float(values[0])
        return v, v, v
    r = bootstrap_ci(values, N_BOOTSTRAP)
    return r.statistic, r.ci_low, r.ci_high


def nmse_bars(rows: list[dict]) -> list[dict]:
    """Mean NMSE with a bootstrap 95% CI per (model, dataset), noise-free cells only."""
    groups: dict[tuple, list[float]] = {}
    for r in rows:
        if r["sigma"] == 0:
            groups.setdefault((r["model"], r["dataset"]), []).append(r["nmse"])
    out = []
    for (m, d), v in sorted(groups.items()):
        mean, lo, hi = _mean_ci(np.array(v))
        out.append({"model": m, "dataset": d, "nmse_mean": mean, "ci95_low": lo, "ci95_high": hi})
    return out


def accuracy_vs_sigma(rows: list[dict]) -> list[dict]:
    groups: dict[tuple, list[float]] = {}
    for r in rows:
        groups.setdefault((r["model"], r["dataset"], r["sigma"]), []).append(r["accuracy_pct"])
    out = []
    for (m, d, s), v in sorted(groups.items()):
        a = np.array(v)
        mean, lo, hi = _mean_ci(a)
        std = float(np.std(a, ddof=1)) if len(a) > 1 else math.nan
        out.append({"model": m, "dataset": d, "sigma": s, "n": len(a), "accuracy_mean": mean,
                    "accuracy_std": std, "ci95_low": lo, "ci95_high": hi})
    return out


def time_vs_accuracy(rows: list[dict]) -> list[dict]:
    return sorted(rows, key=lambda r: (r["model"], r["dataset"], r["sigma"], r["seed"]))


def accuracy_vs_epoch(manifests: Iterable[RunManifest]) -> list[dict]:
    out = []
    for m in manifests:
        for e in m.extras.get("epoch_curve", []):
            out.append({"run_id": m.run_id, "model": m.model, "dataset": m.dataset, "sigma": m.sigma,
                        "seed": m.seed, **e})
    return out


REPORT_FILES = {
    "nmse_bars.csv": ("model", "dataset", "nmse_mean", "ci95_low", "ci95_high"),
    "accuracy_vs_sigma.csv": ("model", "dataset", "sigma", "n", "accuracy_mean", "accuracy_std", "ci95_low", "ci95_high"),
    "time_vs_accuracy.csv": ("run_id", "model", "dataset", "sigma", "seed", "time_s", "accuracy_pct", "nmse"),
    "accuracy_vs_epoch.csv": ("run_id", "model", "dataset", "sigma", "seed", "epoch", "train_loss", "test_accuracy_pct"),
}


def write_report(manifests: list[RunManifest], out_dir: str | Path) -> list[Path]:
    if not manifests:
        raise IngestionError("no manifests to report on")
    out_dir = Path(out_dir)
    rows = result_rows(manifests)
    tables = {
        "nmse_bars.csv": nmse_bars(rows),
        "accuracy_vs_sigma.csv": accuracy_vs_sigma(rows),
        "time_vs_accuracy.csv": time_vs_accuracy(rows),
        "accuracy_vs_epoch.csv": accuracy_vs_epoch(manifests),
    }
    paths = []
    for name, table in tables.items():
        comment = None if name == "nmse_bars.csv" else ACCURACY_DEFINITION
        paths.append(write_csv(out_dir / name, table, REPORT_FILES[name], comment))
    return paths
