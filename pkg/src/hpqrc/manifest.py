"""Run manifests: one directory per run plus a top-level index CSV."""

from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import dump
from .errors import IngestionError
from .metrics import ACCURACY_DEFINITION
from .pipeline import HARDWARE_METADATA

MANIFEST_NAME = "manifest.json"
INDEX_NAME = "index.csv"
INDEX_COLUMNS = ("run_id", "model", "dataset", "sigma", "seed", "nmse", "accuracy_pct", "time_s", "path")


@dataclass
class RunManifest:
    run_id: str
    timestamp: str
    model: str
    dataset: str
    sigma: float
    seed: int
    config: dict
    metrics: dict
    timings: dict
    n_features: int
    readout: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)
    hardware: dict = field(default_factory=lambda: dict(HARDWARE_METADATA))
    accuracy_definition: str = ACCURACY_DEFINITION
    version: str = __version__

    def to_json(self) -> str:
        return json.dumps(_jsonable(asdict(self)), indent=2, allow_nan=True)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))

    def save(self, run_dir: str | Path) -> Path:
        path = Path(run_dir) / MANIFEST_NAME
        path.write_text(self.to_json(), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST_NAME
        try:
            return cls.from_json(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError, TypeError) as exc:
            raise IngestionError(f"cannot read manifest {path}: {exc}") from None


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def make_run_id(out_root: Path, model: str, dataset: str, sigma: float, seed: int, config: dict) -> str:
    """Readable, content-derived id; a numeric suffix keeps it unique within ``out_root``."""
    digest = hashlib.sha256(json.dumps(config, sort_keys=True, default=str).encode()).hexdigest()[:8]
    slug = dataset.replace("csv:", "csv-").replace("/", "_").replace("\\", "_")
    base = f"{model}_{slug}_s{sigma:g}_seed{seed}_{digest}"
    run_id, k = base, 1
    while (out_root / run_id).exists():
        k += 1
        run_id = f"{base}-{k}"
    return run_id


def write_run(out_root: str | Path, result, config: dict) -> RunManifest:
    """Persist one cell: manifest, config snapshot and predictions; append to the index."""
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)
    run_id = make_run_id(out_root, result.model, result.dataset, result.sigma, result.seed, config)
    run_dir = out_root / run_id
    run_dir.mkdir()
    (run_dir / "config.yaml").write_text(dump(config), encoding="utf-8")
    pred_path = run_dir / "predictions.csv"
    with pred_path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "target", "prediction"])
        for i, (y, p) in enumerate(zip(result.targets, result.predictions)):
            w.writerow([i, repr(float(y)), repr(float(p))])
    man = RunManifest(
        run_id=run_id,
        timestamp=time.strftime("%Y-%m-%dT%H:%M:%S"),
        model=result.model,
        dataset=result.dataset,
        sigma=result.sigma,
        seed=result.seed,
        config=config,
        metrics=result.metrics,
        timings=result.timings,
        n_features=result.n_features,
        readout=result.readout,
        extras=result.extras,
        artifacts={"config": "config.yaml", "predictions": "predictions.csv", "manifest": MANIFEST_NAME},
    )
    man.save(run_dir)
    append_index(out_root, man)
    return man


def append_index(out_root: Path, man: RunManifest) -> None:
    path = Path(out_root) / INDEX_NAME
    new = not path.exists()
    with path.open("a", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(INDEX_COLUMNS)
        w.writerow([
            man.run_id, man.model, man.dataset, man.sigma, man.seed,
            repr(float(man.metrics["nmse"])), repr(float(man.metrics["accuracy_pct"])), repr(float(man.timings["total_s"])), man.run_id,
        ])


def find_manifests(*dirs: str | Path) -> list[RunManifest]:
    """All manifests below ``dirs``, sorted by run_id for deterministic downstream output."""
    found = []
    for d in dirs:
        d = Path(d)
        if not d.exists():
            raise IngestionError(f"manifest directory {d} does not exist")
        paths = [d / MANIFEST_NAME] if (d / MANIFEST_NAME).exists() else sorted(d.rglob(MANIFEST_NAME))
        found.extend(RunManifest.load(p) for p in paths)
    if not found:
        raise IngestionError(f"no manifests found under {', '.join(str(d) for d in dirs)}")
    return sorted(found, key=lambda m: m.run_id)


def metrics_equal(a: RunManifest, b: RunManifest) -> bool:
    """Bitwise equality of metrics and fitted readout; timings are excluded."""
    def norm(m: RunManifest) -> str:
        return json.dumps(_jsonable({"metrics": m.metrics, "readout": m.readout}), sort_keys=True)

    return norm(a) == norm(b)
