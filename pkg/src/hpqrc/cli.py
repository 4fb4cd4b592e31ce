"""Command-line benchmark harness: generate | run | sweep | compare | report.

Exit codes: 0 success, 1 validation error, 2 runtime or instability error,
3 sweep finished with failed cells.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import config as cfgmod
from .analysis import compare, compare_summary, result_rows, write_csv, write_report
from .data import LorenzParams, MackeyGlassParams, add_gaussian_noise, gen_lorenz, gen_mackey_glass, write_csv as write_series
from .errors import (
    ConfigurationError,
    DegenerateError,
    DimensionError,
    HpqrcError,
    IngestionError,
    PairingError,
    ParameterError,
    SizingError,
)
from .experiments import cell_config, grid_cells, run_cell, summarize
from .manifest import find_manifests, write_run

log = logging.getLogger("hpqrc")

OUTPUT_ROOT_ENV = "HPQRC_OUTPUT_ROOT"
EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_PARTIAL = 0, 1, 2, 3
_VALIDATION = (ConfigurationError, ParameterError, IngestionError, PairingError, SizingError, DimensionError, DegenerateError)

SWEEP_COLUMNS = ("model", "dataset", "sigma", "seed", "nmse", "accuracy_pct", "time_s", "run_id")
SUMMARY_COLUMNS = ("model", "dataset", "sigma", "n", "nmse_mean", "nmse_std", "accuracy_pct_mean",
                   "accuracy_pct_std", "time_s_mean", "time_s_std")
COMPARE_COLUMNS = ("model_a", "model_b", "dataset", "sigma", "n", "accuracy_a", "accuracy_b", "nmse_a", "nmse_b",
                   "time_a_s", "time_b_s", "t_accuracy", "p_accuracy", "t_nmse", "p_nmse", "df",
                   "acc_diff_ci95_low", "acc_diff_ci95_high", "roi_accuracy_pct", "roi_time_pct", "note")


def _out_root(arg: str | None) -> Path:
    return Path(arg or os.environ.get(OUTPUT_ROOT_ENV) or "runs")


def _load_config(args) -> dict:
    cfg = cfgmod.load(args.config) if getattr(args, "config", None) else cfgmod.validate({})
    overrides = {"seed": getattr(args, "seed", None), "hybrid.topology": getattr(args, "topology", None)}
    sig = getattr(args, "sigma", None)
    if sig is not None:
        if isinstance(sig, list):
            overrides["sweep.sigmas"] = sig
        else:
            overrides["sigma"] = sig
    if getattr(args, "workers", None) is not None:
        overrides["sweep.workers"] = args.workers
    return cfgmod.with_overrides(cfg, **overrides)


def cmd_generate(args) -> int:
    if args.dataset == "mackey_glass":
        p = MackeyGlassParams(tau=args.tau, dt=args.dt or 0.1, history=args.history)
        series = gen_mackey_glass(p, args.steps * args.sample_every).subsample(args.sample_every)
        params = f"tau={p.tau} a={p.a} b={p.b} n={p.n} dt={p.dt} history={p.history} sample_every={args.sample_every}"
    else:
        p = LorenzParams(dt=args.dt or 0.01)
        series = gen_lorenz(p, args.steps * args.sample_every).subsample(args.sample_every)
        params = f"sigma={p.sigma} rho={p.rho} beta={p.beta:.17g} dt={p.dt} init={p.init} sample_every={args.sample_every}"
    if args.sigma:
        series = add_gaussian_noise(series, args.sigma, args.seed)
    path = write_series(series, args.out, [f"dataset={args.dataset} steps={args.steps}", params,
                                          f"noise_sigma={args.sigma} seed={args.seed}"])
    print(f"wrote {len(series)} rows to {path}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _load_config(args)
    result = run_cell(cfg)
    man = write_run(_out_root(args.out), result, cfg)
    m = man.metrics
    print(f"{man.run_id}: nmse={m['nmse']:.6g} accuracy={m['accuracy_pct']:.3f}% features={man.n_features} "
          f"-> {_out_root(args.out) / man.run_id}")
    return EXIT_OK


def _sweep_cell(cfg: dict, cell):
    try:
        return cell, run_cell(cell_config(cfg, cell)), None
    except Exception as exc:  # recorded per cell; the sweep carries on
        return cell, None, f"{type(exc).__name__}: {exc}"


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    out = _out_root(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cells = grid_cells(cfg)
    workers = cfg["sweep"]["workers"]
    rows, failures = [], []

    def collect(cell, result, err):
        # Single collector: only this function touches the output directory.
        if err is not None:
            log.warning("cell %s failed: %s", cell, err)
            failures.append({"model": cell.model, "dataset": cell.dataset, "sigma": cell.sigma, "seed": cell.seed, "error": err})
            return
        man = write_run(out, result, cell_config(cfg, cell))
        rows.append({"model": man.model, "dataset": man.dataset, "sigma": man.sigma, "seed": man.seed,
                     "nmse": man.metrics["nmse"], "accuracy_pct": man.metrics["accuracy_pct"],
                     "time_s": man.timings["total_s"], "run_id": man.run_id})

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for res in pool.map(_sweep_cell, [cfg] * len(cells), cells):
                collect(*res)
    else:
        for cell in cells:
            collect(*_sweep_cell(cfg, cell))

    write_csv(out / "sweep.csv", rows, SWEEP_COLUMNS)
    write_csv(out / "summary.csv", summarize(rows) if rows else [], SUMMARY_COLUMNS)
    if failures:
        write_csv(out / "failures.csv", failures, ("model", "dataset", "sigma", "seed", "error"))
    print(f"sweep: {len(rows)} runs, {len(failures)} failed cells -> {out}")
    return EXIT_PARTIAL if failures else EXIT_OK


def _parse_pairs(specs) -> list[tuple[str, str]] | None:
    if not specs:
        return None
    pairs = []
    for s in specs:
        a, sep, b = s.partition(":")
        if not sep or not a or not b:
            raise ParameterError(f"--pair must look like A:B, got {s!r}")
        pairs.append((a, b))
    return pairs


def cmd_compare(args) -> int:
    rows = []
    for d in args.dirs:
        label = Path(d).name if args.group_by == "dir" else None
        rows.extend(result_rows(find_manifests(d), label))
    table = compare(rows, _parse_pairs(args.pair))
    out = _out_root(args.out)
    write_csv(out / "compare.csv", table, COMPARE_COLUMNS)
    text = compare_summary(table)
    (out / "compare_summary.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return EXIT_OK


def cmd_report(args) -> int:
    paths = write_report(find_manifests(args.dir), args.out or Path(args.dir) / "report")
    for p in paths:
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hpqrc", description="Hybrid photonic-quantum reservoir benchmark harness")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a chaotic series to CSV")
    g.add_argument("dataset", choices=("mackey_glass", "lorenz"))
    g.add_argument("--steps", type=int, default=5000, help="rows to write")
    g.add_argument("--out", required=True, help="output CSV path")
    g.add_argument("--seed", type=int, default=42)
    g.add_argument("--sigma", type=float, default=0.0, help="noise std in normalized units")
    g.add_argument("--tau", type=float, default=17.0)
    g.add_argument("--history", type=float, default=1.2)
    g.add_argument("--dt", type=float, default=None, help="integration step")
    g.add_argument("--sample-every", type=int, default=1)
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="train and evaluate one configured model")
    r.add_argument("--config")
    r.add_argument("--out", help=f"output root (default ${OUTPUT_ROOT_ENV} or ./runs)")
    r.add_argument("--seed", type=int)
    r.add_argument("--topology", choices=("parallel", "sequential"))
    r.add_argument("--sigma", type=float)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run a model x dataset x sigma x seed grid")
    s.add_argument("--config")
    s.add_argument("--out")
    s.add_argument("--seed", type=int)
    s.add_argument("--topology", choices=("parallel", "sequential"))
    s.add_argument("--sigma", type=float, action="append", help="repeat to set the sigma axis")
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("compare", help="paired statistics between result sets")
    c.add_argument("dirs", nargs="+")
    c.add_argument("--pair", action="append", help="A:B, repeatable; default hpqrc against each other set")
    c.add_argument("--group-by", choices=("model", "dir"), default="model")
    c.add_argument("--out")
    c.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="emit plot-data CSVs from manifests")
    p.add_argument("dir")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except _VALIDATION as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (HpqrcError, ArithmeticError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"I/O error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
