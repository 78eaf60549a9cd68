"""Command-line interface: ``markovtest {test,order,simulate,bench,deseason}``.

Machine-readable output goes to stdout or ``--output``; progress and
diagnostics go to stderr.  Exit status is 0 on completion, 2 for usage or
input errors and 1 for runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import sim_models as sim
from .engine import TestConfig, estimate_order, run_test
from .errors import ConfigurationError, InputError, MarkovTestError, StageError
from .mdn import COLUMN_TYPES
from .series import TimeSeries, deseasonalize, format_csv, read_csv

log = logging.getLogger("markovtest")

DESK = {"B": 200, "M": 50, "n_boot": 1000, "g_grid": (1, 2, 3)}
PAPER = {"B": 1000, "M": 100, "n_boot": 2000, "g_grid": (1, 2, 3, 5, 8)}
VARIANTS = {"dr": "doubly_robust", "plugin": "plugin"}


def _int_list(text: str) -> list:
    """``"1,2,3"`` or ``"1..5"`` (inclusive) to a list of ints."""
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = text.split("..")
            values = list(range(int(lo), int(hi) + 1))
        else:
            values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers like 1,2,3 or 1..5, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty integer list")
    return values


def _column_types(text: str) -> list:
    kinds = [v.strip() for v in text.split(",")]
    for kind in kinds:
        if kind not in COLUMN_TYPES:
            raise argparse.ArgumentTypeError(f"unknown column type {kind!r}; choose from {COLUMN_TYPES}")
    return kinds


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--L", type=int, default=None)
    p.add_argument("--B", type=int, default=None)
    p.add_argument("--M", type=int, default=None)
    p.add_argument("--Q", type=int, default=None)
    p.add_argument("--G", type=int, default=None, help="fix the mixture size instead of cross-validating")
    p.add_argument("--n-boot", type=int, default=None)
    p.add_argument("--variant", choices=sorted(VARIANTS), default="dr")
    p.add_argument("--test-dims", type=_int_list, default=None,
                   help="0-based columns whose next-step law is tested, e.g. 0,2")
    p.add_argument("--quantile-level", type=float, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-timing", action="store_true", help="omit runtime_seconds for byte-stable output")


def _config(args, base: Optional[dict] = None) -> TestConfig:
    values = dict(base or {})
    for name, attr in (("L", "L"), ("B", "B"), ("M", "M"), ("Q", "Q"), ("n_boot", "n_boot")):
        v = getattr(args, attr)
        if v is not None:
            values[name] = v
    values.update(alpha=args.alpha, seed=args.seed, G=args.G, variant=VARIANTS[args.variant],
                  quantile_level=args.quantile_level, workers=args.workers)
    if args.test_dims is not None:
        values["test_dims"] = tuple(args.test_dims)
    return TestConfig(**values)


def _load(args) -> TimeSeries:
    series = read_csv(args.input)
    if getattr(args, "column_types", None):
        if len(args.column_types) != series.d:
            raise InputError(f"--column-types lists {len(args.column_types)} kinds for {series.d} columns")
        series = TimeSeries(series.values, args.column_types, series.names)
    return series


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def cmd_test(args) -> int:
    series = _load(args)
    report = run_test(series, _config(args), k=args.k)
    for note in report.warnings:
        log.warning(note)
    _emit(report.to_json(timing=not args.no_timing) + "\n", args.output)
    return 0


def cmd_order(args) -> int:
    series = _load(args)
    report = estimate_order(series, _config(args), k_max=args.k_max)
    _emit(report.to_json(timing=not args.no_timing) + "\n", args.output)
    return 0


def cmd_simulate(args) -> int:
    model = sim.paper_model(args.model, noise_is_variance=args.noise_is_variance)
    series = sim.simulate(model, args.T, burn_in=args.burn_in, rng=args.seed)
    _emit(format_csv(series.values, [f"x{j + 1}" for j in range(series.d)]), args.output)
    return 0


def cmd_deseason(args) -> int:
    series = read_csv(args.input)
    out = deseasonalize(series.values, args.period)
    _emit(format_csv(out, series.names), args.output)
    return 0


# ---------------------------------------------------------------------------
# bench


@dataclass(frozen=True)
class BenchTask:
    model_id: int
    T: int
    k: int
    replication: int
    seed: int
    noise_is_variance: bool
    config: TestConfig


def run_replication(task: BenchTask) -> dict:
    """Simulate one path and test it; failures are returned, not raised."""
    row = {"T": task.T, "k": task.k, "replication": task.replication, "seed": task.seed}
    try:
        model = sim.paper_model(task.model_id, noise_is_variance=task.noise_is_variance)
        series = sim.simulate(model, task.T, rng=task.seed)
        report = run_test(series, replace(task.config, seed=task.seed), k=task.k)
        row.update(reject=report.reject, p_value=report.p_value, statistic=report.statistic,
                   error=None)
    except Exception as exc:  # recorded per row; the run continues
        row.update(reject=None, p_value=None, statistic=None, error=f"{type(exc).__name__}: {exc}")
    return row


def run_bench(model_id: int, T_list, k_list, R: int, config: TestConfig, base_seed: int = 0,
              workers: int = 1, noise_is_variance: bool = False, progress=None) -> list:
    """Replication results for every (T, k), ordered by (T, k, replication)."""
    if R < 1:
        raise ConfigurationError("R must be at least 1")
    tasks = [BenchTask(model_id, int(T), int(k), r, base_seed + r, noise_is_variance, config)
             for T in T_list for k in k_list for r in range(R)]
    if workers == 1:
        results = []
        for i, task in enumerate(tasks):
            results.append(run_replication(task))
            if progress:
                progress(i + 1, len(tasks))
        return results
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = []
        for i, row in enumerate(pool.map(run_replication, tasks, chunksize=1)):
            results.append(row)
            if progress:
                progress(i + 1, len(tasks))
        return results


def rejection_table(model_id: int, results: list) -> list:
    """One row per (T, k): rejection fraction, mean p-value and failure count."""
    groups = {}
    for row in results:
        groups.setdefault((row["T"], row["k"]), []).append(row)
    table = []
    for (T, k), rows in sorted(groups.items()):
        ok = [r for r in rows if r["error"] is None]
        table.append({
            "model": model_id, "T": T, "k": k, "R": len(rows), "failures": len(rows) - len(ok),
            "rejection_fraction": float(np.mean([r["reject"] for r in ok])) if ok else float("nan"),
            "mean_p_value": float(np.mean([r["p_value"] for r in ok])) if ok else float("nan"),
        })
    return table


def table_csv(table: list) -> str:
    buf = io.StringIO()
    fields = ["model", "T", "k", "R", "failures", "rejection_fraction", "mean_p_value"]
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in table:
        writer.writerow({f: (repr(row[f]) if isinstance(row[f], float) else row[f]) for f in fields})
    return buf.getvalue()


def cmd_bench(args) -> int:
    base = dict(PAPER if args.paper_scale else DESK)
    config = _config(args, base)
    start = time.perf_counter()
    # the per-replication truncation notice would drown the progress lines
    logging.getLogger("markovtest.series").setLevel(logging.ERROR)

    def progress(done, total):
        if done == total or done % max(1, total // 20) == 0:
            log.info("bench: %d/%d replications", done, total)

    results = run_bench(args.model, args.T, args.k_range, args.R, config, args.seed,
                        args.workers, args.noise_is_variance, progress)
    table = rejection_table(args.model, results)
    csv_text = table_csv(table)
    doc = {"model": args.model, "T": args.T, "k": args.k_range, "R": args.R,
           "base_seed": args.seed, "config": dict(config.echo(), G=config.G,
                                                  g_grid=list(config.g_grid)),
           "table": table, "replications": results}
    if not args.no_timing:
        doc["wall_seconds"] = time.perf_counter() - start
    if args.output:
        stem = args.output[:-4] if args.output.endswith(".csv") else args.output
        with open(stem + ".csv", "w") as fh:
            fh.write(csv_text)
        with open(stem + ".json", "w") as fh:
            json.dump(doc, fh, indent=2)
    else:
        sys.stdout.write(csv_text)
    failed = sum(r["error"] is not None for r in results)
    if failed:
        log.warning("%d of %d replications failed", failed, len(results))
    return 1 if failed > 0.05 * len(results) else 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="markovtest", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="test the Markov property of a CSV series")
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.add_argument("--k", type=int, default=1, help="lag embedding order to test")
    p.add_argument("--column-types", type=_column_types, default=None)
    _add_config_flags(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("order", help="estimate the Markov order of a CSV series")
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.add_argument("--k-max", type=int, default=5)
    p.add_argument("--column-types", type=_column_types, default=None)
    _add_config_flags(p)
    p.set_defaults(func=cmd_order)

    p = sub.add_parser("simulate", help="simulate one of the three benchmark models to CSV")
    p.add_argument("--model", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--burn-in", type=int, default=sim.DEFAULT_BURN_IN)
    p.add_argument("--noise-is-variance", action="store_true")
    p.add_argument("--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="rejection-rate table over simulated replications")
    p.add_argument("--model", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--T", type=_int_list, default=[500])
    p.add_argument("--k-range", type=_int_list, default=list(range(1, 6)))
    p.add_argument("--R", type=int, default=100)
    p.add_argument("--paper-scale", action="store_true",
                   help="B=1000, M=100, n_boot=2000 and the full G grid")
    p.add_argument("--noise-is-variance", action="store_true")
    p.add_argument("--output", help="path stem; writes <stem>.csv and <stem>.json")
    _add_config_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("deseason", help="subtract per-phase means for a given period")
    p.add_argument("--input", required=True)
    p.add_argument("--period", type=int, required=True)
    p.add_argument("--output")
    p.set_defaults(func=cmd_deseason)
    return parser


def _is_usage(exc: BaseException) -> bool:
    if isinstance(exc, StageError):
        exc = exc.cause
    return isinstance(exc, (ConfigurationError, InputError, OSError))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (MarkovTestError, OSError, ValueError) as exc:
        print(f"markovtest {args.command}: {exc}", file=sys.stderr)
        return 2 if _is_usage(exc) else 1
    except Exception as exc:
        print(f"markovtest {args.command}: unexpected {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
