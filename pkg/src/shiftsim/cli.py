"""Experiment harness and command line interface.

Subcommands: ``simulate`` (synthetic protocol), ``ngram`` (text corpus
protocol), ``sweep`` (vary one axis), ``alpha-report`` (threshold selection
heuristic), ``dump-truth`` (ground-truth CSV).  Configuration comes from
flags, optionally seeded by a flat ``key=value`` file (flags win).  Every
random stream derives from the master seed and the run index, so rows are
reproducible bit for bit except for the wall-clock column.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 internal error.
The only environment variable read is SHIFTSIM_THREADS (worker processes
for independent runs; default 1).
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import codec, evaluation, ngrams, synthetic
from .estimator import fine_tune, robust_center, shift_estimate, transfer_to_new_cluster
from .model import (
    CENTER_MEDIAN,
    CENTER_TRIMMED,
    Distribution,
    HashedEstimate,
    ShiftConfig,
    ShiftSimError,
)
from .seeds import derive_seed

MODE_SYNTHETIC = "synthetic"
MODE_NGRAM = "ngram"

EST_SHIFT_MEDIAN = "shift-median"
EST_SHIFT_TRIMMED = "shift-trimmed"
EST_LOCAL = "local"
EST_GLOBAL = "global"
ALL_ESTIMATORS = (EST_SHIFT_MEDIAN, EST_SHIFT_TRIMMED, EST_LOCAL, EST_GLOBAL)

CSV_COLUMNS = (
    "mode",
    "estimator",
    "run",
    "seed",
    "d",
    "s",
    "T",
    "n",
    "b",
    "alpha",
    "omega",
    "k",
    "avg_l2_sq",
    "avg_l1",
    "finetuned_mean",
    "wall_ms",
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_INTERNAL = 4


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = MODE_SYNTHETIC
    d: int = 300
    s: int = 5
    T: int = 30
    n: int = 100_000
    n_new: int = 0
    bits: int = 2
    central: str = "uniform"  # "uniform" | "geometric"
    beta: float = 0.95
    estimators: tuple[str, ...] = ALL_ESTIMATORS
    alpha_r: float = 0.0  # threshold alpha = 2^r * ln(n)
    omega: float = 0.1
    repeats: int = 10
    master_seed: int = 0
    corpus_dir: str | None = None
    k: int = 2
    break_windows: bool = False
    output: str | None = None

    def __post_init__(self):
        if self.mode not in (MODE_SYNTHETIC, MODE_NGRAM):
            raise ShiftSimError(f"unknown mode {self.mode!r}")
        if self.central not in ("uniform", "geometric"):
            raise ShiftSimError(f"unknown central distribution {self.central!r}")
        unknown = set(self.estimators) - set(ALL_ESTIMATORS)
        if unknown:
            raise ShiftSimError(f"unknown estimators {sorted(unknown)}")
        if not self.estimators:
            raise ShiftSimError("need at least one estimator")
        if self.repeats < 1:
            raise ShiftSimError("repeats must be at least 1")
        if self.mode == MODE_SYNTHETIC and not 0 <= self.s <= self.d:
            raise ShiftSimError("s must lie in [0, d]")
        if not 1 <= self.bits <= 20:
            raise ShiftSimError("b must lie in [1, 20]")
        if self.n_new < 0:
            raise ShiftSimError("n-new must be nonnegative")
        if self.mode == MODE_NGRAM and self.corpus_dir is None:
            raise ShiftSimError("ngram mode needs --corpus-dir")

    def alpha_for(self, sample_size: int) -> float:
        return 2.0**self.alpha_r * math.log(sample_size)

    def mode_label(self) -> str:
        # beta has no CSV column of its own, so a geometric central is
        # recorded inside the mode field to keep rows self-describing
        if self.mode == MODE_SYNTHETIC and self.central == "geometric":
            return f"synthetic:geom={self.beta:g}"
        return self.mode


@dataclass(frozen=True)
class ResultRow:
    mode: str
    estimator: str
    run: int
    seed: int
    d: int
    s: int
    T: int
    n: int
    b: int
    alpha: float
    omega: float
    k: int
    avg_l2_sq: float
    avg_l1: float
    finetuned_mean: float
    wall_ms: float

    def as_csv(self) -> list[str]:
        values = []
        for name in CSV_COLUMNS:
            v = getattr(self, name)
            values.append(f"{v:.17g}" if isinstance(v, float) else str(v))
        return values


def _central_distribution(cfg: ExperimentConfig) -> Distribution:
    if cfg.central == "geometric":
        return synthetic.truncated_geometric_central(cfg.d, cfg.beta)
    return synthetic.uniform_central(cfg.d)


def _corpus_truths(cfg: ExperimentConfig) -> list[Distribution]:
    corpus = ngrams.load_corpus(cfg.corpus_dir)
    dists = ngrams.corpus_distributions(corpus, cfg.k, cfg.break_windows)
    return [g.dist for g in dists]


def _hash_and_decode(
    truths: list[Distribution],
    n: int,
    bits: int,
    run_seed: int,
) -> list[HashedEstimate]:
    hash_seed = derive_seed(run_seed, "hash")
    out = []
    for t, truth in enumerate(truths):
        data = synthetic.sample_cluster(truth, n, derive_seed(run_seed, "sample", t))
        symbols = codec.encode_cluster(data, t, hash_seed, bits, dim=truth.dim)
        out.append(codec.decode_cluster(symbols, t, hash_seed, bits, truth.dim))
    return out


def _estimate_with(
    name: str,
    hashed: list[HashedEstimate],
    cfg: ExperimentConfig,
    alpha: float,
) -> tuple[list[np.ndarray], float]:
    """Returns (per-cluster estimates, mean fine-tuned entry count or nan)."""
    if name == EST_LOCAL:
        return evaluation.baseline_local(hashed, cfg.bits), math.nan
    if name == EST_GLOBAL:
        pooled = evaluation.baseline_global(hashed, cfg.bits)
        return [pooled] * len(hashed), math.nan
    center = CENTER_MEDIAN if name == EST_SHIFT_MEDIAN else CENTER_TRIMMED
    sc = ShiftConfig(bits=cfg.bits, alpha=alpha, center=center, omega=cfg.omega)
    finals, reports = shift_estimate(hashed, sc)
    return finals, float(np.mean([r.replaced_count for r in reports]))


def run_one(cfg: ExperimentConfig, run: int) -> list[ResultRow]:
    """All rows of one run index (deterministic given cfg and master seed)."""
    run_seed = derive_seed(cfg.master_seed, "run", run)
    if cfg.mode == MODE_NGRAM:
        truths = _corpus_truths(cfg)
        d = truths[0].dim
        T = len(truths)
        s = cfg.s
    else:
        center = _central_distribution(cfg)
        truths, _ = synthetic.generate_clusters(center, cfg.s, cfg.T, run_seed)
        d, T, s = cfg.d, cfg.T, cfg.s
    hashed = _hash_and_decode(truths, cfg.n, cfg.bits, run_seed)
    alpha = cfg.alpha_for(cfg.n)
    k = cfg.k if cfg.mode == MODE_NGRAM else 0

    rows = []
    for name in cfg.estimators:
        start = time.perf_counter()
        estimates, finetuned = _estimate_with(name, hashed, cfg, alpha)
        summary = evaluation.metrics(truths, estimates)
        wall_ms = (time.perf_counter() - start) * 1e3
        rows.append(
            ResultRow(
                mode=cfg.mode_label(),
                estimator=name,
                run=run,
                seed=run_seed,
                d=d,
                s=s,
                T=T,
                n=cfg.n,
                b=cfg.bits,
                alpha=alpha,
                omega=cfg.omega,
                k=k,
                avg_l2_sq=summary.avg_l2_sq,
                avg_l1=summary.avg_l1,
                finetuned_mean=finetuned,
                wall_ms=wall_ms,
            )
        )
    if cfg.n_new > 0 and cfg.mode == MODE_SYNTHETIC:
        rows.extend(_transfer_rows(cfg, run, run_seed, hashed, truths))
    return rows


def _transfer_rows(
    cfg: ExperimentConfig,
    run: int,
    run_seed: int,
    hashed: list[HashedEstimate],
    truths: list[Distribution],
) -> list[ResultRow]:
    """Adapt the learned center to a fresh cluster with n_new datapoints.

    Emits one row per shift center in the config plus the local-only
    baseline computed from the new cluster's n_new samples; the n column of
    these rows is n_new, the sample size the estimate actually used.
    """
    center_dist = _central_distribution(cfg)
    t_new = cfg.T
    if cfg.s == 0:
        truth_new = center_dist
    else:
        truth_new, _ = synthetic.perturb_sparse(
            center_dist, cfg.s, derive_seed(run_seed, "gen", t_new), cluster_id=t_new
        )
    data = synthetic.sample_cluster(truth_new, cfg.n_new, derive_seed(run_seed, "sample", t_new))
    hash_seed = derive_seed(run_seed, "hash")
    symbols = codec.encode_cluster(data, t_new, hash_seed, cfg.bits, dim=truth_new.dim)
    local_new = codec.decode_cluster(symbols, t_new, hash_seed, cfg.bits, truth_new.dim)
    alpha_new = cfg.alpha_for(cfg.n_new)

    rows = []
    centers = []
    if EST_SHIFT_MEDIAN in cfg.estimators:
        centers.append((f"transfer-{CENTER_MEDIAN}", CENTER_MEDIAN))
    if EST_SHIFT_TRIMMED in cfg.estimators:
        centers.append((f"transfer-{CENTER_TRIMMED}", CENTER_TRIMMED))
    for row_name, center_kind in centers:
        start = time.perf_counter()
        sc = ShiftConfig(bits=cfg.bits, center=center_kind, omega=cfg.omega)
        central = robust_center(hashed, sc)
        est = transfer_to_new_cluster(central, local_new, alpha_new)
        summary = evaluation.metrics([truth_new], [est])
        wall_ms = (time.perf_counter() - start) * 1e3
        rows.append(
            ResultRow(
                mode=cfg.mode_label(),
                estimator=row_name,
                run=run,
                seed=run_seed,
                d=cfg.d,
                s=cfg.s,
                T=cfg.T,
                n=cfg.n_new,
                b=cfg.bits,
                alpha=alpha_new,
                omega=cfg.omega,
                k=0,
                avg_l2_sq=summary.avg_l2_sq,
                avg_l1=summary.avg_l1,
                finetuned_mean=math.nan,
                wall_ms=wall_ms,
            )
        )
    start = time.perf_counter()
    est = evaluation.baseline_local([local_new], cfg.bits)[0]
    summary = evaluation.metrics([truth_new], [est])
    wall_ms = (time.perf_counter() - start) * 1e3
    rows.append(
        ResultRow(
            mode=cfg.mode_label(),
            estimator="local-new",
            run=run,
            seed=run_seed,
            d=cfg.d,
            s=cfg.s,
            T=cfg.T,
            n=cfg.n_new,
            b=cfg.bits,
            alpha=alpha_new,
            omega=cfg.omega,
            k=0,
            avg_l2_sq=summary.avg_l2_sq,
            avg_l1=summary.avg_l1,
            finetuned_mean=math.nan,
            wall_ms=wall_ms,
        )
    )
    return rows


def _thread_count() -> int:
    raw = os.environ.get("SHIFTSIM_THREADS", "1")
    try:
        workers = int(raw)
    except ValueError as exc:
        raise ShiftSimError(f"SHIFTSIM_THREADS must be an integer, got {raw!r}") from exc
    if workers < 1:
        raise ShiftSimError("SHIFTSIM_THREADS must be at least 1")
    return workers


def run_experiment(cfg: ExperimentConfig) -> list[ResultRow]:
    """All rows of a config; runs execute independently, output order fixed."""
    workers = _thread_count()
    runs = range(cfg.repeats)
    if workers == 1:
        per_run = [run_one(cfg, r) for r in runs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_run = list(pool.map(run_one, [cfg] * cfg.repeats, runs))
    return [row for rows in per_run for row in rows]


SWEEP_AXES = ("n", "T", "s", "b", "r", "omega")


def sweep(cfg: ExperimentConfig, axis: str, values) -> list[ResultRow]:
    """Repeat the experiment with one config axis overridden per value."""
    if axis not in SWEEP_AXES:
        raise ShiftSimError(f"axis must be one of {SWEEP_AXES}")
    rows = []
    for value in values:
        if axis == "n":
            sub = replace(cfg, n=int(value))
        elif axis == "T":
            sub = replace(cfg, T=int(value))
        elif axis == "s":
            sub = replace(cfg, s=int(value))
        elif axis == "b":
            sub = replace(cfg, bits=int(value))
        elif axis == "r":
            sub = replace(cfg, alpha_r=float(value))
        else:
            sub = replace(cfg, omega=float(value))
        rows.extend(run_experiment(sub))
    return rows


@dataclass(frozen=True)
class AlphaReportRow:
    r: float
    alpha: float
    finetuned_mean: float
    finetuned_union: float


def alpha_report(
    cfg: ExperimentConfig,
    r_values,
    center: str | None = None,
) -> tuple[list[AlphaReportRow], float | None]:
    """Fine-tuned entry counts per threshold exponent r.

    Two statistics per r: ``finetuned_mean``, the average over clusters of
    how many entries kept their local estimate, and ``finetuned_union``, how
    many of the d entries were fine-tuned in at least one cluster.  Hashed
    estimates are decoded once per run and reused across all r.  Returns the
    table and the recommended alpha: the smallest candidate whose union
    count drops below d/2 (None when none qualifies); the union count is the
    one whose d/2 crossing separates good from bad thresholds.
    """
    if center is None:
        center = CENTER_TRIMMED if EST_SHIFT_TRIMMED in cfg.estimators else CENTER_MEDIAN
    r_values = sorted(float(r) for r in r_values)
    mean_counts = np.zeros(len(r_values))
    union_counts = np.zeros(len(r_values))
    dim = None
    for run in range(cfg.repeats):
        run_seed = derive_seed(cfg.master_seed, "run", run)
        if cfg.mode == MODE_NGRAM:
            truths = _corpus_truths(cfg)
        else:
            truths, _ = synthetic.generate_clusters(
                _central_distribution(cfg), cfg.s, cfg.T, run_seed
            )
        dim = truths[0].dim
        hashed = _hash_and_decode(truths, cfg.n, cfg.bits, run_seed)
        sc = ShiftConfig(bits=cfg.bits, center=center, omega=cfg.omega)
        central = robust_center(hashed, sc)
        for i, r in enumerate(r_values):
            alpha = 2.0**r * math.log(cfg.n)
            replaced_anywhere = np.zeros(dim, dtype=bool)
            per_cluster = []
            for h in hashed:
                report = fine_tune(central, h, alpha)[1]
                per_cluster.append(report.replaced_count)
                mask = np.ones(dim, dtype=bool)
                mask[report.kept_central] = False
                replaced_anywhere |= mask
            mean_counts[i] += float(np.mean(per_cluster))
            union_counts[i] += float(replaced_anywhere.sum())
    mean_counts /= cfg.repeats
    union_counts /= cfg.repeats
    rows = [
        AlphaReportRow(
            r=r,
            alpha=2.0**r * math.log(cfg.n),
            finetuned_mean=m,
            finetuned_union=u,
        )
        for r, m, u in zip(r_values, mean_counts, union_counts)
    ]
    recommended = None
    for row in rows:
        if row.finetuned_union < dim / 2:
            recommended = row.alpha
            break
    return rows, recommended


def write_rows(rows: list[ResultRow], output: str | None) -> None:
    fh = open(output, "w", newline="") if output else sys.stdout
    try:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(row.as_csv())
    finally:
        if output:
            fh.close()


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file; flags override it")
    p.add_argument("--d", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--T", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--n-new", type=int, dest="n_new")
    p.add_argument("--b", type=int, dest="bits")
    p.add_argument("--central", choices=("uniform", "geometric"))
    p.add_argument("--beta", type=float)
    p.add_argument("--estimators", help="comma list from: " + ",".join(ALL_ESTIMATORS))
    p.add_argument("--alpha-r", type=float, dest="alpha_r", help="alpha = 2^r ln(n)")
    p.add_argument("--omega", type=float)
    p.add_argument("--repeats", type=int)
    p.add_argument("--master-seed", type=int, dest="master_seed")
    p.add_argument("--corpus-dir", dest="corpus_dir")
    p.add_argument("--k", type=int)
    p.add_argument("--break-windows", action="store_true", default=None, dest="break_windows")
    p.add_argument("--output", "-o")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shiftsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "synthetic-data experiment"),
        ("ngram", "text-corpus k-gram experiment"),
        ("sweep", "vary one axis of the configuration"),
        ("alpha-report", "fine-tuned entry counts per threshold exponent"),
        ("dump-truth", "write ground-truth distributions as CSV"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common_flags(p)
        if name == "sweep":
            p.add_argument("--axis", required=True, choices=SWEEP_AXES)
            p.add_argument("--values", required=True, help="comma-separated axis values")
            p.add_argument("--mode", choices=(MODE_SYNTHETIC, MODE_NGRAM), default=MODE_SYNTHETIC)
        if name == "alpha-report":
            p.add_argument("--r-values", default="-5,-4,-3,-2,-1,0,1,2,3,4", dest="r_values")
            p.add_argument(
                "--center", choices=(CENTER_MEDIAN, CENTER_TRIMMED), default=None
            )
        if name == "dump-truth":
            p.add_argument("--mode", choices=(MODE_SYNTHETIC, MODE_NGRAM), default=MODE_SYNTHETIC)
    return parser


_CONFIG_KEYS = {
    "d": int,
    "s": int,
    "T": int,
    "n": int,
    "n-new": int,
    "b": int,
    "central": str,
    "beta": float,
    "estimators": str,
    "alpha-r": float,
    "omega": float,
    "repeats": int,
    "master-seed": int,
    "corpus-dir": str,
    "k": int,
    "break-windows": lambda v: v.lower() in ("1", "true", "yes"),
    "output": str,
}
_KEY_TO_FIELD = {
    "n-new": "n_new",
    "b": "bits",
    "alpha-r": "alpha_r",
    "master-seed": "master_seed",
    "corpus-dir": "corpus_dir",
    "break-windows": "break_windows",
}


def load_config_file(path) -> dict:
    """Parse a flat key=value file into ExperimentConfig field values."""
    out = {}
    with open(path) as fh:
        for line_no, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ShiftSimError(f"{path}:{line_no}: expected key=value, got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _CONFIG_KEYS:
                raise ShiftSimError(f"{path}:{line_no}: unknown key {key!r}")
            out[_KEY_TO_FIELD.get(key, key)] = _CONFIG_KEYS[key](value)
    return out


def _config_from_args(args: argparse.Namespace, mode: str) -> ExperimentConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(load_config_file(args.config))
    for field_name in (
        "d",
        "s",
        "T",
        "n",
        "n_new",
        "bits",
        "central",
        "beta",
        "alpha_r",
        "omega",
        "repeats",
        "master_seed",
        "corpus_dir",
        "k",
        "break_windows",
        "output",
    ):
        flag_value = getattr(args, field_name, None)
        if flag_value is not None:
            values[field_name] = flag_value
    if getattr(args, "estimators", None):
        values["estimators"] = tuple(
            name.strip() for name in args.estimators.split(",") if name.strip()
        )
    elif isinstance(values.get("estimators"), str):
        values["estimators"] = tuple(
            name.strip() for name in values["estimators"].split(",") if name.strip()
        )
    values["mode"] = mode
    if mode == MODE_NGRAM:
        # paper protocol: 20,000 resampled datapoints; s plays no role
        values.setdefault("n", 20_000)
        values.setdefault("s", 0)
    return ExperimentConfig(**values)


def _parse_values(raw: str, axis: str) -> list:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise ShiftSimError("empty --values")
    caster = float if axis in ("r", "omega") else int
    return [caster(p) for p in parts]


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        if args.command == "simulate":
            cfg = _config_from_args(args, MODE_SYNTHETIC)
            write_rows(run_experiment(cfg), cfg.output)
        elif args.command == "ngram":
            cfg = _config_from_args(args, MODE_NGRAM)
            write_rows(run_experiment(cfg), cfg.output)
        elif args.command == "sweep":
            cfg = _config_from_args(args, args.mode)
            write_rows(sweep(cfg, args.axis, _parse_values(args.values, args.axis)), cfg.output)
        elif args.command == "alpha-report":
            cfg = _config_from_args(args, MODE_SYNTHETIC)
            rows, recommended = alpha_report(
                cfg, _parse_values(args.r_values, "r"), center=args.center
            )
            _write_alpha_report(rows, recommended, cfg.output)
        elif args.command == "dump-truth":
            cfg = _config_from_args(args, args.mode)
            _dump_truth(cfg)
        return EXIT_OK
    except ShiftSimError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


def _write_alpha_report(rows, recommended, output) -> None:
    fh = open(output, "w", newline="") if output else sys.stdout
    try:
        writer = csv.writer(fh)
        writer.writerow(("r", "alpha", "finetuned_mean", "finetuned_union"))
        for row in rows:
            writer.writerow(
                (
                    f"{row.r:g}",
                    f"{row.alpha:.17g}",
                    f"{row.finetuned_mean:.17g}",
                    f"{row.finetuned_union:.17g}",
                )
            )
    finally:
        if output:
            fh.close()
    if recommended is None:
        print("no candidate alpha keeps the fine-tuned count below d/2", file=sys.stderr)
    else:
        print(f"recommended alpha: {recommended:.17g}", file=sys.stderr)


def _dump_truth(cfg: ExperimentConfig) -> None:
    target = cfg.output if cfg.output else sys.stdout
    if cfg.mode == MODE_NGRAM:
        corpus = ngrams.load_corpus(cfg.corpus_dir)
        dists = [g.dist for g in ngrams.corpus_distributions(corpus, cfg.k, cfg.break_windows)]
        synthetic.dump_truth_csv(target, dists, names=list(corpus.names))
    else:
        run_seed = derive_seed(cfg.master_seed, "run", 0)
        truths, _ = synthetic.generate_clusters(
            _central_distribution(cfg), cfg.s, cfg.T, run_seed
        )
        synthetic.dump_truth_csv(target, truths)


if __name__ == "__main__":
    sys.exit(main())
