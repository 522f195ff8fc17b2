"""Layer benchmark: autotune, warm up, time, oracle-check and model each path."""
from __future__ import annotations

import csv
import logging
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .autotune import Autotuner, default_grid
from .configs import LayerConfig
from .errors import ScratchBudgetExceeded
from .executors import OutputMode
from .formats import Method, WorkloadSpec, random_factors
from .paths import PATHS, get_path, paths_for
from .roofline import CostReport, HardwareProfile, classify
from .tensorbase import DEFAULT_ELEM_BYTES, DEFAULT_SCRATCH_BYTES
from .verify import ORACLE_TOL, reference_output, rel_error

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "model", "layer", "method", "path", "n", "i", "o", "r", "b",
    "time_median_s", "flops_counted", "flops_modeled",
    "bytes_intermediate_counted", "bytes_modeled", "alpha_modeled", "bound",
    "est_runtime_s", "speedup_vs_dense", "oracle_maxrelerr",
    # trailing diagnostics
    "status", "note",
)

STATUS_OK = "ok"
STATUS_INFEASIBLE = "infeasible"     # no tile config fits the scratch budget
STATUS_ERROR = "error"               # oracle mismatch or unexpected failure


@dataclass
class BenchRow:
    config: LayerConfig
    path: str
    spec: WorkloadSpec
    status: str = STATUS_OK
    note: str = ""
    times: list[float] = field(default_factory=list)
    counters: dict | None = None
    flops_counted: int | None = None
    bytes_intermediate_counted: int | None = None
    cost: CostReport | None = None
    oracle_err: float | None = None
    tile: tuple | None = None
    speedup_vs_dense: float | None = None
    traffic_reduction_vs_baseline: float | None = None

    @property
    def method(self) -> Method:
        return get_path(self.path).method

    @property
    def median(self) -> float | None:
        return statistics.median(self.times) if self.times else None

    @property
    def mean(self) -> float | None:
        return statistics.fmean(self.times) if self.times else None

    @property
    def min(self) -> float | None:
        return min(self.times) if self.times else None


@dataclass
class BenchReport:
    rows: list[BenchRow]
    profile: HardwareProfile | None = None
    warmups: int = 0
    repeats: int = 0
    seed: int = 0

    @property
    def errors(self) -> list[BenchRow]:
        return [r for r in self.rows if r.status == STATUS_ERROR]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def row_values(row: BenchRow) -> list[str]:
    s = row.spec
    c = row.cost
    return [_fmt(v) for v in (
        row.config.model, row.config.layer, row.method.value, row.path,
        s.n, s.i, s.o, s.r, s.b,
        row.median, row.flops_counted, c and c.flops,
        row.bytes_intermediate_counted, c and c.bytes, c and c.alpha, c and c.bound.value,
        c and c.est_runtime_s, row.speedup_vs_dense, row.oracle_err,
        row.status, row.note,
    )]


def emit_csv(report: BenchReport, path) -> None:
    """Header plus one row per (config, path); newline-terminated UTF-8."""
    if hasattr(path, "write"):
        _write_csv(report, path)
        return
    with open(Path(path), "w", encoding="utf-8", newline="") as fh:
        _write_csv(report, fh)


def _write_csv(report: BenchReport, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in report.rows:
        w.writerow(row_values(row))


def _layer_groups(configs):
    groups: dict[tuple, list[LayerConfig]] = {}
    for c in configs:
        groups.setdefault((c.model, c.layer, c.i, c.o, c.n), []).append(c)
    return groups


def _monarch_note(row: BenchRow) -> str:
    s = row.spec
    bnr = s.b * s.n * s.r
    counted = row.counters["reads"]["intermediate"] + row.counters["writes"]["intermediate"]
    return (f"intermediate elements counted {counted} = {counted / bnr:g}bnr; "
            f"cost model assumes 4bnr")


def _run_row(row: BenchRow, X, weights, ref, *, warmups, repeats, tuner, grid,
             scratch_bytes, elem_bytes, tol):
    path = get_path(row.path)
    prepared = path.prepare(weights)
    sweep = tuner.tune(row.path, row.spec, grid=grid or default_grid(row.path),
                       scratch_bytes=scratch_bytes, inputs=(X, prepared), elem_bytes=elem_bytes)
    tile = sweep.best
    row.tile = tile.as_tuple()
    # correctness first: nothing gets timed until its output matches the oracle
    first = path(X, prepared, tile, elem_bytes=elem_bytes)
    err = rel_error(first.Y, ref)
    row.oracle_err = err
    row.counters = first.counters.as_dict()
    row.flops_counted = first.counters.flops
    row.bytes_intermediate_counted = first.counters.intermediate_bytes
    if not err <= tol:
        row.status = STATUS_ERROR
        row.note = f"oracle mismatch: relative error {err:.3e} > {tol:g}"
        return
    for _ in range(max(0, warmups - 1)):
        path(X, prepared, tile, elem_bytes=elem_bytes)
    last = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        last = path(X, prepared, tile, elem_bytes=elem_bytes)
        row.times.append(time.perf_counter() - t0)
    if last is not None:
        err_last = rel_error(last.Y, ref)
        row.oracle_err = max(err, err_last)
        if not err_last <= tol:
            row.status = STATUS_ERROR
            row.note = f"oracle mismatch on a timed run: relative error {err_last:.3e}"


def run_bench(
    configs: list[LayerConfig],
    profile: HardwareProfile,
    paths=None,
    warmups: int = 10,
    repeats: int = 50,
    seed: int = 0,
    *,
    scratch_bytes: int = DEFAULT_SCRATCH_BYTES,
    elem_bytes: int = DEFAULT_ELEM_BYTES,
    max_n: int | None = None,
    grid: dict | None = None,
    tuner: Autotuner | None = None,
    tol: float = ORACLE_TOL,
    include_disabled: bool = False,
    progress=None,
) -> BenchReport:
    """Benchmark every selected path of every enabled config row, batch size 1.

    Each (model, layer) group also gets one dense row as the speedup reference.
    Rows whose path has no tile config inside the scratch budget are reported
    with status ``infeasible``; oracle mismatches get status ``error``.
    """
    if warmups < 1 or repeats < 3:
        raise ValueError("need at least 1 warmup and 3 timed repeats")
    selected = list(PATHS) if paths is None else list(paths)
    for p in selected:
        get_path(p)
    tuner = tuner or Autotuner()
    rows: list[BenchRow] = []
    for gi, ((model, layer, i, o, n_cfg), group) in enumerate(_layer_groups(configs).items()):
        group = [c for c in group if c.bench or include_disabled]
        if not group:
            continue
        n = min(n_cfg, max_n) if max_n else n_cfg
        rng = np.random.default_rng([seed, gi])
        X = rng.standard_normal((n, i)).astype(np.float32)
        dense_row = None
        jobs: list[tuple[BenchRow, object]] = []
        if "dense" in selected:
            spec = WorkloadSpec(Method.DENSE, n, i, o)
            dense_row = BenchRow(LayerConfig(model, layer, i, o, Method.DENSE, n=n), "dense", spec)
            jobs.append((dense_row, random_factors(spec, rng)))
        for ci, cfg in enumerate(group):
            spec = cfg.spec(n)
            weights = random_factors(spec, np.random.default_rng([seed, gi, ci + 1]))
            for p in paths_for(cfg.method):
                if p in selected:
                    jobs.append((BenchRow(cfg, p, spec), weights))
        refs: dict[int, np.ndarray] = {}
        for row, weights in jobs:
            row.cost = classify(row.spec, profile, elem_bytes)
            try:
                ref = refs.get(id(weights))
                if ref is None:
                    ref = refs[id(weights)] = reference_output(X, weights, OutputMode.CANONICAL)
                _run_row(row, X, weights, ref, warmups=warmups, repeats=repeats, tuner=tuner,
                         grid=grid, scratch_bytes=scratch_bytes, elem_bytes=elem_bytes, tol=tol)
            except ScratchBudgetExceeded as exc:
                row.status = STATUS_INFEASIBLE
                row.note = str(exc)
            except Exception as exc:  # a broken row must not take the whole run down
                log.exception("row %s/%s/%s failed", model, layer, row.path)
                row.status = STATUS_ERROR
                row.note = f"{type(exc).__name__}: {exc}"
            if row.path == "monarch_base" and row.counters:
                row.note = row.note or _monarch_note(row)
            rows.append(row)
            if progress is not None:
                progress(row)
        _attach_ratios([r for r, _ in jobs], dense_row)
    return BenchReport(rows, profile, warmups, repeats, seed)


def _attach_ratios(rows: list[BenchRow], dense_row: BenchRow | None) -> None:
    by_path = {(r.config.method, r.path): r for r in rows}
    for r in rows:
        if r.median is None:
            continue
        if dense_row is not None and dense_row.median:
            r.speedup_vs_dense = dense_row.median / r.median
        base_name = get_path(r.path).baseline
        base = by_path.get((r.config.method, base_name)) if base_name else None
        if base is not None and base.bytes_intermediate_counted and r.bytes_intermediate_counted is not None:
            r.traffic_reduction_vs_baseline = (
                base.bytes_intermediate_counted / r.bytes_intermediate_counted
                if r.bytes_intermediate_counted else float("inf")
            )
