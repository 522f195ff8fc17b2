import csv
import io
import json

import pytest

from blrkernels.bench import CSV_COLUMNS, BenchReport, emit_csv, run_bench
from blrkernels.configs import parse_layer_configs
from blrkernels.roofline import load_profile

GOLDEN_HEADER = (
    "model,layer,method,path,n,i,o,r,b,time_median_s,flops_counted,flops_modeled,"
    "bytes_intermediate_counted,bytes_modeled,alpha_modeled,bound,est_runtime_s,"
    "speedup_vs_dense,oracle_maxrelerr,status,note"
)

ROWS = [
    {"model": "toy", "layer": "proj", "i": 64, "o": 96, "method": m, "r": 16, "b": b, "n": 24}
    for m, b in (("LowRank", 1), ("Monarch", 4), ("Blast", 4))
] + [{"model": "toy", "layer": "skip", "i": 32, "o": 32, "method": "LowRank", "r": 4, "bench": False}]


@pytest.fixture(scope="module")
def report():
    cfgs = parse_layer_configs("\n".join(json.dumps(r) for r in ROWS))
    return run_bench(cfgs, load_profile("a40_like"), warmups=1, repeats=3, seed=7)


def _parse(rep):
    buf = io.StringIO()
    emit_csv(rep, buf)
    return buf.getvalue()


def test_golden_header(report):
    text = _parse(report)
    assert text.splitlines()[0] == GOLDEN_HEADER
    assert ",".join(CSV_COLUMNS) == GOLDEN_HEADER
    assert text.endswith("\n")


def test_rows_cover_every_path_and_are_checked(report):
    paths = [r.path for r in report.rows]
    assert paths == ["dense", "lowrank", "lowrank_fused", "monarch_base", "monarch_opt",
                     "blast_base", "blast_partial", "blast_reordered"]
    for r in report.rows:
        assert r.status == "ok", r.note
        assert r.oracle_err is not None and r.oracle_err <= 1e-4
        assert len(r.times) == 3 and r.min <= r.median <= max(r.times)
        assert r.flops_counted == r.cost.flops
    dense = report.rows[0]
    assert dense.speedup_vs_dense == 1.0
    base = next(r for r in report.rows if r.path == "blast_base")
    part = next(r for r in report.rows if r.path == "blast_partial")
    assert part.traffic_reduction_vs_baseline == pytest.approx(4.0)
    assert base.bytes_intermediate_counted == 4 * part.bytes_intermediate_counted
    mon = next(r for r in report.rows if r.path == "monarch_base")
    assert "cost model assumes 4bnr" in mon.note


def test_csv_parses_back(report):
    recs = list(csv.DictReader(io.StringIO(_parse(report))))
    assert len(recs) == len(report.rows)
    for rec, row in zip(recs, report.rows):
        assert int(rec["flops_counted"]) == row.flops_counted
        assert float(rec["time_median_s"]) == row.median
        assert rec["bound"] in ("ComputeBound", "MemoryBound")


def test_empty_report_is_header_only(tmp_path):
    p = tmp_path / "e.csv"
    emit_csv(BenchReport([]), p)
    assert p.read_text(encoding="utf-8") == GOLDEN_HEADER + "\n"


def test_deterministic_apart_from_timing():
    # one candidate per field, so tile choice cannot depend on timing noise
    grid = {f: (32,) for f in ("t_n", "t_r", "t_p", "t_q")}
    cfgs = parse_layer_configs("\n".join(json.dumps(r) for r in ROWS))
    runs = [run_bench(cfgs, load_profile("a40_like"), warmups=1, repeats=3, seed=7, grid=grid)
            for _ in range(2)]
    for a, b in zip(runs[0].rows, runs[1].rows):
        assert (a.path, a.counters, a.oracle_err) == (b.path, b.counters, b.oracle_err)


def test_infeasible_rows_are_reported_not_raised():
    cfgs = parse_layer_configs(json.dumps(
        {"model": "t", "layer": "l", "i": 64, "o": 64, "method": "LowRank", "r": 2048, "n": 4}))
    rep = run_bench(cfgs, load_profile("a40_like"), paths=["lowrank_fused"], warmups=1, repeats=3)
    (row,) = rep.rows
    assert row.status == "infeasible" and "scratch" in row.note
    assert rep.errors == []


def test_argument_checks():
    with pytest.raises(ValueError):
        run_bench([], load_profile("a40_like"), warmups=0)
    with pytest.raises(KeyError):
        run_bench([], load_profile("a40_like"), paths=["warp_drive"])
