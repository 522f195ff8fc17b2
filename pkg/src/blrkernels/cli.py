"""``blrk`` command line: factor, forward, verify, bench, roofline."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path


from . import tensor_io
from .bench import STATUS_ERROR, emit_csv, run_bench
from .configs import DEFAULT_CONFIG, load_layer_configs
from .errors import BLRError
from .executors import OutputMode
from .factorize import factor_blast, factor_low_rank, factor_monarch
from .formats import (
    BlastFactors, LowRankFactors, Method, MonarchFactors, WorkloadSpec,
)
from .paths import PATHS, get_path
from .roofline import classify, load_profile
from .tensorbase import TILE_CHOICES, TileConfig
from .verify import run_oracle_suite

log = logging.getLogger("blrkernels")

EXIT_OK, EXIT_ROW_ERROR, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _paths_arg(text: str) -> list[str]:
    names = [p.strip() for p in text.split(",") if p.strip()]
    for p in names:
        if p not in PATHS:
            raise argparse.ArgumentTypeError(f"unknown path {p!r} (choose from {', '.join(PATHS)})")
    return names


def _tiles_arg(text: str) -> tuple[int, ...]:
    vals = tuple(int(v) for v in text.split(","))
    bad = [v for v in vals if v not in TILE_CHOICES]
    if bad:
        raise argparse.ArgumentTypeError(f"tile sizes must be powers of two in [16, 256]: {bad}")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--scratch-kib", type=int, default=192, help="per-task scratch budget")
    common.add_argument("--elem-bytes", type=int, default=2, help="bytes per element in cost figures")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = _Parser(prog="blrk", description="Block low-rank linear layer kernels and cost model.")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    f = sub.add_parser("factor", parents=[common], help="factor a dense weight tensor file")
    f.add_argument("weight", type=Path)
    f.add_argument("--method", required=True, choices=["lowrank", "monarch", "blast"])
    f.add_argument("-r", "--rank", type=int, required=True, help="total rank r (Monarch: r = r' * b)")
    f.add_argument("-b", "--blocks", type=int, default=1)
    f.add_argument("--steps", type=int, default=300)
    f.add_argument("--learning-rate", type=float, default=1.0)
    f.add_argument("--out", type=Path, required=True, help="output prefix; writes <prefix>.V.blrt etc.")

    fw = sub.add_parser("forward", parents=[common], help="run one path on tensor files")
    fw.add_argument("--path", required=True, choices=list(PATHS))
    fw.add_argument("--x", type=Path, required=True)
    fw.add_argument("--weights", type=Path, required=True,
                    help="dense weight file, or the prefix written by 'factor'")
    fw.add_argument("--mode", choices=[m.value for m in OutputMode], default="canonical")
    fw.add_argument("--tile", type=_tiles_arg, default=(64, 64, 64, 64),
                    help="t_n,t_r,t_p,t_q (default 64,64,64,64)")
    fw.add_argument("--out", type=Path, required=True)

    v = sub.add_parser("verify", parents=[common], help="run the oracle-equivalence suite")
    v.add_argument("--cases", type=int, default=100)

    for name, helptext in (("bench", "benchmark paths over layer configs"),
                           ("roofline", "print modeled costs for layer configs")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--config", default=DEFAULT_CONFIG)
        p.add_argument("--profile", default="a40_like")
        p.add_argument("--max-n", type=int, default=None, help="cap every row's sequence length")
        p.add_argument("--all-rows", action="store_true", help="include rows marked bench=false")
    b = sub.choices["bench"]
    b.add_argument("--paths", type=_paths_arg, default=None)
    b.add_argument("--warmups", type=int, default=10)
    b.add_argument("--repeats", type=int, default=50)
    b.add_argument("--out", type=Path, default=Path("bench.csv"))
    b.add_argument("--tune-tiles", type=_tiles_arg, default=None,
                   help="candidate sizes for every tuned tile field (default 64,128)")
    return ap


def _write_factors(prefix: Path, f) -> list[Path]:
    parts = {"V": f.V, "U": f.U}
    if isinstance(f, BlastFactors):
        parts["S"] = f.S
    written = []
    for k, arr in parts.items():
        p = prefix.with_name(f"{prefix.name}.{k}.blrt")
        tensor_io.write_tensor(p, arr)
        written.append(p)
    return written


def _read_weights(prefix: Path, method: Method):
    if method is Method.DENSE:
        return tensor_io.read_tensor(prefix)
    part = lambda k: tensor_io.read_tensor(prefix.with_name(f"{prefix.name}.{k}.blrt"))
    V, U = part("V"), part("U")
    if method is Method.LOWRANK:
        return LowRankFactors(V, U)
    if method is Method.MONARCH:
        b1, b2 = V.shape[0], U.shape[0]
        return MonarchFactors(V, U, b1, b2, U.shape[2] // b1)
    return BlastFactors(V, part("S"), U)


def cmd_factor(a) -> int:
    W = tensor_io.read_tensor(a.weight)
    if a.method == "lowrank":
        f = factor_low_rank(W, a.rank)
    elif a.method == "monarch":
        if a.rank % a.blocks:
            raise BLRError(f"Monarch rank {a.rank} must be a multiple of b={a.blocks}")
        f = factor_monarch(W, a.blocks, a.rank // a.blocks)
    else:
        fit = factor_blast(W, a.blocks, a.rank, a.steps, a.learning_rate, seed=a.seed)
        f = fit.factors
        print(f"final loss {fit.loss:.6g} after {len(fit.losses) - 1} steps ({fit.init} init)")
    for p in _write_factors(a.out, f):
        print(p)
    return EXIT_OK


def cmd_forward(a) -> int:
    path = get_path(a.path)
    X = tensor_io.read_tensor(a.x)
    weights = path.prepare(_read_weights(a.weights, path.method))
    t_n, t_r, t_p, t_q = (list(a.tile) + [64] * 4)[:4]
    tile = TileConfig(t_n, t_r, t_p, t_q, a.scratch_kib * 1024)
    res = path(X, weights, tile, OutputMode(a.mode), elem_bytes=a.elem_bytes)
    tensor_io.write_tensor(a.out, res.Y)
    c = res.counters
    print(f"{a.path}: Y{res.Y.shape} flops={c.flops} "
          f"intermediate_bytes={c.intermediate_bytes} wall={res.wall_time:.6f}s")
    return EXIT_OK


def cmd_verify(a) -> int:
    def progress(j, case, rows):
        for r in rows:
            log.info("case %d %s %s: %s %.3e", j, case.spec.method.value, r.path, r.status, r.rel_err)

    results = run_oracle_suite(a.cases, a.seed, progress=progress)
    bad = [r for r in results if not r.passed]
    ok = [r for r in results if r.status == "ok"]
    worst = max((r.rel_err for r in ok), default=0.0)
    print(f"{len(results)} path checks over {a.cases} cases: {len(ok)} ok, "
          f"{len(results) - len(ok) - len(bad)} infeasible, {len(bad)} mismatched; "
          f"worst relative error {worst:.3e}")
    for r in bad:
        print(f"MISMATCH {r.path} {r.case.spec} err={r.rel_err:.3e}")
    return EXIT_ROW_ERROR if bad else EXIT_OK


def _configs(a):
    cfgs = load_layer_configs(a.config)
    return cfgs if a.all_rows else [c for c in cfgs if c.bench]


def cmd_roofline(a) -> int:
    profile = load_profile(a.profile)
    print(f"profile {profile.name}: peak {profile.peak_flops:.4g} FLOP/s, "
          f"bandwidth {profile.mem_bandwidth:.4g} B/s, breakpoint {profile.breakpoint:.1f} FLOP/B")
    head = f"{'model':<14}{'layer':<14}{'method':<9}{'n':>7}{'FLOP':>18}{'bytes':>15}" \
           f"{'alpha':>9}  {'bound':<13}{'est_s':>12}"
    print(head)
    seen = set()
    for c in _configs(a):
        n = min(c.n, a.max_n) if a.max_n else c.n
        specs = [WorkloadSpec(Method.DENSE, n, c.i, c.o)] if (c.model, c.layer) not in seen else []
        seen.add((c.model, c.layer))
        for s in specs + [c.spec(n)]:
            r = classify(s, profile, a.elem_bytes)
            print(f"{c.model:<14}{c.layer:<14}{s.method.value:<9}{n:>7}{r.flops:>18,}{r.bytes:>15,}"
                  f"{r.alpha:>9.1f}  {r.bound.value:<13}{r.est_runtime_s:>12.4e}")
    return EXIT_OK


def cmd_bench(a) -> int:
    profile = load_profile(a.profile)
    grid = {f: a.tune_tiles for f in ("t_n", "t_r", "t_p", "t_q")} if a.tune_tiles else None

    def progress(row):
        t = f"{row.median:.4g}s" if row.median is not None else "-"
        log.info("%s %s %s %s n=%d: %s %s", row.config.model, row.config.layer,
                 row.method.value, row.path, row.spec.n, row.status, t)

    report = run_bench(
        _configs(a), profile, a.paths, a.warmups, a.repeats, a.seed,
        scratch_bytes=a.scratch_kib * 1024, elem_bytes=a.elem_bytes, max_n=a.max_n,
        grid=grid, include_disabled=a.all_rows, progress=progress,
    )
    emit_csv(report, a.out)
    counts = {}
    for r in report.rows:
        counts[r.status] = counts.get(r.status, 0) + 1
    print(f"wrote {len(report.rows)} rows to {a.out} "
          f"({', '.join(f'{v} {k}' for k, v in sorted(counts.items()))})")
    for r in report.errors:
        print(f"ERROR {r.config.model} {r.config.layer} {r.path}: {r.note}", file=sys.stderr)
    return EXIT_ROW_ERROR if any(r.status == STATUS_ERROR for r in report.rows) else EXIT_OK


COMMANDS = {"factor": cmd_factor, "forward": cmd_forward, "verify": cmd_verify,
            "bench": cmd_bench, "roofline": cmd_roofline}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if a.cmd == "bench" and (a.warmups < 1 or a.repeats < 3):
        parser.print_usage(sys.stderr)
        print("blrk: error: bench needs --warmups >= 1 and --repeats >= 3", file=sys.stderr)
        return EXIT_USAGE
    if a.scratch_kib < 1 or a.elem_bytes < 1:
        parser.print_usage(sys.stderr)
        print("blrk: error: --scratch-kib and --elem-bytes must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[a.cmd](a)
    except (BLRError, OSError) as exc:
        print(f"blrk {a.cmd}: {exc}", file=sys.stderr)
        return EXIT_ROW_ERROR


if __name__ == "__main__":
    sys.exit(main())
