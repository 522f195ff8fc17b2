"""Oracle equivalence: every path against ``X @ reconstruct_dense(factors)``."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ScratchBudgetExceeded
from .executors import OutputMode, max_fused_rank
from .formats import Method, WorkloadSpec, random_factors, reconstruct_dense
from .paths import get_path, paths_for
from .tensorbase import TileConfig

ORACLE_TOL = 1e-4
BLOCK_CHOICES = (1, 2, 3, 4, 9, 16)
N_CHOICES = (1, 7, 64, 1024)
RANK_RANGE = (4, 1024)
# keeps one structured forward under roughly this many multiply-adds
CASE_FLOP_BUDGET = 4e8


@dataclass(frozen=True)
class OracleCase:
    spec: WorkloadSpec
    seed: int
    mode: OutputMode = OutputMode.CANONICAL


@dataclass
class OracleResult:
    case: OracleCase
    path: str
    rel_err: float
    status: str = "ok"          # ok | mismatch | infeasible
    message: str = ""

    @property
    def passed(self) -> bool:
        return self.status != "mismatch"


def rel_error(Y, ref) -> float:
    ref = np.asarray(ref, np.float64)
    denom = np.linalg.norm(ref)
    diff = np.linalg.norm(np.asarray(Y, np.float64) - ref)
    return float(diff / denom) if denom > 0 else float(diff)


def reference_output(X, weights, mode: OutputMode = OutputMode.CANONICAL) -> np.ndarray:
    """The dense-reconstruction oracle in float64, laid out for ``mode``."""
    W = weights if isinstance(weights, np.ndarray) else reconstruct_dense(weights)
    Y = np.asarray(X, np.float64) @ np.asarray(W, np.float64)
    if mode is OutputMode.TRANSPOSED:
        b2 = weights.b2
        n, o = Y.shape
        Y = Y.reshape(n, b2, o // b2).transpose(0, 2, 1).reshape(n, o)
    return Y


def sample_cases(count: int = 100, seed: int = 0) -> list[OracleCase]:
    """Seeded (method, shape) cases cycling through block counts and token counts.

    Ranks are log-uniform over the rank range with both endpoints forced in
    early; block sizes shrink as n*r grows so each case stays cheap.
    """
    rng = np.random.default_rng(seed)
    methods = (Method.LOWRANK, Method.MONARCH, Method.BLAST, Method.DENSE)
    lo, hi = RANK_RANGE
    cases = []
    for k in range(count):
        method = methods[k % len(methods)]
        b = BLOCK_CHOICES[k % len(BLOCK_CHOICES)] if method in (Method.MONARCH, Method.BLAST) else 1
        n = N_CHOICES[(k // len(BLOCK_CHOICES)) % len(N_CHOICES)]
        if k < 8:
            r = (lo, hi)[k % 2] if k < 4 else int(rng.integers(lo, hi + 1))
        else:
            r = int(round(math.exp(rng.uniform(math.log(lo), math.log(hi)))))
        if method is Method.MONARCH:
            r = max(b, (r // b) * b)
        # widest block sizes that keep the case inside the flop budget
        width = CASE_FLOP_BUDGET / (2 * n * max(r, 1))
        pmax = max(1, int(width // (2 * b)))
        p = int(rng.integers(1, min(160, pmax) + 1))
        q = int(rng.integers(1, min(160, pmax) + 1))
        if method is Method.DENSE:
            p = int(rng.integers(1, 300))
            q = int(rng.integers(1, 300))
            r = 1
        mode = OutputMode.TRANSPOSED if (method in (Method.MONARCH, Method.BLAST) and k % 3 == 0) \
            else OutputMode.CANONICAL
        spec = WorkloadSpec(method, n, b * p, b * q, r, b)
        cases.append(OracleCase(spec, int(rng.integers(2**31)), mode))
    return cases


def _case_tile(rng) -> TileConfig:
    pick = lambda: int(rng.choice((16, 32, 64)))
    return TileConfig(pick(), pick(), pick(), pick())


def run_case(case: OracleCase, paths=None, tol: float = ORACLE_TOL) -> list[OracleResult]:
    spec = case.spec
    rng = np.random.default_rng(case.seed)
    X = rng.standard_normal((spec.n, spec.i)).astype(np.float32)
    weights = random_factors(spec, rng)
    tile = _case_tile(rng)
    ref = {m: reference_output(X, weights, m) for m in {OutputMode.CANONICAL, case.mode}}
    out = []
    for name in paths or paths_for(spec.method):
        path = get_path(name)
        mode = case.mode if path.takes_mode else OutputMode.CANONICAL
        t = tile
        if name == "lowrank_fused":
            t = TileConfig(16, 16, 16, 16)
            if spec.r > max_fused_rank(t):
                out.append(OracleResult(case, name, float("nan"), "infeasible",
                                        f"rank {spec.r} exceeds the fused scratch limit"))
                continue
        try:
            res = path(X, path.prepare(weights), t, mode)
        except ScratchBudgetExceeded as exc:
            out.append(OracleResult(case, name, float("nan"), "infeasible", str(exc)))
            continue
        err = rel_error(res.Y, ref[mode])
        status = "ok" if err <= tol else "mismatch"
        out.append(OracleResult(case, name, err, status))
    return out


def run_oracle_suite(count: int = 100, seed: int = 0, tol: float = ORACLE_TOL,
                     progress=None) -> list[OracleResult]:
    results = []
    for j, case in enumerate(sample_cases(count, seed)):
        rows = run_case(case, tol=tol)
        results.extend(rows)
        if progress is not None:
            progress(j, case, rows)
    return results
