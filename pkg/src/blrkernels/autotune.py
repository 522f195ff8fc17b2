"""Tile-size sweeps with a result cache.

Each legal candidate is run once after one untimed warm call; the fastest
wins and ties keep the first candidate in sweep order (ascending t_n, then
t_r, t_p, t_q). Results are cached per (path, shape, scratch budget,
candidate grid, backend), so changing any of those re-runs the sweep.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from ._backend import backend_name
from .errors import ScratchBudgetExceeded
from .executors import check_scratch
from .formats import Method, WorkloadSpec, random_factors
from .paths import ALL_FIELDS, get_path
from .tensorbase import DEFAULT_SCRATCH_BYTES, TileConfig

DEFAULT_GRID: dict[str, tuple[int, ...]] = {f: (64, 128) for f in ALL_FIELDS}
# Paths holding a large accumulator per task need smaller tiles to fit scratch:
# the fused low-rank kernel keeps all r columns resident, the partially fused
# BLAST kernel keeps b2 (t_n x t_r) partial sums.
PATH_GRIDS: dict[str, dict[str, tuple[int, ...]]] = {
    "lowrank_fused": {"t_n": (16, 32, 64), "t_p": (16, 32, 64), "t_q": (16, 32, 64)},
    "blast_partial": {"t_n": (16, 32, 64), "t_r": (16, 32, 64), "t_p": (32, 64), "t_q": (64, 128)},
}


def default_grid(path: str) -> dict[str, tuple[int, ...]]:
    return dict(PATH_GRIDS.get(path, DEFAULT_GRID))


def candidate_tiles(
    path: str,
    spec: WorkloadSpec,
    grid: dict[str, tuple[int, ...]] | None = None,
    scratch_bytes: int = DEFAULT_SCRATCH_BYTES,
) -> list[TileConfig]:
    """Legal candidates in sweep order; fields the path ignores stay at their default."""
    p = get_path(path)
    grid = grid or default_grid(path)
    axes = [sorted(set(grid.get(f, (64,)))) if f in p.fields else [64] for f in ALL_FIELDS]
    out = []
    for t_n, t_r, t_p, t_q in itertools.product(*axes):
        tile = TileConfig(t_n, t_r, t_p, t_q, scratch_bytes)
        try:
            check_scratch(path, tile, r=spec.r, b2=spec.b)
        except ScratchBudgetExceeded:
            continue
        out.append(tile)
    return out


class NoLegalTile(ScratchBudgetExceeded):
    def __init__(self, path: str, spec: WorkloadSpec, scratch_bytes: int):
        self.path = path
        self.spec = spec
        self.op = f"autotune:{path}"
        self.needed_bytes = None
        self.budget_bytes = scratch_bytes
        Exception.__init__(
            self, f"{path}: no candidate tile config fits {scratch_bytes} B of scratch "
                  f"for shape n,i,o,r,b={spec.shape}"
        )


@dataclass
class Sweep:
    best: TileConfig
    timings: list[tuple[TileConfig, float]] = field(default_factory=list)
    outputs: list[np.ndarray] = field(default_factory=list)


def synthesize_inputs(path: str, spec: WorkloadSpec, seed: int = 0):
    """Random activations and prepared weights for ``path`` at ``spec``'s shape."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((spec.n, spec.i)).astype(np.float32)
    p = get_path(path)
    weights = random_factors(WorkloadSpec(p.method, *spec.shape), rng)
    return X, p.prepare(weights)


class Autotuner:
    def __init__(self):
        self.cache: dict[tuple, Sweep] = {}
        self.sweeps_run = 0

    @staticmethod
    def key(path, spec, grid, scratch_bytes) -> tuple:
        g = tuple(sorted((k, tuple(sorted(set(v)))) for k, v in grid.items()))
        return (path, spec.method.value, spec.shape, scratch_bytes, g, backend_name())

    def tune(
        self,
        path: str,
        spec: WorkloadSpec,
        *,
        grid: dict[str, tuple[int, ...]] | None = None,
        scratch_bytes: int = DEFAULT_SCRATCH_BYTES,
        inputs=None,
        seed: int = 0,
        keep_outputs: bool = False,
        elem_bytes: int = 2,
    ) -> Sweep:
        grid = grid or default_grid(path)
        key = self.key(path, spec, grid, scratch_bytes)
        hit = self.cache.get(key)
        if hit is not None and (hit.outputs or not keep_outputs):
            return hit
        cands = candidate_tiles(path, spec, grid, scratch_bytes)
        if not cands:
            raise NoLegalTile(path, spec, scratch_bytes)
        if len(cands) == 1 and not keep_outputs:
            sweep = Sweep(cands[0], [(cands[0], float("nan"))])
        else:
            X, weights = inputs if inputs is not None else synthesize_inputs(path, spec, seed)
            run = get_path(path)
            run(X, weights, cands[0], elem_bytes=elem_bytes)          # warm, untimed
            timings, outputs = [], []
            for tile in cands:
                t0 = time.perf_counter()
                res = run(X, weights, tile, elem_bytes=elem_bytes)
                timings.append((tile, time.perf_counter() - t0))
                if keep_outputs:
                    outputs.append(res.Y)
            best = min(range(len(timings)), key=lambda j: (timings[j][1], j))
            sweep = Sweep(timings[best][0], timings, outputs)
        self.sweeps_run += 1
        self.cache[key] = sweep
        return sweep

    def clear(self) -> None:
        self.cache.clear()


_DEFAULT = Autotuner()


def autotune(op_id: str, spec: WorkloadSpec, **kwargs) -> TileConfig:
    """Fastest legal tile config for path ``op_id`` on ``spec``'s shape (cached)."""
    if spec.method is not Method.DENSE and get_path(op_id).method is Method.DENSE:
        spec = WorkloadSpec(Method.DENSE, *spec.shape)
    return _DEFAULT.tune(op_id, spec, **kwargs).best


def default_tuner() -> Autotuner:
    return _DEFAULT
