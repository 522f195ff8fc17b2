"""Forward passes for dense, low-rank, Monarch and BLAST layers.

Baselines materialise every intermediate and every permutation as a separate
pass, as the reference PyTorch implementations do. The optimized paths fold
permutations into stores or keep intermediates in scratch. Every pass reports
to a fresh :class:`Counters`; arrays are tagged ``input`` (X), ``weight``
(factors), ``intermediate`` (anything between passes) or ``output`` (Y and its
own layout fix-ups).
"""
from __future__ import annotations

import enum
import time
from dataclasses import dataclass

import numpy as np

from .errors import LayoutError, RankTooLargeForScratch, ShapeError
from .formats import BlastFactors, LowRankFactors, MonarchFactors, VLayout
from .kernels import get_kernels
from .tensorbase import (
    DEFAULT_ELEM_BYTES,
    SCRATCH_ELEM_BYTES,
    Counters,
    TileConfig,
    as_tensor,
    gemm_footprint,
    permute,
    run_bgemm,
)

# the S-application stage of the BLAST baseline is an elementwise kernel with fixed tiles
SCALE_SUM_TILE = (16, 16)
# K2 of the reordered BLAST path multiplies tiny (b2 x b1) matrices
SMALL_TILE = 16


class OutputMode(str, enum.Enum):
    CANONICAL = "canonical"    # (n, b2, q): flat column k*q + c
    TRANSPOSED = "transposed"  # (n, q, b2): flat column c*b2 + k


@dataclass
class ForwardResult:
    Y: np.ndarray
    counters: Counters
    wall_time: float
    mode: OutputMode = OutputMode.CANONICAL


def _input(X, i: int) -> np.ndarray:
    X = as_tensor(X, "X")
    if X.ndim != 2 or X.shape[1] != i:
        raise ShapeError(f"X must be (n, {i}), got {X.shape}")
    return X


def _blocks(X: np.ndarray, b1: int) -> np.ndarray:
    """(n, i) -> (b1, n, p) view; no copy."""
    n, i = X.shape
    return X.reshape(n, b1, i // b1).transpose(1, 0, 2)


def _output_view(Y: np.ndarray, b2: int, q: int, mode: OutputMode) -> np.ndarray:
    """A (b2, n, q) window onto the flat (n, o) output for the given layout."""
    n = Y.shape[0]
    if mode is OutputMode.CANONICAL:
        return Y.reshape(n, b2, q).transpose(1, 0, 2)
    return Y.reshape(n, q, b2).transpose(2, 0, 1)


def _finalize(Y3: np.ndarray, mode: OutputMode, counters: Counters) -> np.ndarray:
    """Baseline output fix-up: a materialised copy from (b2, n, q) to the flat layout."""
    b2, n, q = Y3.shape
    axes = (1, 0, 2) if mode is OutputMode.CANONICAL else (1, 2, 0)
    return permute(Y3, axes, counters, src_role="output", dst_role="output").reshape(n, b2 * q)


def _mode(mode) -> OutputMode:
    return OutputMode(mode) if mode is not None else OutputMode.CANONICAL


# -- scratch planning --------------------------------------------------------

def fused_lowrank_footprint(tile: TileConfig, r: int) -> int:
    """Scratch elements for one fully fused task: x, v, resident z, u and y tiles."""
    return tile.t_n * tile.t_p + tile.t_p * r + tile.t_n * r + r * tile.t_q + tile.t_n * tile.t_q


def max_fused_rank(tile: TileConfig) -> int:
    """Largest rank whose (t_n x r) intermediate still fits in scratch with t_r = r."""
    elems = tile.scratch_bytes // SCRATCH_ELEM_BYTES
    fixed = tile.t_n * tile.t_p + tile.t_n * tile.t_q
    per_rank = tile.t_p + tile.t_n + tile.t_q
    return max(0, (elems - fixed) // per_rank)


def scratch_plan(path: str, tile: TileConfig, *, r: int = 1, b2: int = 1) -> dict[str, int]:
    """Scratch elements needed per pass of ``path``."""
    t_n, t_r, t_p, t_q = tile.as_tuple()
    bmm1 = gemm_footprint(t_n, t_p, t_r)
    bmm2 = gemm_footprint(t_n, t_r, t_q)
    if path == "dense":
        return {"gemm": gemm_footprint(t_n, t_p, t_q)}
    if path in ("lowrank", "monarch_base", "monarch_opt"):
        return {"bmm1": bmm1, "bmm2": bmm2}
    if path == "lowrank_fused":
        return {"fused": fused_lowrank_footprint(tile, r)}
    if path == "blast_base":
        sm, sn = SCALE_SUM_TILE
        return {"bmm1": bmm1, "scale_sum": sm * sn + b2 * sn + b2 * sm * sn, "bmm2": bmm2}
    if path == "blast_partial":
        fused = t_n * t_p + t_p * t_r + b2 * t_r + t_n * t_r + b2 * t_n * t_r
        return {"partial_fused": fused, "bmm2": bmm2}
    if path == "blast_reordered":
        return {
            "k1": bmm1 + t_n * t_r,
            "k2": gemm_footprint(SMALL_TILE, SMALL_TILE, t_n),
            "k3": gemm_footprint(t_q, t_r, t_n) + t_q * t_n,
        }
    raise KeyError(f"unknown path {path!r}")


def check_scratch(path: str, tile: TileConfig, *, r: int = 1, b2: int = 1) -> None:
    """Raise before any work if a pass of ``path`` would overflow scratch."""
    for name, elems in scratch_plan(path, tile, r=r, b2=b2).items():
        if path == "lowrank_fused" and elems * SCRATCH_ELEM_BYTES > tile.scratch_bytes:
            raise RankTooLargeForScratch(
                r, max_fused_rank(tile), elems * SCRATCH_ELEM_BYTES, tile.scratch_bytes
            )
        tile.require_scratch(f"{path}:{name}", elems)


# -- dense and low-rank ------------------------------------------------------

def forward_dense(X, W, tile: TileConfig | None = None, *, elem_bytes: int = DEFAULT_ELEM_BYTES):
    W = as_tensor(W, "W")
    if W.ndim != 2:
        raise ShapeError("W must be 2-D")
    X = _input(X, W.shape[0])
    tile = tile or TileConfig()
    check_scratch("dense", tile)
    c = Counters(elem_bytes)
    t0 = time.perf_counter()
    Y = np.empty((X.shape[0], W.shape[1]), np.float32)
    run_bgemm(X[None], W[None], Y[None], (tile.t_n, tile.t_p, tile.t_q), c,
              ("input", "weight", "output"), budget=tile, op="dense")
    return ForwardResult(Y, c, time.perf_counter() - t0)


def forward_lowrank_baseline(X, f: LowRankFactors, tile: TileConfig | None = None, *,
                             elem_bytes: int = DEFAULT_ELEM_BYTES):
    X = _input(X, f.i)
    tile = tile or TileConfig()
    check_scratch("lowrank", tile)
    c = Counters(elem_bytes)
    t0 = time.perf_counter()
    n = X.shape[0]
    Z = np.empty((n, f.rank), np.float32)
    run_bgemm(X[None], f.V[None], Z[None], (tile.t_n, tile.t_p, tile.t_r), c,
              ("input", "weight", "intermediate"), budget=tile, op="lowrank:xv")
    Y = np.empty((n, f.o), np.float32)
    run_bgemm(Z[None], f.U[None], Y[None], (tile.t_n, tile.t_r, tile.t_q), c,
              ("intermediate", "weight", "output"), budget=tile, op="lowrank:zu")
    return ForwardResult(Y, c, time.perf_counter() - t0)


def forward_lowrank_fully_fused(X, f: LowRankFactors, tile: TileConfig | None = None, *,
                                elem_bytes: int = DEFAULT_ELEM_BYTES):
    """Both products in one pass, 1-D tiled over n with the whole rank resident (t_r = r).

    ``tile.t_r`` is ignored. Raises :class:`RankTooLargeForScratch` when the
    resident (t_n x r) intermediate and its operand tiles overflow scratch.
    """
    X = _input(X, f.i)
    tile = tile or TileConfig()
    check_scratch("lowrank_fused", tile, r=f.rank)
    c = Counters(elem_bytes)
    t0 = time.perf_counter()
    Y = np.empty((X.shape[0], f.o), np.float32)
    k = get_kernels().lowrank_fused(X, f.V, f.U, Y, tile.t_n, tile.t_p, tile.t_q)
    c.add_flops(k[0])
    c.record("input", tile_reads=k[1], reads=k[2])
    c.record("weight", tile_reads=k[3] + k[5], reads=k[4] + k[6])
    c.record("output", writes=k[7])
    return ForwardResult(Y, c, time.perf_counter() - t0)


# -- Monarch -----------------------------------------------------------------

def forward_monarch_baseline(X, f: MonarchFactors, mode=OutputMode.CANONICAL,
                             tile: TileConfig | None = None, *,
                             elem_bytes: int = DEFAULT_ELEM_BYTES):
    """bmm1, then the r'<->b2 and b2<->b1 permutations as two copies, then bmm2."""
    if f.v_layout is not VLayout.B2_FASTEST:
        raise LayoutError("the baseline expects V in its original b2-fastest layout")
    mode = _mode(mode)
    X = _input(X, f.i)
    tile = tile or TileConfig()
    check_scratch("monarch_base", tile)
    c = Counters(elem_bytes)
    t0 = time.perf_counter()
    n, b1, b2, rp = X.shape[0], f.b1, f.b2, f.r_prime
    Z1 = np.empty((b1, n, rp * b2), np.float32)
    run_bgemm(_blocks(X, b1), f.V.transpose(0, 2, 1), Z1, (tile.t_n, tile.t_p, tile.t_r), c,
              ("input", "weight", "intermediate"), budget=tile, op="monarch:bmm1")
    Z1 = permute(Z1.reshape(b1, n, rp, b2), (0, 1, 3, 2), c)          # r' <-> b2
    Z2 = permute(Z1, (2, 1, 0, 3), c).reshape(b2, n, b1 * rp)         # b2 <-> b1
    Y3 = np.empty((b2, n, f.q), np.float32)
    run_bgemm(Z2, f.U.transpose(0, 2, 1), Y3, (tile.t_n, tile.t_r, tile.t_q), c,
              ("intermediate", "weight", "output"), budget=tile, op="monarch:bmm2")
    Y = _finalize(Y3, mode, c)
    return ForwardResult(Y, c, time.perf_counter() - t0, mode)


def forward_monarch_optimized(X, f: MonarchFactors, mode=OutputMode.CANONICAL,
                              tile: TileConfig | None = None, *,
                              elem_bytes: int = DEFAULT_ELEM_BYTES):
    """Re-laid-out V, b2<->b1 permutation fused into bmm1's store, output written in place.

    Pair ``TRANSPOSED`` with :func:`~blrkernels.formats.prepermute_downstream_weight`
    when the next op is a static weight multiply.
    """
    if f.v_layout is not VLayout.RPRIME_FASTEST:
        raise LayoutError("apply relayout_monarch_v before the optimized path")
    mode = _mode(mode)
    X = _input(X, f.i)
    tile = tile or TileConfig()
    check_scratch("monarch_opt", tile)
    c = Counters(elem_bytes)
    t0 = time.perf_counter()
    n, b1, b2, rp = X.shape[0], f.b1, f.b2, f.r_prime
    Z = np.empty((b2, n, b1 * rp), np.float32)
    k = get_kernels().monarch_fused_bmm1(
        _blocks(X, b1), f.V.transpose(0, 2, 1), Z, rp, tile.t_n, tile.t_p, tile.t_r
    )
    c.add_flops(k[0])
    c.record("input", tile_reads=k[1], reads=k[2])
    c.record("weight", tile_reads=k[3], reads=k[4])
    c.record("intermediate", writes=k[5])
    Y = np.empty((n, f.o), np.float32)
    run_bgemm(Z, f.U.transpose(0, 2, 1), _output_view(Y, b2, f.q, mode),
              (tile.t_n, tile.t_r, tile.t_q), c, ("intermediate", "weight", "output"),
              budget=tile, op="monarch:bmm2")
    return ForwardResult(Y, c, time.perf_counter() - t0, mode)


# -- BLAST -------------------------------------------------------------------

def forward_blast_baseline(X, f: BlastFactors, mode=OutputMode.CANONICAL,
                           tile: TileConfig | None = None, *,
                           elem_bytes: int = DEFAULT_ELEM_BYTES):
    """bmm1 -> permute -> diagonal scale-and-sum over l -> permute -> bmm2.

    Accounting convention: two bnr-sized tensors are each written and read
    once, and two permutation round-trips copy one bnr tensor each, so the
    intermediate traffic comes to 8*b*n*r elements.
    """
    mode = _mode(mode)
    X = _input(X, f.i)
    tile = tile or TileConfig()
    check_scratch("blast_base", tile, b2=f.b2)
    c = Counters(elem_bytes)
    t0 = time.perf_counter()
    n, b1, b2, r = X.shape[0], f.b1, f.b2, f.rank
    Z1 = np.empty((b1, n, r), np.float32)
    run_bgemm(_blocks(X, b1), f.V, Z1, (tile.t_n, tile.t_p, tile.t_r), c,
              ("input", "weight", "intermediate"), budget=tile, op="blast:bmm1")
    Zp = permute(Z1, (1, 0, 2), c)                                     # (n, b1, r)
    Z2 = np.empty((n, b2, r), np.float32)
    k = get_kernels().blast_scale_sum(Zp, f.S, Z2, *SCALE_SUM_TILE)
    c.add_flops(k[0])
    c.record("intermediate", tile_reads=k[1], reads=k[2])
    c.record("weight", tile_reads=k[3], reads=k[4])
    c.record("intermediate", writes=k[5])
    Z2 = permute(Z2, (1, 0, 2), c)                                     # (b2, n, r)
    Y3 = np.empty((b2, n, f.q), np.float32)
    run_bgemm(Z2, f.U, Y3, (tile.t_n, tile.t_r, tile.t_q), c,
              ("intermediate", "weight", "output"), budget=tile, op="blast:bmm2")
    Y = _finalize(Y3, mode, c)
    return ForwardResult(Y, c, time.perf_counter() - t0, mode)


def forward_blast_partial_fused(X, f: BlastFactors, mode=OutputMode.CANONICAL,
                                tile: TileConfig | None = None, *,
                                elem_bytes: int = DEFAULT_ELEM_BYTES):
    """One pass builds Z'' = sum_l (X_l V_l) * S_l as a batched outer product, then bmm2."""
    mode = _mode(mode)
    X = _input(X, f.i)
    tile = tile or TileConfig()
    check_scratch("blast_partial", tile, b2=f.b2)
    c = Counters(elem_bytes)
    t0 = time.perf_counter()
    n, b2 = X.shape[0], f.b2
    Z = np.empty((b2, n, f.rank), np.float32)
    k = get_kernels().blast_partial_fused(
        _blocks(X, f.b1), f.V, f.S, Z, tile.t_n, tile.t_p, tile.t_r
    )
    c.add_flops(k[0])
    c.record("input", tile_reads=k[1], reads=k[2])
    c.record("weight", tile_reads=k[3] + k[5], reads=k[4] + k[6])
    c.record("intermediate", writes=k[7])
    Y = np.empty((n, f.o), np.float32)
    run_bgemm(Z, f.U, _output_view(Y, b2, f.q, mode), (tile.t_n, tile.t_r, tile.t_q), c,
              ("intermediate", "weight", "output"), budget=tile, op="blast:bmm2")
    return ForwardResult(Y, c, time.perf_counter() - t0, mode)


def forward_blast_reordered(X, f: BlastFactors, mode=OutputMode.CANONICAL,
                            tile: TileConfig | None = None, *,
                            elem_bytes: int = DEFAULT_ELEM_BYTES,
                            keep_transposed: bool = False):
    """Three GEMM passes with n kept contiguous; tiles are transposed in scratch.

    K1 stores (X_l V_l)^T tiles into A (r, b1, n); K2 computes
    S_T[rho] @ A[rho] into B (b2, r, n); K3 computes U_k^T @ B[k] and
    transposes each tile back into Y. With ``keep_transposed`` the last
    transpose is skipped and Y is returned as (o, n) for a chained layer
    that also wants n contiguous.
    """
    if f.S_T is None:
        raise LayoutError("apply pretranspose_blast_s before the reordered path")
    mode = _mode(mode)
    X = _input(X, f.i)
    tile = tile or TileConfig()
    check_scratch("blast_reordered", tile, b2=f.b2)
    c = Counters(elem_bytes)
    t0 = time.perf_counter()
    n, b1, b2, r, q = X.shape[0], f.b1, f.b2, f.rank, f.q
    A = np.empty((r, b1, n), np.float32)
    run_bgemm(_blocks(X, b1), f.V, A.transpose(1, 0, 2), (tile.t_n, tile.t_p, tile.t_r), c,
              ("input", "weight", "intermediate"), budget=tile, op="blast:k1",
              transpose_store=True)
    B = np.empty((b2, r, n), np.float32)
    run_bgemm(f.S_T, A, B.transpose(1, 0, 2), (SMALL_TILE, SMALL_TILE, tile.t_n), c,
              ("weight", "intermediate", "intermediate"), budget=tile, op="blast:k2")
    Ut = f.U.transpose(0, 2, 1)                                        # (b2, q, r)
    if keep_transposed:
        Yt = np.empty((f.o, n), np.float32)
        dest = Yt.reshape(b2, q, n) if mode is OutputMode.CANONICAL \
            else Yt.reshape(q, b2, n).transpose(1, 0, 2)
        run_bgemm(Ut, B, dest, (tile.t_q, tile.t_r, tile.t_n), c,
                  ("weight", "intermediate", "output"), budget=tile, op="blast:k3")
        return ForwardResult(Yt, c, time.perf_counter() - t0, mode)
    Y = np.empty((n, f.o), np.float32)
    run_bgemm(Ut, B, _output_view(Y, b2, q, mode), (tile.t_q, tile.t_r, tile.t_n), c,
              ("weight", "intermediate", "output"), budget=tile, op="blast:k3",
              transpose_store=True)
    return ForwardResult(Y, c, time.perf_counter() - t0, mode)
