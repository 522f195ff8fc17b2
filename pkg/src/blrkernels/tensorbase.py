"""Dense tensors, tile configuration, traffic counters and the tiled GEMM.

Tensors are C-contiguous ``float32`` numpy arrays. Every kernel pass reports
what it moved into a :class:`Counters`, split by the role of the array
(input, weight, intermediate, output).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ScratchBudgetExceeded, ShapeError
from .kernels import get_kernels

ROLES = ("input", "weight", "intermediate", "output")
DEFAULT_SCRATCH_BYTES = 192 * 1024
DEFAULT_ELEM_BYTES = 2
SCRATCH_ELEM_BYTES = 4  # scratch holds f32 regardless of the accounted element size
TILE_CHOICES = (16, 32, 64, 128, 256)


def as_tensor(x, name: str = "tensor") -> np.ndarray:
    arr = np.asarray(x)
    if not np.issubdtype(arr.dtype, np.number):
        raise ShapeError(f"{name}: expected a numeric array, got {arr.dtype}")
    return np.ascontiguousarray(arr, dtype=np.float32)


@dataclass(frozen=True)
class TileConfig:
    """Tile sizes for the n, r, p and q loop dimensions, plus the scratch budget."""

    t_n: int = 64
    t_r: int = 64
    t_p: int = 64
    t_q: int = 64
    scratch_bytes: int = DEFAULT_SCRATCH_BYTES

    def __post_init__(self):
        for name in ("t_n", "t_r", "t_p", "t_q"):
            v = getattr(self, name)
            if v not in TILE_CHOICES:
                raise ValueError(f"{name}={v} must be a power of two in [16, 256]")
        if self.scratch_bytes <= 0:
            raise ValueError("scratch_bytes must be positive")

    def require_scratch(self, op: str, elements: int) -> None:
        needed = elements * SCRATCH_ELEM_BYTES
        if needed > self.scratch_bytes:
            raise ScratchBudgetExceeded(op, needed, self.scratch_bytes)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.t_n, self.t_r, self.t_p, self.t_q)


def _zero_roles() -> dict[str, int]:
    return dict.fromkeys(ROLES, 0)


@dataclass
class Counters:
    """FLOP and global-memory traffic recorded by kernel passes.

    Traffic is held in elements and converted with ``elem_bytes``.
    ``tile_reads`` counts every tile load, so operand tiles re-fetched by
    neighbouring tasks show up; ``reads`` counts each region once per kernel
    pass (first touch). Stores are unique within a pass, so ``writes`` serves
    both views.
    """

    elem_bytes: int = DEFAULT_ELEM_BYTES
    flops: int = 0
    tile_reads: dict[str, int] = field(default_factory=_zero_roles)
    reads: dict[str, int] = field(default_factory=_zero_roles)
    writes: dict[str, int] = field(default_factory=_zero_roles)

    def record(self, role: str, *, tile_reads: int = 0, reads: int = 0, writes: int = 0) -> None:
        if role not in ROLES:
            raise KeyError(f"unknown array role {role!r}")
        if min(tile_reads, reads, writes) < 0:
            raise ValueError("counter increments must be non-negative")
        self.tile_reads[role] += int(tile_reads)
        self.reads[role] += int(reads)
        self.writes[role] += int(writes)

    def add_flops(self, flops: int) -> None:
        if flops < 0:
            raise ValueError("counter increments must be non-negative")
        self.flops += int(flops)

    def merge(self, other: "Counters") -> "Counters":
        if other.elem_bytes != self.elem_bytes:
            raise ValueError("cannot merge counters with different element sizes")
        self.flops += other.flops
        for role in ROLES:
            self.tile_reads[role] += other.tile_reads[role]
            self.reads[role] += other.reads[role]
            self.writes[role] += other.writes[role]
        return self

    def __add__(self, other: "Counters") -> "Counters":
        return self.snapshot().merge(other)

    def snapshot(self) -> "Counters":
        return Counters(
            self.elem_bytes, self.flops, dict(self.tile_reads), dict(self.reads), dict(self.writes)
        )

    def reset(self) -> None:
        self.flops = 0
        self.tile_reads = _zero_roles()
        self.reads = _zero_roles()
        self.writes = _zero_roles()

    @property
    def global_bytes_read(self) -> int:
        return sum(self.tile_reads.values()) * self.elem_bytes

    @property
    def global_bytes_written(self) -> int:
        return sum(self.writes.values()) * self.elem_bytes

    def traffic_elements(self, role: str) -> int:
        return self.reads[role] + self.writes[role]

    @property
    def intermediate_elements(self) -> int:
        return self.traffic_elements("intermediate")

    @property
    def intermediate_bytes(self) -> int:
        return self.intermediate_elements * self.elem_bytes

    @property
    def tile_intermediate_elements(self) -> int:
        return self.tile_reads["intermediate"] + self.writes["intermediate"]

    def as_dict(self) -> dict:
        return {
            "elem_bytes": self.elem_bytes,
            "flops": self.flops,
            "tile_reads": dict(self.tile_reads),
            "reads": dict(self.reads),
            "writes": dict(self.writes),
        }


def gemm_footprint(tm: int, tk: int, tn: int) -> int:
    """Scratch elements for one GEMM task: both operand tiles plus the accumulator."""
    return tm * tk + tk * tn + tm * tn


def run_bgemm(
    a: np.ndarray,
    b: np.ndarray,
    c: np.ndarray,
    tiles: tuple[int, int, int],
    counters: Counters,
    roles: tuple[str, str, str],
    *,
    budget: TileConfig,
    op: str = "bgemm",
    transpose_store: bool = False,
) -> None:
    """Launch one batched GEMM pass ``c[b] = a[b] @ b[b]`` and record its traffic.

    ``c`` may be any writable (possibly strided) view; with ``transpose_store``
    each result tile is transposed in scratch and ``c[b]`` is indexed (N, M).
    """
    tm, tk, tn = tiles
    extra = tm * tn if transpose_store else 0
    budget.require_scratch(op, gemm_footprint(tm, tk, tn) + extra)
    k = get_kernels().bgemm(a, b, c, tm, tk, tn, transpose_store)
    counters.add_flops(k[0])
    counters.record(roles[0], tile_reads=k[1], reads=k[2])
    counters.record(roles[1], tile_reads=k[3], reads=k[4])
    counters.record(roles[2], writes=k[5])


def tiled_gemm(
    A,
    B,
    tile: TileConfig | None = None,
    counters: Counters | None = None,
    roles: tuple[str, str, str] = ("input", "weight", "output"),
) -> np.ndarray:
    """``A @ B`` over a grid of (t_n x t_q) output tiles, stepping t_p along k."""
    A = as_tensor(A, "A")
    B = as_tensor(B, "B")
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[0]:
        raise ShapeError(f"tiled_gemm: cannot multiply {A.shape} by {B.shape}")
    tile = tile or TileConfig()
    counters = counters if counters is not None else Counters()
    C = np.empty((A.shape[0], B.shape[1]), np.float32)
    run_bgemm(
        A[None], B[None], C[None], (tile.t_n, tile.t_p, tile.t_q), counters, roles,
        budget=tile, op="tiled_gemm",
    )
    return C


def batched_gemm(
    A,
    B,
    tile: TileConfig | None = None,
    counters: Counters | None = None,
    roles: tuple[str, str, str] = ("input", "weight", "output"),
) -> np.ndarray:
    A = as_tensor(A, "A")
    B = as_tensor(B, "B")
    if A.ndim != 3 or B.ndim != 3 or A.shape[0] != B.shape[0] or A.shape[2] != B.shape[1]:
        raise ShapeError(f"batched_gemm: cannot multiply {A.shape} by {B.shape}")
    tile = tile or TileConfig()
    counters = counters if counters is not None else Counters()
    C = np.empty((A.shape[0], A.shape[1], B.shape[2]), np.float32)
    run_bgemm(
        A, B, C, (tile.t_n, tile.t_p, tile.t_q), counters, roles,
        budget=tile, op="batched_gemm",
    )
    return C


def permute(
    T,
    axes,
    counters: Counters | None = None,
    *,
    src_role: str = "intermediate",
    dst_role: str = "intermediate",
) -> np.ndarray:
    """Materialised permutation: always a full copy, even for the identity."""
    T = np.asarray(T, dtype=np.float32)
    axes = tuple(int(a) for a in axes)
    if sorted(axes) != list(range(T.ndim)):
        raise ShapeError(f"permute: {axes} is not a permutation of {T.ndim} axes")
    out = np.transpose(T, axes).copy(order="C")
    if counters is not None:
        counters.record(src_role, tile_reads=T.size, reads=T.size)
        counters.record(dst_role, writes=T.size)
    return out


def transpose_tile_in_scratch(tile: np.ndarray) -> np.ndarray:
    """Transpose a scratch-resident tile. Touches no global memory, so counts nothing."""
    tile = np.asarray(tile, dtype=np.float32)
    if tile.ndim != 2:
        raise ShapeError("transpose_tile_in_scratch expects a 2-D tile")
    return np.ascontiguousarray(tile.T)
