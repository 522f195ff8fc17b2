"""Structured weight containers and their static (offline) layout transforms.

Canonical dense semantics: ``W`` is ``(i, o)`` with input blocks ``l`` stacked
along rows and output blocks ``k`` along columns, so ``W[l*p + a, k*q + c]``
is entry ``(a, c)`` of block ``W_{l,k}``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .errors import LayoutError, ShapeError
from .tensorbase import as_tensor


class Method(str, enum.Enum):
    DENSE = "Dense"
    LOWRANK = "LowRank"
    MONARCH = "Monarch"
    BLAST = "Blast"

    @classmethod
    def parse(cls, value) -> "Method":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        for m in cls:
            if m.value.lower() == key:
                return m
        raise ValueError(f"unknown method {value!r}")


class VLayout(str, enum.Enum):
    B2_FASTEST = "b2_fastest"
    RPRIME_FASTEST = "rprime_fastest"


@dataclass(frozen=True)
class WorkloadSpec:
    method: Method
    n: int
    i: int
    o: int
    r: int = 1
    b: int = 1

    def __post_init__(self):
        object.__setattr__(self, "method", Method.parse(self.method))
        for name in ("n", "i", "o", "r", "b"):
            if int(getattr(self, name)) < 1:
                raise ShapeError(f"{name} must be a positive integer")
        if self.method in (Method.MONARCH, Method.BLAST):
            if self.i % self.b or self.o % self.b:
                raise ShapeError(f"b={self.b} must divide i={self.i} and o={self.o}")
        if self.method is Method.MONARCH and self.r % self.b:
            raise ShapeError(f"Monarch needs r={self.r} divisible by b={self.b}")

    @property
    def shape(self) -> tuple[int, int, int, int, int]:
        return (self.n, self.i, self.o, self.r, self.b)


@dataclass(frozen=True)
class LowRankFactors:
    V: np.ndarray  # (i, r)
    U: np.ndarray  # (r, o)

    def __post_init__(self):
        V, U = as_tensor(self.V, "V"), as_tensor(self.U, "U")
        if V.ndim != 2 or U.ndim != 2 or V.shape[1] != U.shape[0]:
            raise ShapeError(f"low-rank factors do not chain: V{V.shape} U{U.shape}")
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "U", U)

    @property
    def rank(self) -> int:
        return self.V.shape[1]

    @property
    def i(self) -> int:
        return self.V.shape[0]

    @property
    def o(self) -> int:
        return self.U.shape[1]


@dataclass(frozen=True)
class MonarchFactors:
    """``V``: (b1, r'*b2, p); ``U``: (b2, q, b1*r') with r' fastest in the last axis."""

    V: np.ndarray
    U: np.ndarray
    b1: int
    b2: int
    r_prime: int
    v_layout: VLayout = VLayout.B2_FASTEST

    def __post_init__(self):
        V, U = as_tensor(self.V, "V"), as_tensor(self.U, "U")
        b1, b2, rp = self.b1, self.b2, self.r_prime
        if V.ndim != 3 or V.shape[:2] != (b1, rp * b2):
            raise ShapeError(f"Monarch V must be (b1, r'*b2, p), got {V.shape}")
        if U.ndim != 3 or U.shape[0] != b2 or U.shape[2] != b1 * rp:
            raise ShapeError(f"Monarch U must be (b2, q, b1*r'), got {U.shape}")
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "v_layout", VLayout(self.v_layout))

    p = property(lambda self: self.V.shape[2])
    q = property(lambda self: self.U.shape[1])
    i = property(lambda self: self.b1 * self.V.shape[2])
    o = property(lambda self: self.b2 * self.U.shape[1])
    rank = property(lambda self: self.r_prime * self.b2)

    def v_blocks(self) -> np.ndarray:
        """V as (b1, b2, r', p) regardless of storage order."""
        b1, b2, rp, p = self.b1, self.b2, self.r_prime, self.p
        if self.v_layout is VLayout.B2_FASTEST:
            return self.V.reshape(b1, rp, b2, p).transpose(0, 2, 1, 3)
        return self.V.reshape(b1, b2, rp, p)


@dataclass(frozen=True)
class BlastFactors:
    """``V``: (b1, p, r); ``S``: (b1, b2, r) diagonals; ``U``: (b2, r, q); ``S_T``: (r, b2, b1)."""

    V: np.ndarray
    S: np.ndarray
    U: np.ndarray
    S_T: np.ndarray | None = None

    def __post_init__(self):
        V, S, U = as_tensor(self.V, "V"), as_tensor(self.S, "S"), as_tensor(self.U, "U")
        if V.ndim != 3 or S.ndim != 3 or U.ndim != 3:
            raise ShapeError("BLAST factors must all be 3-D")
        b1, _, r = V.shape
        b2 = U.shape[0]
        if S.shape != (b1, b2, r) or U.shape[1] != r:
            raise ShapeError(f"BLAST shapes disagree: V{V.shape} S{S.shape} U{U.shape}")
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "U", U)
        if self.S_T is not None:
            S_T = as_tensor(self.S_T, "S_T")
            if S_T.shape != (r, b2, b1) or not np.array_equal(S_T, S.transpose(2, 1, 0)):
                raise LayoutError("S_T must equal S with its first and last axes swapped")
            object.__setattr__(self, "S_T", S_T)

    b1 = property(lambda self: self.V.shape[0])
    b2 = property(lambda self: self.U.shape[0])
    p = property(lambda self: self.V.shape[1])
    q = property(lambda self: self.U.shape[2])
    rank = property(lambda self: self.V.shape[2])
    i = property(lambda self: self.V.shape[0] * self.V.shape[1])
    o = property(lambda self: self.U.shape[0] * self.U.shape[2])


Factors = LowRankFactors | MonarchFactors | BlastFactors


def param_count(spec: WorkloadSpec) -> int:
    i, o, r, b = spec.i, spec.o, spec.r, spec.b
    if spec.method is Method.DENSE:
        return i * o
    if spec.method in (Method.LOWRANK, Method.MONARCH):
        # Monarch: b1*b2*r'*(p+q) with r = r'*b collapses to r*(i+o)
        return r * (i + o)
    return r * (i + o + b * b)


def factors_param_count(f: Factors) -> int:
    if isinstance(f, BlastFactors):
        return f.V.size + f.S.size + f.U.size
    return f.V.size + f.U.size


def reconstruct_dense(f: Factors) -> np.ndarray:
    """Materialise the canonical dense ``(i, o)`` weight the factors represent."""
    if isinstance(f, LowRankFactors):
        return (f.V.astype(np.float64) @ f.U.astype(np.float64)).astype(np.float32)
    if isinstance(f, MonarchFactors):
        vb = f.v_blocks().astype(np.float64)                         # (b1, b2, r', p)
        ub = f.U.reshape(f.b2, f.q, f.b1, f.r_prime).astype(np.float64)  # (b2, q, b1, r')
        # W_lk = vb[l, k]^T @ ub[k, :, l, :]^T
        w = np.swapaxes(vb, 2, 3) @ ub.transpose(2, 0, 3, 1)           # (b1, b2, p, q)
        return w.transpose(0, 2, 1, 3).reshape(f.i, f.o).astype(np.float32)
    if isinstance(f, BlastFactors):
        V, S, U = (a.astype(np.float64) for a in (f.V, f.S, f.U))
        w = (V[:, None] * S[:, :, None, :]) @ U[None]                  # (b1, b2, p, q)
        return w.transpose(0, 2, 1, 3).reshape(f.i, f.o).astype(np.float32)
    raise TypeError(f"not a factor container: {type(f).__name__}")


def relayout_monarch_v(f: MonarchFactors) -> MonarchFactors:
    """Reorder V's middle axis from (r', b2) with b2 fastest to (b2, r') with r' fastest."""
    if f.v_layout is not VLayout.B2_FASTEST:
        raise LayoutError("V is already in the r'-fastest layout")
    V = f.V.reshape(f.b1, f.r_prime, f.b2, f.p).transpose(0, 2, 1, 3)
    return replace(f, V=V.reshape(f.b1, f.b2 * f.r_prime, f.p), v_layout=VLayout.RPRIME_FASTEST)


def restore_monarch_v(f: MonarchFactors) -> MonarchFactors:
    """Inverse of :func:`relayout_monarch_v`."""
    if f.v_layout is not VLayout.RPRIME_FASTEST:
        raise LayoutError("V is already in the b2-fastest layout")
    V = f.V.reshape(f.b1, f.b2, f.r_prime, f.p).transpose(0, 2, 1, 3)
    return replace(f, V=V.reshape(f.b1, f.r_prime * f.b2, f.p), v_layout=VLayout.B2_FASTEST)


def prepermute_downstream_weight(W_next, b2: int, q: int) -> np.ndarray:
    """Reorder rows of the next layer's weight so it consumes the transposed layout.

    With ``Y_c`` flattened as (n, b2, q) and ``Y_t`` the same values flattened
    as (n, q, b2), ``Y_t @ result == Y_c @ W_next``.
    """
    W_next = as_tensor(W_next, "W_next")
    if W_next.ndim != 2 or W_next.shape[0] != b2 * q:
        raise ShapeError(f"W_next must have b2*q={b2 * q} rows, got {W_next.shape}")
    m = W_next.shape[1]
    return np.ascontiguousarray(W_next.reshape(b2, q, m).transpose(1, 0, 2).reshape(b2 * q, m))


def pretranspose_blast_s(f: BlastFactors) -> BlastFactors:
    if f.S_T is not None:
        raise LayoutError("S_T is already present")
    return replace(f, S_T=np.ascontiguousarray(f.S.transpose(2, 1, 0)))


def random_factors(spec: WorkloadSpec, rng: np.random.Generator) -> Factors | np.ndarray:
    """Normal factors scaled by 1/sqrt(fan-in); a dense weight for ``Method.DENSE``."""
    n, i, o, r, b = spec.shape

    def normal(shape, fan_in):
        return (rng.standard_normal(shape) / np.sqrt(fan_in)).astype(np.float32)

    if spec.method is Method.DENSE:
        return normal((i, o), i)
    if spec.method is Method.LOWRANK:
        return LowRankFactors(normal((i, r), i), normal((r, o), r))
    p, q = i // b, o // b
    if spec.method is Method.MONARCH:
        rp = r // b
        return MonarchFactors(normal((b, rp * b, p), p), normal((b, q, b * rp), b * rp), b, b, rp)
    return BlastFactors(normal((b, p, r), p), normal((b, b, r), b), normal((b, r, q), r))
