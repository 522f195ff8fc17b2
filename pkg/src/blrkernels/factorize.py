"""Fit structured factors to a dense weight.

Low-rank and Monarch fits are truncated SVDs (global and per block). The BLAST
fit minimises ``sum_{l,k} ||W_lk - V_l diag(s_lk) U_k||_F^2`` by block
coordinate descent where each factor's gradient is preconditioned by the Gram
matrix of the other factors; at ``learning_rate=1`` every step is the exact
least-squares update for that factor.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import FactorizationDiverged, ShapeError
from .formats import BlastFactors, LowRankFactors, MonarchFactors, VLayout
from .tensorbase import as_tensor

log = logging.getLogger(__name__)


def _check_matrix(W) -> np.ndarray:
    W = as_tensor(W, "W")
    if W.ndim != 2:
        raise ShapeError(f"expected a 2-D weight, got shape {W.shape}")
    if not np.all(np.isfinite(W)):
        raise ShapeError("weight contains non-finite values")
    return W


def _check_blocks(i: int, o: int, b: int) -> tuple[int, int]:
    if b < 1 or i % b or o % b:
        raise ShapeError(f"b={b} must divide i={i} and o={o}")
    return i // b, o // b


def factor_low_rank(W, r: int) -> LowRankFactors:
    """Best rank-``r`` approximation; singular values are folded into V."""
    W = _check_matrix(W)
    i, o = W.shape
    if r < 1:
        raise ShapeError("rank must be positive")
    u, s, vt = np.linalg.svd(W.astype(np.float64), full_matrices=False)
    k = min(r, s.size)
    V = np.zeros((i, r))
    U = np.zeros((r, o))
    V[:, :k] = u[:, :k] * s[:k]
    U[:k] = vt[:k]
    return LowRankFactors(V, U)


def factor_monarch(W, b: int, r_prime: int) -> MonarchFactors:
    """Rank-``r_prime`` SVD of every block, packed with b2 fastest in V."""
    W = _check_matrix(W)
    i, o = W.shape
    p, q = _check_blocks(i, o, b)
    if r_prime < 1:
        raise ShapeError("r_prime must be positive")
    Wb = W.astype(np.float64).reshape(b, p, b, q).transpose(0, 2, 1, 3)
    u, s, vt = np.linalg.svd(Wb, full_matrices=False)  # batched over (l, k)
    k = min(r_prime, s.shape[-1])
    root = np.sqrt(s[..., :k])
    vb = np.zeros((b, b, r_prime, p))
    ub = np.zeros((b, q, b, r_prime))
    vb[:, :, :k] = np.swapaxes(u[..., :k] * root[..., None, :], 2, 3)
    # ub[k, c, l, j] = sqrt(s_j) * vt[l, k, j, c]
    ub[..., :k] = (vt[..., :k, :] * root[..., None]).transpose(1, 3, 0, 2)
    V = vb.transpose(0, 2, 1, 3).reshape(b, r_prime * b, p)
    return MonarchFactors(V, ub.reshape(b, q, b * r_prime), b, b, r_prime, VLayout.B2_FASTEST)


@dataclass
class BlastFit:
    factors: BlastFactors
    loss: float
    losses: list[float] = field(default_factory=list)
    init: str = "svd"


def _blast_blocks(W: np.ndarray, b: int) -> np.ndarray:
    i, o = W.shape
    p, q = _check_blocks(i, o, b)
    return W.astype(np.float64).reshape(b, p, b, q).transpose(0, 2, 1, 3)  # (l, k, p, q)


def _recon(V, S, U):
    return (V[:, None] * S[:, :, None, :]) @ U[None]


def _loss(Wb, V, S, U) -> float:
    # overflow surfaces as a non-finite loss, which the caller reports
    with np.errstate(over="ignore", invalid="ignore"):
        return 0.5 * float(np.sum((_recon(V, S, U) - Wb) ** 2))


def _right_solve(P, G):
    """``G @ inv(P)`` for stacks of small SPD matrices, lightly regularised."""
    r = P.shape[-1]
    eps = 1e-12 * np.trace(P, axis1=-2, axis2=-1)[..., None, None] / r + 1e-300
    return np.swapaxes(np.linalg.solve(P + eps * np.eye(r), np.swapaxes(G, -1, -2)), -1, -2)


def _s_step(V, U, M):
    """Preconditioned gradient for the diagonals given a residual-like ``M``."""
    G = np.diagonal(np.swapaxes(V, 1, 2)[:, None] @ M @ np.swapaxes(U, 1, 2)[None], axis1=2, axis2=3)
    H = (np.swapaxes(V, 1, 2) @ V)[:, None] * (U @ np.swapaxes(U, 1, 2))[None]
    return _right_solve(H, G[..., None, :])[..., 0, :]


def _top_left(m: np.ndarray, r: int) -> np.ndarray:
    u = np.linalg.svd(m, full_matrices=False)[0]
    out = np.zeros((m.shape[0], r))
    k = min(r, u.shape[1])
    out[:, :k] = u[:, :k]
    return out


def _aligned_init(Wb, r, rng):
    """Recover the shared rank index from the projected r x r block cores.

    With block-row basis ``P_l`` and block-column basis ``Q_k`` each core
    ``P_l^T W_lk Q_k^T`` factors as ``A_l diag(s_lk) B_k``, so the product
    ``C_00 C_10^-1 C_11 C_01^-1`` is diagonalised by ``A_0``. Row 0 then fixes
    U and column 0 fixes the remaining V blocks with one consistent ordering.
    """
    b1, b2, p, q = Wb.shape
    P = [_top_left(Wb[l].transpose(1, 0, 2).reshape(p, b2 * q), r) for l in (0, 1)]
    Q = [_top_left(Wb[:, k].reshape(b1 * p, q).T, r).T for k in (0, 1)]
    core = [[P[l].T @ Wb[l, k] @ Q[k].T for k in (0, 1)] for l in (0, 1)]
    T = core[0][0] @ np.linalg.pinv(core[1][0]) @ core[1][1] @ np.linalg.pinv(core[0][1])
    w, A = np.linalg.eig(T)
    V0 = P[0] @ A.real
    V0 /= np.maximum(np.linalg.norm(V0, axis=0), 1e-300)
    U = np.linalg.pinv(V0)[None] @ Wb[0]
    V = np.swapaxes(np.linalg.pinv(U[0]).T[None] @ np.swapaxes(Wb[:, 0], 1, 2), 1, 2)
    return V, U


def _subspace_init(Wb, r, rng):
    b1, b2, p, q = Wb.shape
    V = np.stack([_top_left(Wb[l].transpose(1, 0, 2).reshape(p, b2 * q), r) for l in range(b1)])
    U = np.stack([_top_left(Wb[:, k].reshape(b1 * p, q).T, r).T for k in range(b2)])
    # rank beyond the block size: the spare directions start random, not zero
    if r > p:
        V[:, :, p:] = rng.standard_normal((b1, p, r - p)) / np.sqrt(p)
    if r > q:
        U[:, q:, :] = rng.standard_normal((b2, r - q, q)) / np.sqrt(q)
    return V, U


def _global_init(Wb, r, rng):
    # one of b1, b2 is 1: the whole weight is plainly rank r
    b1, b2, p, q = Wb.shape
    u, s, vt = np.linalg.svd(Wb.transpose(0, 2, 1, 3).reshape(b1 * p, b2 * q), full_matrices=False)
    k = min(r, s.size)
    L = np.zeros((b1 * p, r))
    R = np.zeros((r, b2 * q))
    L[:, :k] = u[:, :k] * s[:k]
    R[:k] = vt[:k]
    return L.reshape(b1, p, r), R.reshape(r, b2, q).transpose(1, 0, 2)


def _initial_factors(Wb, r, rng):
    b1, b2, p, q = Wb.shape
    if b1 == 1 or b2 == 1:
        inits = [("global_svd", _global_init)]
    elif r <= min(p, q):
        inits = [("aligned_svd", _aligned_init), ("block_svd", _subspace_init)]
    else:
        inits = [("block_svd", _subspace_init)]
    best = None
    for name, fn in inits:
        try:
            V, U = fn(Wb, r, rng)
            S = _s_step(V, U, Wb)
        except np.linalg.LinAlgError:
            continue
        if not (np.all(np.isfinite(V)) and np.all(np.isfinite(U)) and np.all(np.isfinite(S))):
            continue
        loss = _loss(Wb, V, S, U)
        if best is None or loss < best[0]:
            best = (loss, name, V, S, U)
    if best is None:
        V = rng.standard_normal((b1, p, r)) / np.sqrt(r)
        U = rng.standard_normal((b2, r, q)) / np.sqrt(r)
        return "random", V, np.ones((b1, b2, r)), U
    return best[1:]


def factor_blast(
    W,
    b: int,
    r: int,
    steps: int = 300,
    learning_rate: float = 1.0,
    *,
    seed: int = 0,
    tol: float = 1e-20,
) -> BlastFit:
    """Fit BLAST factors; ``losses[t]`` is the loss after ``t`` steps.

    Stops early once the loss falls to ``tol`` times the starting scale.
    Exact recovery is reliable when ``r <= min(p, q)``; above that the
    problem is underdetermined per block and descent may stall.
    """
    W = _check_matrix(W)
    if r < 1 or steps < 0 or not learning_rate > 0:
        raise ValueError("need r >= 1, steps >= 0 and a positive learning rate")
    Wb = _blast_blocks(W, b)
    init, V, S, U = _initial_factors(Wb, r, np.random.default_rng(seed))
    lr = float(learning_rate)
    losses = [_loss(Wb, V, S, U)]
    scale = max(losses[0], 0.5 * float(np.sum(Wb * Wb)), 1e-300)
    for step in range(1, steps + 1):
        R = _recon(V, S, U) - Wb
        SU = S[..., None] * U[None]                                  # (l, k, r, q)
        G = np.sum(R @ np.swapaxes(SU, 2, 3), axis=1)
        V = V - lr * _right_solve(np.sum(SU @ np.swapaxes(SU, 2, 3), axis=1), G)

        R = _recon(V, S, U) - Wb
        VS = V[:, None] * S[:, :, None, :]                           # (l, k, p, r)
        G = np.swapaxes(np.sum(np.swapaxes(VS, 2, 3) @ R, axis=0), 1, 2)
        P = np.sum(np.swapaxes(VS, 2, 3) @ VS, axis=0)
        U = U - lr * np.swapaxes(_right_solve(P, G), 1, 2)

        R = _recon(V, S, U) - Wb
        S = S - lr * _s_step(V, U, R)

        loss = _loss(Wb, V, S, U)
        if not np.isfinite(loss):
            raise FactorizationDiverged(step, loss)
        losses.append(loss)
        if loss <= tol * scale:
            break
    log.debug("factor_blast b=%d r=%d init=%s loss %.3e -> %.3e", b, r, init, losses[0], losses[-1])
    return BlastFit(BlastFactors(V, S, U), losses[-1], losses, init)
