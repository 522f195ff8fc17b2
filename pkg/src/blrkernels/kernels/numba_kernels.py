"""Jitted tile-task kernels.

Every kernel walks a grid of tile tasks. A task copies operand tiles from the
global arrays into private scratch, accumulates in scratch with the reduction
index ascending, and stores its output region once. Each task also records
what it moved, and the per-task rows are summed at the end, so the grid loop
can run under ``prange``.

Count slots returned by the GEMM-shaped kernels::

    [flops, a_tile, a_first, b_tile, b_first, c_store]

``*_tile`` counts every tile load; ``*_first`` counts a region only for the
first task of the pass that touches it (the per-pass footprint).
"""
import os

import numpy as np
from numba import config, njit, prange

if "NUMBA_THREADING_LAYER" not in os.environ:
    try:
        from numba.np.ufunc import omppool  # noqa: F401
        config.THREADING_LAYER = "omp"
    except ImportError:
        config.THREADING_LAYER = "workqueue"

_OPTS = dict(parallel=True, cache=True, nogil=True)


@njit(inline="always")
def _mac(acc, xa, xb, mi, kk, nj):
    if mi == xa.shape[0] and kk == xa.shape[1] and nj == xb.shape[1]:
        # full tiles: hand the product to BLAS
        acc += np.dot(xa, xb)
        return
    for ii in range(mi):
        for q in range(kk):
            av = xa[ii, q]
            for jj in range(nj):
                acc[ii, jj] += av * xb[q, jj]


@njit(inline="always")
def _load(dst, src, r0, c0, rows, cols):
    for ii in range(rows):
        for jj in range(cols):
            dst[ii, jj] = src[r0 + ii, c0 + jj]


@njit(
    "int64[:](float32[:,:,:], float32[:,:,:], float32[:,:,:], int64, int64, int64, boolean)",
    **_OPTS,
)
def bgemm(a, b, c, tm, tk, tn, transpose_store):
    nbatch, M, K = a.shape
    N = b.shape[2]
    gm = (M + tm - 1) // tm
    gn = (N + tn - 1) // tn
    ntask = nbatch * gm * gn
    per = np.zeros((ntask, 6), np.int64)
    for task in prange(ntask):
        bi = task // (gm * gn)
        rem = task - bi * gm * gn
        ti = rem // gn
        tj = rem - ti * gn
        i0 = ti * tm
        j0 = tj * tn
        mi = min(tm, M - i0)
        nj = min(tn, N - j0)
        xa = np.empty((tm, tk), np.float32)
        xb = np.empty((tk, tn), np.float32)
        acc = np.zeros((tm, tn), np.float32)
        for k0 in range(0, K, tk):
            kk = min(tk, K - k0)
            _load(xa, a[bi], i0, k0, mi, kk)
            _load(xb, b[bi], k0, j0, kk, nj)
            _mac(acc, xa, xb, mi, kk, nj)
            per[task, 0] += 2 * mi * kk * nj
            per[task, 1] += mi * kk
            per[task, 3] += kk * nj
            if tj == 0:
                per[task, 2] += mi * kk
            if ti == 0:
                per[task, 4] += kk * nj
        if transpose_store:
            t = np.empty((tn, tm), np.float32)
            for ii in range(mi):
                for jj in range(nj):
                    t[jj, ii] = acc[ii, jj]
            for jj in range(nj):
                for ii in range(mi):
                    c[bi, j0 + jj, i0 + ii] = t[jj, ii]
        else:
            for ii in range(mi):
                for jj in range(nj):
                    c[bi, i0 + ii, j0 + jj] = acc[ii, jj]
        per[task, 5] += mi * nj
    return per.sum(axis=0)


@njit(
    "int64[:](float32[:,:,:], float32[:,:,:], float32[:,:,:], int64, int64, int64, int64)",
    **_OPTS,
)
def monarch_fused_bmm1(x, v, z, r_prime, tm, tk, tn):
    # x: (b1, n, p); v: (b1, p, b2*r') with r' fastest; z: (b2, n, b1*r')
    b1, M, K = x.shape
    N = v.shape[2]
    gm = (M + tm - 1) // tm
    gn = (N + tn - 1) // tn
    ntask = b1 * gm * gn
    per = np.zeros((ntask, 6), np.int64)
    for task in prange(ntask):
        l = task // (gm * gn)
        rem = task - l * gm * gn
        ti = rem // gn
        tj = rem - ti * gn
        i0 = ti * tm
        j0 = tj * tn
        mi = min(tm, M - i0)
        nj = min(tn, N - j0)
        xa = np.empty((tm, tk), np.float32)
        xb = np.empty((tk, tn), np.float32)
        acc = np.zeros((tm, tn), np.float32)
        for k0 in range(0, K, tk):
            kk = min(tk, K - k0)
            _load(xa, x[l], i0, k0, mi, kk)
            _load(xb, v[l], k0, j0, kk, nj)
            _mac(acc, xa, xb, mi, kk, nj)
            per[task, 0] += 2 * mi * kk * nj
            per[task, 1] += mi * kk
            per[task, 3] += kk * nj
            if tj == 0:
                per[task, 2] += mi * kk
            if ti == 0:
                per[task, 4] += kk * nj
        for jj in range(nj):
            col = j0 + jj
            k = col // r_prime
            inner = l * r_prime + (col - k * r_prime)
            for ii in range(mi):
                z[k, i0 + ii, inner] = acc[ii, jj]
        per[task, 5] += mi * nj
    return per.sum(axis=0)


@njit(
    "int64[:](float32[:,:,:], float32[:,:,:], float32[:,:,:], int64, int64)",
    **_OPTS,
)
def blast_scale_sum(zp, s, out, tm, tn):
    # zp: (n, b1, r); s: (b1, b2, r); out: (n, b2, r)
    # slots: [flops, z_tile, z_first, s_tile, s_first, store]
    M, b1, N = zp.shape
    b2 = s.shape[1]
    gm = (M + tm - 1) // tm
    gn = (N + tn - 1) // tn
    ntask = gm * gn
    per = np.zeros((ntask, 6), np.int64)
    for task in prange(ntask):
        ti = task // gn
        tj = task - ti * gn
        i0 = ti * tm
        j0 = tj * tn
        mi = min(tm, M - i0)
        nj = min(tn, N - j0)
        zt = np.empty((tm, tn), np.float32)
        st = np.empty((b2, tn), np.float32)
        acc = np.zeros((b2, tm, tn), np.float32)
        for l in range(b1):
            for ii in range(mi):
                for jj in range(nj):
                    zt[ii, jj] = zp[i0 + ii, l, j0 + jj]
            _load(st, s[l], 0, j0, b2, nj)
            per[task, 1] += mi * nj
            per[task, 2] += mi * nj
            per[task, 3] += b2 * nj
            if ti == 0:
                per[task, 4] += b2 * nj
            for k in range(b2):
                for ii in range(mi):
                    for jj in range(nj):
                        acc[k, ii, jj] += st[k, jj] * zt[ii, jj]
            per[task, 0] += 2 * b2 * mi * nj
        for ii in range(mi):
            for k in range(b2):
                for jj in range(nj):
                    out[i0 + ii, k, j0 + jj] = acc[k, ii, jj]
        per[task, 5] += b2 * mi * nj
    return per.sum(axis=0)


@njit(
    "int64[:](float32[:,:,:], float32[:,:,:], float32[:,:,:], float32[:,:,:], int64, int64, int64)",
    **_OPTS,
)
def blast_partial_fused(x, v, s, z2, tm, tk, tn):
    # x: (b1, n, p); v: (b1, p, r); s: (b1, b2, r); z2: (b2, n, r)
    # slots: [flops, x_tile, x_first, v_tile, v_first, s_tile, s_first, store]
    b1, M, K = x.shape
    N = v.shape[2]
    b2 = s.shape[1]
    gm = (M + tm - 1) // tm
    gn = (N + tn - 1) // tn
    ntask = gm * gn
    per = np.zeros((ntask, 8), np.int64)
    for task in prange(ntask):
        ti = task // gn
        tj = task - ti * gn
        i0 = ti * tm
        j0 = tj * tn
        mi = min(tm, M - i0)
        nj = min(tn, N - j0)
        xa = np.empty((tm, tk), np.float32)
        xb = np.empty((tk, tn), np.float32)
        st = np.empty((b2, tn), np.float32)
        z1 = np.empty((tm, tn), np.float32)
        acc = np.zeros((b2, tm, tn), np.float32)
        # the b1 reduction stays inside one task
        for l in range(b1):
            _load(st, s[l], 0, j0, b2, nj)
            per[task, 5] += b2 * nj
            if ti == 0:
                per[task, 6] += b2 * nj
            z1[:, :] = 0.0
            for k0 in range(0, K, tk):
                kk = min(tk, K - k0)
                _load(xa, x[l], i0, k0, mi, kk)
                _load(xb, v[l], k0, j0, kk, nj)
                _mac(z1, xa, xb, mi, kk, nj)
                per[task, 0] += 2 * mi * kk * nj
                per[task, 1] += mi * kk
                per[task, 3] += kk * nj
                if tj == 0:
                    per[task, 2] += mi * kk
                if ti == 0:
                    per[task, 4] += kk * nj
            # broadcast (b2, 1, t_r) * (1, t_n, t_r): scalar work, not a dot
            for k in range(b2):
                for ii in range(mi):
                    for jj in range(nj):
                        acc[k, ii, jj] += st[k, jj] * z1[ii, jj]
            per[task, 0] += 2 * b2 * mi * nj
        for k in range(b2):
            for ii in range(mi):
                for jj in range(nj):
                    z2[k, i0 + ii, j0 + jj] = acc[k, ii, jj]
        per[task, 7] += b2 * mi * nj
    return per.sum(axis=0)


@njit(
    "int64[:](float32[:,:], float32[:,:], float32[:,:], float32[:,:], int64, int64, int64)",
    **_OPTS,
)
def lowrank_fused(x, v, u, y, tm, tk, tq):
    # 1-D tiling over n; the (t_n, r) intermediate never leaves scratch.
    # slots: [flops, x_tile, x_first, v_tile, v_first, u_tile, u_first, store]
    M, K = x.shape
    R = v.shape[1]
    N = u.shape[1]
    gm = (M + tm - 1) // tm
    per = np.zeros((gm, 8), np.int64)
    for ti in prange(gm):
        i0 = ti * tm
        mi = min(tm, M - i0)
        xa = np.empty((tm, tk), np.float32)
        vb = np.empty((tk, R), np.float32)
        z = np.zeros((tm, R), np.float32)
        ub = np.empty((R, tq), np.float32)
        acc = np.empty((tm, tq), np.float32)
        for k0 in range(0, K, tk):
            kk = min(tk, K - k0)
            _load(xa, x, i0, k0, mi, kk)
            _load(vb, v, k0, 0, kk, R)
            _mac(z, xa, vb, mi, kk, R)
            per[ti, 0] += 2 * mi * kk * R
            per[ti, 1] += mi * kk
            per[ti, 2] += mi * kk
            per[ti, 3] += kk * R
            if ti == 0:
                per[ti, 4] += kk * R
        for j0 in range(0, N, tq):
            nj = min(tq, N - j0)
            _load(ub, u, 0, j0, R, nj)
            acc[:, :] = 0.0
            _mac(acc, z, ub, mi, R, nj)
            per[ti, 0] += 2 * mi * R * nj
            per[ti, 5] += R * nj
            if ti == 0:
                per[ti, 6] += R * nj
            for ii in range(mi):
                for jj in range(nj):
                    y[i0 + ii, j0 + jj] = acc[ii, jj]
            per[ti, 7] += mi * nj
    return per.sum(axis=0)
