"""Pure-numpy fallback for the tile-task kernels.

Same grids, same scratch tiles, same count slots as ``numba_kernels``; the
per-tile product goes through ``np.dot`` instead of a hand-written loop.
"""
import numpy as np


def _grid(extent, tile):
    return range(0, extent, tile)


def bgemm(a, b, c, tm, tk, tn, transpose_store):
    nbatch, M, K = a.shape
    N = b.shape[2]
    counts = np.zeros(6, np.int64)
    for bi in range(nbatch):
        for i0 in _grid(M, tm):
            mi = min(tm, M - i0)
            for j0 in _grid(N, tn):
                nj = min(tn, N - j0)
                acc = np.zeros((mi, nj), np.float32)
                for k0 in _grid(K, tk):
                    kk = min(tk, K - k0)
                    xa = a[bi, i0:i0 + mi, k0:k0 + kk]
                    xb = b[bi, k0:k0 + kk, j0:j0 + nj]
                    acc += xa @ xb
                    counts[0] += 2 * mi * kk * nj
                    counts[1] += mi * kk
                    counts[3] += kk * nj
                    if j0 == 0:
                        counts[2] += mi * kk
                    if i0 == 0:
                        counts[4] += kk * nj
                if transpose_store:
                    c[bi, j0:j0 + nj, i0:i0 + mi] = np.ascontiguousarray(acc.T)
                else:
                    c[bi, i0:i0 + mi, j0:j0 + nj] = acc
                counts[5] += mi * nj
    return counts


def monarch_fused_bmm1(x, v, z, r_prime, tm, tk, tn):
    b1, M, K = x.shape
    N = v.shape[2]
    counts = np.zeros(6, np.int64)
    for l in range(b1):
        for i0 in _grid(M, tm):
            mi = min(tm, M - i0)
            rows = np.arange(i0, i0 + mi)
            for j0 in _grid(N, tn):
                nj = min(tn, N - j0)
                acc = np.zeros((mi, nj), np.float32)
                for k0 in _grid(K, tk):
                    kk = min(tk, K - k0)
                    acc += x[l, i0:i0 + mi, k0:k0 + kk] @ v[l, k0:k0 + kk, j0:j0 + nj]
                    counts[0] += 2 * mi * kk * nj
                    counts[1] += mi * kk
                    counts[3] += kk * nj
                    if j0 == 0:
                        counts[2] += mi * kk
                    if i0 == 0:
                        counts[4] += kk * nj
                cols = np.arange(j0, j0 + nj)
                blk = cols // r_prime
                inner = l * r_prime + cols % r_prime
                z[blk[None, :], rows[:, None], inner[None, :]] = acc
                counts[5] += mi * nj
    return counts


def blast_scale_sum(zp, s, out, tm, tn):
    M, b1, N = zp.shape
    b2 = s.shape[1]
    counts = np.zeros(6, np.int64)
    for i0 in _grid(M, tm):
        mi = min(tm, M - i0)
        for j0 in _grid(N, tn):
            nj = min(tn, N - j0)
            acc = np.zeros((b2, mi, nj), np.float32)
            for l in range(b1):
                zt = zp[i0:i0 + mi, l, j0:j0 + nj]
                st = s[l, :, j0:j0 + nj]
                acc += st[:, None, :] * zt[None, :, :]
                counts[0] += 2 * b2 * mi * nj
                counts[1] += mi * nj
                counts[2] += mi * nj
                counts[3] += b2 * nj
                if i0 == 0:
                    counts[4] += b2 * nj
            out[i0:i0 + mi, :, j0:j0 + nj] = acc.transpose(1, 0, 2)
            counts[5] += b2 * mi * nj
    return counts


def blast_partial_fused(x, v, s, z2, tm, tk, tn):
    b1, M, K = x.shape
    N = v.shape[2]
    b2 = s.shape[1]
    counts = np.zeros(8, np.int64)
    for i0 in _grid(M, tm):
        mi = min(tm, M - i0)
        for j0 in _grid(N, tn):
            nj = min(tn, N - j0)
            acc = np.zeros((b2, mi, nj), np.float32)
            for l in range(b1):
                st = s[l, :, j0:j0 + nj]
                counts[5] += b2 * nj
                if i0 == 0:
                    counts[6] += b2 * nj
                z1 = np.zeros((mi, nj), np.float32)
                for k0 in _grid(K, tk):
                    kk = min(tk, K - k0)
                    z1 += x[l, i0:i0 + mi, k0:k0 + kk] @ v[l, k0:k0 + kk, j0:j0 + nj]
                    counts[0] += 2 * mi * kk * nj
                    counts[1] += mi * kk
                    counts[3] += kk * nj
                    if j0 == 0:
                        counts[2] += mi * kk
                    if i0 == 0:
                        counts[4] += kk * nj
                acc += st[:, None, :] * z1[None, :, :]
                counts[0] += 2 * b2 * mi * nj
            z2[:, i0:i0 + mi, j0:j0 + nj] = acc
            counts[7] += b2 * mi * nj
    return counts


def lowrank_fused(x, v, u, y, tm, tk, tq):
    M, K = x.shape
    R = v.shape[1]
    N = u.shape[1]
    counts = np.zeros(8, np.int64)
    for i0 in _grid(M, tm):
        mi = min(tm, M - i0)
        z = np.zeros((mi, R), np.float32)
        for k0 in _grid(K, tk):
            kk = min(tk, K - k0)
            z += x[i0:i0 + mi, k0:k0 + kk] @ v[k0:k0 + kk, :]
            counts[0] += 2 * mi * kk * R
            counts[1] += mi * kk
            counts[2] += mi * kk
            counts[3] += kk * R
            if i0 == 0:
                counts[4] += kk * R
        for j0 in _grid(N, tq):
            nj = min(tq, N - j0)
            y[i0:i0 + mi, j0:j0 + nj] = z @ u[:, j0:j0 + nj]
            counts[0] += 2 * mi * R * nj
            counts[5] += R * nj
            if i0 == 0:
                counts[6] += R * nj
            counts[7] += mi * nj
    return counts
