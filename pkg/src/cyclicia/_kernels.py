"""Compiled elimination kernels over GF(q); inputs are canonical int64 arrays, q < 2**31."""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _inverse(a, q):
    t, new_t, r, new_r = 0, 1, q, a
    while new_r:
        quo = r // new_r
        t, new_t = new_t, t - quo * new_t
        r, new_r = new_r, r - quo * new_r
    return t % q


@njit(cache=True, inline="always")
def _reduce(x, q, qinv):
    # x < 2**63; the float quotient is off by at most one, fixed up without branches
    r = x - np.int64(x * qinv) * q
    r += q & (r >> 63)
    r -= q
    r += q & (r >> 63)
    return r


@njit(cache=True)
def rref_inplace(a, q):
    """Reduce ``a`` to RREF in place; returns (rank, pivot columns padded with -1)."""
    rows, cols = a.shape
    pivots = np.full(min(rows, cols), -1, dtype=np.int64)
    qinv = 1.0 / q
    r = 0
    for c in range(cols):
        if r == rows:
            break
        p = -1
        for i in range(r, rows):
            if a[i, c] != 0:
                p = i
                break
        if p < 0:
            continue
        if p != r:
            for j in range(cols):
                tmp = a[r, j]
                a[r, j] = a[p, j]
                a[p, j] = tmp
        inv = _inverse(a[r, c], q)
        for j in range(c, cols):
            a[r, j] = a[r, j] * inv % q
        for i in range(rows):
            f = a[i, c]
            if i == r or f == 0:
                continue
            f = q - f
            for j in range(c, cols):
                a[i, j] = _reduce(a[i, j] + f * a[r, j], q, qinv)
        pivots[r] = c
        r += 1
    return r, pivots


@njit(cache=True)
def _nonsingular_inplace(a, q, qinv):
    n = a.shape[0]
    for c in range(n):
        p = -1
        for i in range(c, n):
            if a[i, c] != 0:
                p = i
                break
        if p < 0:
            return False
        if p != c:
            for j in range(c, n):
                tmp = a[c, j]
                a[c, j] = a[p, j]
                a[p, j] = tmp
        inv = _inverse(a[c, c], q)
        for i in range(c + 1, n):
            f = a[i, c]
            if f == 0:
                continue
            f = (q - f) * inv % q
            for j in range(c + 1, n):
                a[i, j] = _reduce(a[i, j] + f * a[c, j], q, qinv)
    return True


@njit(cache=True)
def nonsingular_many(mats, q):
    """Per-matrix invertibility of a (B, n, n) stack; ``mats`` is consumed."""
    out = np.empty(mats.shape[0], dtype=np.bool_)
    qinv = 1.0 / q
    for b in range(mats.shape[0]):
        out[b] = _nonsingular_inplace(mats[b], q, qinv)
    return out


@njit(cache=True)
def _comb(n, k):
    if k < 0 or k > n:
        return 0
    out = 1
    for i in range(k):
        out = out * (n - i) // (i + 1)
    return out


@njit(cache=True)
def block_subsets_nonsingular(blocks, pick, q):
    """Invertibility of every square stack of ``pick`` blocks, in lexicographic order.

    ``blocks`` is (N, rows, pick*rows).  Subsets are walked depth-first; each
    chosen block is eliminated once and the later candidates keep only their
    Schur complement on the remaining columns, so shared prefixes are shared
    work and a rank-deficient prefix settles its whole subtree.
    """
    N, rows, width = blocks.shape
    qinv = 1.0 / q
    out = np.ones(_comb(N, pick), dtype=np.bool_)
    state = np.zeros((pick, N, rows, width), dtype=np.int64)
    state[0] = blocks
    pos = np.zeros(pick, dtype=np.int64)
    leaf = 0
    t = 0
    while t >= 0:
        w = pos[t]
        if w > N - pick + t:
            t -= 1
            if t >= 0:
                pos[t] += 1
            continue
        W = width - t * rows
        blk = state[t, w, :, :W].copy()
        if t == pick - 1:
            out[leaf] = _nonsingular_inplace(blk, q, qinv)
            leaf += 1
            pos[t] += 1
            continue
        rank, piv = rref_inplace(blk, q)
        if rank < rows:
            span = _comb(N - 1 - w, pick - 1 - t)
            out[leaf:leaf + span] = False
            leaf += span
            pos[t] += 1
            continue
        free = np.empty(W - rows, dtype=np.int64)
        nf = 0
        pi = 0
        for c in range(W):
            if pi < rows and piv[pi] == c:
                pi += 1
            else:
                free[nf] = c
                nf += 1
        for v in range(w + 1, N):
            src = state[t, v]
            dst = state[t + 1, v]
            for i in range(rows):
                for jf in range(nf):
                    acc = src[i, free[jf]]
                    for r in range(rows):
                        coef = src[i, piv[r]]
                        if coef != 0:
                            acc = _reduce(acc + (q - coef) * blk[r, free[jf]], q, qinv)
                    dst[i, jf] = acc
        t += 1
        pos[t] = w + 1
    return out


@njit(cache=True)
def right_null_many(mats, q):
    """Right-null bases of a (B, m, n) stack assumed to have full row rank m.

    Returns ((B, n-m, n) bases, per-matrix flag that the rank really was m).
    """
    count, m, n = mats.shape
    basis = np.zeros((count, n - m, n), dtype=np.int64)
    ok = np.ones(count, dtype=np.bool_)
    for b in range(count):
        a = mats[b].copy()
        rank, piv = rref_inplace(a, q)
        if rank < m:
            ok[b] = False
            continue
        f = 0
        pi = 0
        for c in range(n):
            if pi < m and piv[pi] == c:
                pi += 1
                continue
            basis[b, f, c] = 1
            for r in range(m):
                basis[b, f, piv[r]] = (q - a[r, c]) % q
            f += 1
    return basis, ok
