"""Pure numpy implementations of the hot loops (fallback for ``_ckernels``)."""
from __future__ import annotations

import itertools

import numpy as np

# Vectorized suffix block size target for word enumeration.
_BLOCK = 1 << 16


def _suffix_tables(M: int, r: int) -> tuple[np.ndarray, np.ndarray]:
    """``K(v)`` and ``K(v without its first entry)`` for all ``v`` in ``{1..M}^r``."""
    k_full = np.ones(1)
    k_tail = np.zeros(1)
    # build right-to-left: prepending b maps (K(v), K(v-)) -> (b K(v) + K(v-), K(v))
    for _ in range(r):
        b = np.arange(1, M + 1, dtype=np.float64)[:, None]
        new_full = (b * k_full[None, :] + k_tail[None, :]).ravel()
        new_tail = np.broadcast_to(k_full[None, :], (M, k_full.size)).ravel()
        k_full, k_tail = new_full, new_tail
    return k_full, k_tail


def power_sums_by_first(M: int, n: int, s: float, first_lo: int, first_hi: int) -> np.ndarray:
    negs2 = -2.0 * s
    out = np.zeros(first_hi - first_lo + 1)
    if n == 1:
        a = np.arange(first_lo, first_hi + 1, dtype=np.float64)
        return np.exp(negs2 * np.log(a))
    rest = n - 1
    r = 1
    while r < rest and M ** (r + 1) <= _BLOCK:
        r += 1
    r = min(r, rest)
    k_full, k_tail = _suffix_tables(M, r)
    mid = rest - r
    for idx, a1 in enumerate(range(first_lo, first_hi + 1)):
        acc = 0.0
        for prefix in itertools.product(range(1, M + 1), repeat=mid):
            q1, q0 = float(a1), 1.0
            for a in prefix:
                q1, q0 = a * q1 + q0, q1
            q = q1 * k_full + q0 * k_tail
            acc += float(np.sum(np.exp(negs2 * np.log(q))))
        out[idx] = acc
    return out


def pair_series(alpha, beta, gamma, delta, start, stop) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    gamma = np.asarray(gamma, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    start = np.asarray(start, dtype=np.int64)
    stop = np.asarray(stop, dtype=np.int64)
    counts = np.maximum(stop - start, 0)
    out = np.zeros(alpha.size)
    total = int(counts.sum())
    if total == 0:
        return out
    # process rows in chunks so the flattened index arrays stay bounded
    row = 0
    chunk = 1 << 20
    while row < alpha.size:
        acc = 0
        end = row
        while end < alpha.size and (acc == 0 or acc + counts[end] <= chunk):
            acc += counts[end]
            end += 1
        sel = np.arange(row, end)
        c = counts[sel]
        rid = np.repeat(sel, c)
        if rid.size:
            offs = np.arange(rid.size) - np.repeat(np.cumsum(c) - c, c)
            a = (start[rid] + offs).astype(np.float64)
            terms = 1.0 / ((alpha[rid] * a + beta[rid]) * (gamma[rid] * a + delta[rid]))
            out[row:end] = np.bincount(rid - row, weights=terms, minlength=end - row)
        row = end
    return out


def operator_matrix(s: float, M: int, x, w) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    N = x.size
    A = np.zeros((N, N))
    chunk = max(1, (1 << 18) // (N * N))
    for a0 in range(1, M + 1, chunk):
        a = np.arange(a0, min(M, a0 + chunk - 1) + 1, dtype=np.float64)
        ax = a[:, None] + x[None, :]              # (na, N)
        y = 1.0 / ax
        wt = ax ** (-2.0 * s)
        d = y[:, :, None] - x[None, None, :]      # (na, N, N)
        hit = d == 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            c = w[None, None, :] / d
        rows = hit.any(axis=2)
        c[rows] = hit[rows].astype(np.float64)
        c /= c.sum(axis=2, keepdims=True)
        A += np.einsum("aj,aji->ji", wt, c)
    return A
