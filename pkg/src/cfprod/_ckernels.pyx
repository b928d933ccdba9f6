# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops.  Signatures mirror ``cfprod._pykernels`` exactly."""
import numpy as np

from libc.math cimport exp, log, pow


cdef inline double _qpow(double q, double negs2, int ipow) noexcept nogil:
    # ipow > 0 flags an integer exponent -2s = -ipow
    if ipow == 1:
        return 1.0 / q
    if ipow == 2:
        return 1.0 / (q * q)
    if ipow == 3:
        return 1.0 / (q * q * q)
    return exp(negs2 * log(q))


cdef long double _walk(int M, int left, double q1, double q0, double negs2, int ipow) noexcept nogil:
    cdef long double acc = 0
    cdef int a
    if left == 1:
        # descending a: smallest terms accumulate first
        for a in range(M, 0, -1):
            acc += _qpow(a * q1 + q0, negs2, ipow)
        return acc
    for a in range(M, 0, -1):
        acc += _walk(M, left - 1, a * q1 + q0, q1, negs2, ipow)
    return acc


def power_sums_by_first(int M, int n, double s, int first_lo, int first_hi):
    """``sum q_n(w)^(-2s)`` over words in ``{1..M}^n`` grouped by ``a_1``.

    Returns an array ``out[a_1 - first_lo]`` for ``a_1`` in
    ``[first_lo, first_hi]``.
    """
    cdef int a1
    cdef double negs2 = -2.0 * s
    cdef int ipow = 0
    if 2.0 * s in (1.0, 2.0, 3.0):
        ipow = <int>(2.0 * s)
    out = np.zeros(first_hi - first_lo + 1, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for a1 in range(first_lo, first_hi + 1):
            if n == 1:
                o[a1 - first_lo] = _qpow(<double>a1, negs2, ipow)
            else:
                o[a1 - first_lo] = <double>_walk(M, n - 1, <double>a1, 1.0, negs2, ipow)
    return out


def pair_series(double[::1] alpha, double[::1] beta, double[::1] gamma,
                double[::1] delta, long long[::1] start, long long[::1] stop):
    """Row sums of ``1 / ((alpha a + beta)(gamma a + delta))`` over ``start <= a < stop``."""
    cdef Py_ssize_t i, nrow = alpha.shape[0]
    cdef long long a
    cdef long double acc
    cdef double al, be, ga, de
    out = np.zeros(nrow, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(nrow):
            acc = 0
            al = alpha[i]
            be = beta[i]
            ga = gamma[i]
            de = delta[i]
            a = stop[i] - 1
            while a >= start[i]:
                acc += 1.0 / ((al * a + be) * (ga * a + de))
                a -= 1
            o[i] = <double>acc
    return out


def operator_matrix(double s, int M, double[::1] x, double[::1] w):
    """Matrix of the truncated transfer operator on barycentric nodes.

    ``A[j, i] = sum_a (a + x_j)^(-2s) l_i(1 / (a + x_j))`` where ``l_i`` are
    the Lagrange basis polynomials through the nodes ``x`` with barycentric
    weights ``w``.
    """
    cdef Py_ssize_t N = x.shape[0]
    cdef Py_ssize_t j, i, hit
    cdef int a
    cdef double y, wt, tot, d
    A = np.zeros((N, N), dtype=np.float64)
    cdef double[:, ::1] Am = A
    cdef double[::1] c = np.empty(N, dtype=np.float64)
    with nogil:
        for j in range(N):
            for a in range(1, M + 1):
                y = 1.0 / (a + x[j])
                wt = pow(a + x[j], -2.0 * s)
                hit = -1
                tot = 0.0
                for i in range(N):
                    d = y - x[i]
                    if d == 0.0:
                        hit = i
                        break
                    c[i] = w[i] / d
                    tot += c[i]
                if hit >= 0:
                    Am[j, hit] += wt
                else:
                    for i in range(N):
                        Am[j, i] += wt * c[i] / tot
    return A
