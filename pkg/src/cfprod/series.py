"""Certified sums of rational series ``sum_a 1 / ((alpha a + beta)(gamma a + delta))``.

Every cylinder length and tail measure met in this package has that form once
all but one partial quotient are fixed: ``q_n`` and ``q_{n-1}`` are affine in
any single quotient.  A row is summed explicitly from ``start`` up to a cut
``K`` and the remaining tail is enclosed with the Euler-Maclaurin formula.
The summand is completely monotone on ``[K, inf)`` so the expansion is
enveloping::

    I + f/2 - f'/12 + f'''/720  <=  sum_{a >= K} f(a)  <=  I + f/2 - f'/12

with ``I`` the exact integral of the tail.  Floating-point rounding is
covered by an a-priori relative margin (all summands are positive).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import BudgetExceeded, DomainError

UNIT = 2.0 ** -52
DEFAULT_BUDGET = 10_000_000
_FLOAT_LIMIT = 1e140


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float
    terms: int

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def rel_width(self) -> float:
        return (self.hi - self.lo) / self.hi if self.hi > 0 else 0.0

    def __add__(self, other: "Bracket") -> "Bracket":
        return Bracket(self.lo + other.lo, self.hi + other.hi, self.terms + other.terms)


ZERO = Bracket(0.0, 0.0, 0)


def _floats(values: Sequence[int]) -> np.ndarray:
    out = np.array([float(v) for v in values], dtype=np.float64)
    if out.size and np.max(out) > _FLOAT_LIMIT:
        raise DomainError("continuants too large for the float path; divide out a common prefix first")
    return out


def _log1p_ratio(z: np.ndarray) -> np.ndarray:
    """``log1p(z) / z`` with the removable singularity at 0."""
    out = np.ones_like(z)
    small = np.abs(z) < 1e-5
    zs = z[small]
    out[small] = 1.0 - zs / 2.0 + zs * zs / 3.0
    zb = z[~small]
    out[~small] = np.log1p(zb) / zb
    return out


def tail_bracket(alpha, beta, gamma, delta, K):
    """Enclosure of ``sum_{a >= K} 1/((alpha a + beta)(gamma a + delta))`` per row.

    Arguments are exact ints (or sequences of them); returns float arrays
    ``(lo, hi)`` without rounding margin.
    """
    al, be, ga, de = (list(v) for v in (alpha, beta, gamma, delta))
    K = list(K)
    D = _floats([a * d - b * g for a, b, g, d in zip(al, be, ga, de)]) if al else np.zeros(0)
    P = _floats([a * k + b for a, b, k in zip(al, be, K)])
    R = _floats([g * k + d for g, d, k in zip(ga, de, K)])
    A, G = _floats(al), _floats(ga)
    z = D / (G * P)
    integral = _log1p_ratio(z) / (G * P)
    f = 1.0 / (P * R)
    fp = -f * (A / P + G / R)
    rA, rG = A / P, G / R
    f3 = -6.0 * f * (rG ** 3 + rA * rG ** 2 + rA ** 2 * rG + rA ** 3)
    hi = integral + 0.5 * f - fp / 12.0
    lo = hi + f3 / 720.0
    return lo, hi


def _margin(row_terms: int) -> float:
    """Relative rounding bound for a sum of positive rows.

    Relative errors of positive summands do not accumulate across rows, so
    the longest row (plus a fixed allowance for evaluating one summand or
    one tail bracket and for the final ``fsum``) sets the margin.
    """
    return (row_terms + 48) * UNIT


def finite_rows(alpha, beta, gamma, delta, start, stop) -> Bracket:
    """Certified sum over finite ranges ``start <= a < stop`` per row."""
    start = np.asarray(start, dtype=np.int64)
    stop = np.asarray(stop, dtype=np.int64)
    if start.size == 0:
        return ZERO
    counts = np.maximum(stop - start, 0)
    terms = int(counts.sum())
    sums = kernels.pair_series(_floats(alpha), _floats(beta), _floats(gamma), _floats(delta), start, stop)
    total = math.fsum(sums)
    eta = _margin(int(counts.max()))
    return Bracket(total * (1 - eta), total * (1 + eta), terms)


def infinite_rows(alpha, beta, gamma, delta, start, *, rel_tol: float = 1e-9,
                  budget: int = DEFAULT_BUDGET) -> Bracket:
    """Certified sum over ``a >= start`` per row, to relative width ``rel_tol``."""
    alpha, beta, gamma, delta = (list(map(int, v)) for v in (alpha, beta, gamma, delta))
    start = np.asarray(list(map(int, start)), dtype=np.int64)
    nrow = start.size
    if nrow == 0:
        return ZERO
    if np.any(start < 1):
        raise DomainError("series rows must start at a >= 1")
    if rel_tol <= 4 * _margin(0):
        raise DomainError(f"rel_tol={rel_tol:g} is below the rounding floor")
    af, bf, gf, df = (_floats(v) for v in (alpha, beta, gamma, delta))
    # tail width ~ start / (30 K^5) relative to the row; aim for rel_tol / 4
    K = np.maximum(start, np.ceil((0.15 * start / rel_tol) ** 0.2).astype(np.int64) + 1)
    while True:
        terms = int((K - start).sum())
        if terms > budget:
            raise BudgetExceeded(f"{terms} explicit terms needed for rel_tol={rel_tol:g} (budget {budget})")
        head = kernels.pair_series(af, bf, gf, df, start, K)
        tlo, thi = tail_bracket(alpha, beta, gamma, delta, K.tolist())
        row_lo = head + tlo
        width = thi - tlo
        lo = math.fsum(row_lo)
        hi = math.fsum(head + thi)
        eta = _margin(int((K - start).max()))
        if 2 * eta >= rel_tol:
            raise BudgetExceeded(f"rows too long to certify rel_tol={rel_tol:g} in double precision")
        out = Bracket(lo * (1 - eta), hi * (1 + eta), terms)
        if out.hi - out.lo <= rel_tol * out.hi:
            return out
        bad = width > 0.25 * rel_tol * np.maximum(row_lo, 1e-300)
        if not bad.any():
            bad = width >= width.max()
        K = np.where(bad, 2 * K, K)


def exact_row_sum(alpha: int, beta: int, gamma: int, delta: int, start: int, stop: int):
    """Exact rational value of one finite row (oracle helper)."""
    from fractions import Fraction

    return sum((Fraction(1, (alpha * a + beta) * (gamma * a + delta)) for a in range(start, stop)), Fraction(0))
