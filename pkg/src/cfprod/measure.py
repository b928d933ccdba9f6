"""Lebesgue measures of sets cut out by products of consecutive quotients.

Notation used below: ``u`` is the fixed prefix, ``x`` and ``y`` are the two
constrained quotients, ``v`` is a fixed suffix.  ``K(w)`` is the continuant
of ``w`` (``K(()) = 1``, and a word of length -1 has continuant 0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import series
from .cf import _as_fraction, as_word, cylinder_length, qpair, tail_measure
from .errors import BudgetExceeded, DomainError, ValidationError
from .phi import Phi

# Exact rational sums are used while the row count stays below this.
EXACT_LIMIT = 256
DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class CertifiedMeasure:
    lower: Fraction
    upper: Fraction
    exact: bool = False

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValidationError("lower > upper")
        if self.exact and self.lower != self.upper:
            raise ValidationError("exact measure must have lower == upper")

    @classmethod
    def point(cls, value: Fraction) -> "CertifiedMeasure":
        return cls(value, value, True)

    @classmethod
    def from_bracket(cls, b: series.Bracket) -> "CertifiedMeasure":
        return cls(Fraction(b.lo), Fraction(b.hi), False)

    @property
    def mid(self) -> float:
        return float(self.lower + self.upper) / 2

    @property
    def rel_width(self) -> float:
        return float((self.upper - self.lower) / self.upper) if self.upper else 0.0

    def __contains__(self, value) -> bool:
        return self.lower <= _as_fraction(value) <= self.upper

    def overlaps(self, other: "CertifiedMeasure") -> bool:
        return self.lower <= other.upper and other.lower <= self.upper

    def __add__(self, other: "CertifiedMeasure") -> "CertifiedMeasure":
        return CertifiedMeasure(self.lower + other.lower, self.upper + other.upper, self.exact and other.exact)

    def scale(self, c: Fraction) -> "CertifiedMeasure":
        return CertifiedMeasure(self.lower * c, self.upper * c, self.exact)

    def as_floats(self) -> tuple[float, float]:
        return float(self.lower), float(self.upper)


def _K(w: Sequence[int], i: int, j: int) -> int:
    """Continuant of the slice ``w[i:j]`` (0 when the slice has length -1)."""
    if j - i == -1:
        return 0
    return qpair(w[i:j])[0]


def _threshold(l) -> Fraction:
    l = _as_fraction(l)
    if l < 1:
        raise DomainError(f"threshold l must be >= 1, got {l}")
    return l


def _ceil(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def product_tail_measure(w: Sequence[int], l) -> Fraction:
    """Exact measure of ``{x in I_n(w): a_{n+1} a_{n+2} >= l}``."""
    w = as_word(w)
    l = _threshold(l)
    cl = _ceil(l)
    total = tail_measure(w, cl)
    for a in range(1, cl):
        total += tail_measure(w + (a,), _ceil(l / a))
    return total


def _pair_rows(Ku: int, Kum: int, v: Sequence[int], xs: Sequence[int]):
    """Coefficients of ``|I(u x y v)| = 1/((al y + be)(ga y + de))`` per x."""
    al, be, ga, de = [], [], [], []
    if not v:
        for x in xs:
            KP = x * Ku + Kum
            al.append(KP)
            be.append(Ku)
            ga.append(KP)
            de.append(Ku + KP)
        return al, be, ga, de
    # K(P y S) = (y K(P) + K(u)) K(S) + K(P) K(S minus its first letter), P = u x
    r = len(v)
    KS, KSl = _K(v, 0, r), _K(v, 0, r - 1)
    KSf, KSfl = _K(v, 1, r), _K(v, 1, r - 1)
    for x in xs:
        KP = x * Ku + Kum
        al.append(KP * KS)
        be.append(Ku * KS + KP * KSf)
        ga.append(KP * (KS + KSl))
        de.append(Ku * (KS + KSl) + KP * (KSf + KSfl))
    return al, be, ga, de


def _suffix_shadow(v: Sequence[int], tol: float, budget: int) -> series.Bracket:
    """``sum_b |I(b v)|``: measure of points whose digits from the second on spell ``v``."""
    if not v:
        return series.Bracket(1.0, 1.0, 0)
    r = len(v)
    al = _K(v, 0, r)
    be = _K(v, 1, r)
    ga = al + _K(v, 0, r - 1)
    de = be + _K(v, 1, r - 1)
    return series.infinite_rows([al], [be], [ga], [de], [1], rel_tol=tol, budget=budget)


def jk_measure(prefix: Sequence[int], suffix: Sequence[int], l, tol: float = DEFAULT_TOL,
               budget: int = series.DEFAULT_BUDGET) -> CertifiedMeasure:
    """Bracket of ``sum_{x y >= l} |I(prefix, x, y, suffix)|``."""
    u, v = as_word(prefix), as_word(suffix)
    l = _threshold(l)
    if tol <= 0:
        raise ValidationError("tol must be positive")
    cl = _ceil(l)
    Ku, Kum = qpair(u)
    if not v:
        if cl <= EXACT_LIMIT:
            return CertifiedMeasure.point(product_tail_measure(u, l))
        # rows over x < cl collapse to tails in y; one closing row covers x >= cl
        xs = list(range(1, cl))
        ms = [_ceil(l / x) for x in xs] + [cl]
        Q = [x * Ku + Kum for x in xs] + [Ku]
        Qm = [Ku] * len(xs) + [Kum]
        b = series.finite_rows([0] * len(Q), Q, Q, Qm, ms, [m + 1 for m in ms])
        return CertifiedMeasure.from_bracket(b)

    part = tol / 4
    xs = list(range(1, cl))
    rows = _pair_rows(Ku, Kum, v, xs)
    inner = series.infinite_rows(*rows, [_ceil(l / x) for x in xs], rel_tol=part, budget=budget)
    shadow = _suffix_shadow(v, part, budget)
    h1, h2 = _shadow_moments(v)
    K1 = max(cl, math.ceil((4 / part) ** (1 / 3)))
    while True:
        if K1 - cl > budget:
            raise BudgetExceeded(f"outer cut {K1} exceeds budget")
        xs2 = list(range(cl, K1))
        mid = series.infinite_rows(*_pair_rows(Ku, Kum, v, xs2), [1] * len(xs2), rel_tol=part,
                                   budget=budget) if xs2 else series.ZERO
        olo, ohi = _outer(Ku, Kum, K1, shadow, h1, h2, part, budget)
        lo = (inner.lo + mid.lo + olo) * (1 - 8 * series.UNIT)
        hi = (inner.hi + mid.hi + ohi) * (1 + 8 * series.UNIT)
        if hi - lo <= tol * hi:
            return CertifiedMeasure(Fraction(lo), Fraction(hi))
        K1 *= 2


def _shadow_moments(v: Sequence[int], Y: int = 64) -> tuple[tuple[float, float], tuple[float, float]]:
    """Brackets for the first two Taylor coefficients of the outer sum.

    For ``x`` large, ``|I(u x y v)| = 1/(Q^2 (A + tC)(D + tE))`` with
    ``Q = K(u x)``, ``t = K(u)/Q`` and ``A, D`` depending on ``y`` only.
    Returns brackets of ``h1 = sum (C/A + E/D)/(A D)`` and
    ``h2 = sum (C^2/A^2 + C E/(A D) + E^2/D^2)/(A D)``.
    """
    r = len(v)
    C, E = _K(v, 0, r), _K(v, 0, r) + _K(v, 0, r - 1)
    a1, a0 = C, _K(v, 1, r)
    d1, d0 = C + _K(v, 0, r - 1), a0 + _K(v, 1, r - 1)
    y = np.arange(1, Y + 1, dtype=np.float64)
    A, D = a1 * y + a0, d1 * y + d0
    base = 1.0 / (A * D)
    t1 = base * (C / A + E / D)
    t2 = base * ((C / A) ** 2 + C * E / (A * D) + (E / D) ** 2)
    # y > Y: A >= a1 y and D >= d1 y
    c1 = (C / a1 + E / d1) / (a1 * d1)
    c2 = ((C / a1) ** 2 + C * E / (a1 * d1) + (E / d1) ** 2) / (a1 * d1)
    eta = 1e-13
    s1, s2 = math.fsum(t1), math.fsum(t2)
    return ((s1 * (1 - eta), (s1 + c1 / (2 * Y * Y)) * (1 + eta)),
            (s2 * (1 - eta), (s2 + c2 / (3 * Y ** 3)) * (1 + eta)))


def _power_tail(Ku: int, Kum: int, K: int, k: int) -> tuple[float, float]:
    """``sum_{x >= K} (Ku x + Kum)^-k`` between its integral and integral plus first term."""
    q = float(Ku * K + Kum)
    integral = q ** (1 - k) / (Ku * (k - 1))
    return integral * (1 - 1e-14), (integral + q ** -k) * (1 + 1e-14)


def _outer(Ku, Kum, K1, shadow, h1, h2, part, budget) -> tuple[float, float]:
    """Bracket of the ``x >= K1`` part of the pair sum.

    Each summand is completely monotone in ``t``, so the sum over ``y`` lies
    between its tangent line at ``t = 0`` and the second-order Taylor
    polynomial.  The cruder sandwich ``t in [0, 1/x]`` is intersected in.
    """
    s2 = series.infinite_rows([Ku], [Kum], [Ku], [Kum], [K1], rel_tol=part, budget=budget)
    s3 = _power_tail(Ku, Kum, K1, 3)
    s4 = _power_tail(Ku, Kum, K1, 4)
    lo = shadow.lo * s2.lo - h1[1] * Ku * s3[1]
    hi = shadow.hi * s2.hi - h1[0] * Ku * s3[0] + h2[1] * Ku * Ku * s4[1]
    crude_lo = shadow.lo * series.infinite_rows([Ku], [Ku + Kum], [Ku], [Ku + Kum], [K1], rel_tol=part,
                                                budget=budget).lo
    return max(lo, crude_lo), min(hi, shadow.hi * s2.hi)


def jtilde_measure(prefix: Sequence[int], suffix: Sequence[int], l, tol: float = DEFAULT_TOL) -> CertifiedMeasure:
    """Bracket of ``sum_{x y < l} |I(prefix, x, y, suffix)|`` (a finite sum)."""
    u, v = as_word(prefix), as_word(suffix)
    l = _threshold(l)
    cl = _ceil(l)
    xs = [x for x in range(1, cl) if _ceil(l / x) > 1]
    if not xs:
        return CertifiedMeasure.point(Fraction(0))
    Ku, Kum = qpair(u)
    rows = _pair_rows(Ku, Kum, v, xs)
    stops = [_ceil(l / x) for x in xs]
    if sum(stops) <= 4 * EXACT_LIMIT:
        total = sum((series.exact_row_sum(a, b, g, d, 1, s) for a, b, g, d, s in zip(*rows, stops)), Fraction(0))
        return CertifiedMeasure.point(total)
    return CertifiedMeasure.from_bracket(series.finite_rows(*rows, [1] * len(xs), stops))


def full_pair_measure(prefix: Sequence[int], suffix: Sequence[int], tol: float = DEFAULT_TOL) -> CertifiedMeasure:
    """``sum`` over all ``(x, y)`` of ``|I(prefix, x, y, suffix)|``."""
    u, v = as_word(prefix), as_word(suffix)
    if not v:
        return CertifiedMeasure.point(cylinder_length(u) if u else Fraction(1))
    return jk_measure(u, v, 1, tol)


def hn_measures(prefix: Sequence[int], l, tol: float = DEFAULT_TOL, variant: str = "H",
                budget: int = series.DEFAULT_BUDGET) -> CertifiedMeasure:
    """Bracket of the measure of ``H`` or ``H-tilde`` inside ``I(prefix)``.

    With ``x, y, z`` the three quotients after the prefix, ``H`` asks for
    ``x y >= l`` and ``y z >= l``; ``H-tilde`` asks for ``x y < l`` and
    ``y z >= l``.  The ``z`` sum is always the exact tail measure.
    """
    u = as_word(prefix)
    l = _threshold(l)
    cl = _ceil(l)
    Ku, Kum = qpair(u)
    ys = list(range(1, cl))
    ms = [_ceil(l / y) for y in ys]
    # tail(u x y, m) as a function of x
    al = [Ku * y for y in ys]
    be = [Kum * y + Ku for y in ys]
    ga = [m * Ku * y + Ku for y, m in zip(ys, ms)]
    de = [m * (Kum * y + Ku) + Kum for y, m in zip(ys, ms)]
    if variant in ("H-tilde", "Htilde", "tilde"):
        keep = [i for i, m in enumerate(ms) if m > 1]
        if not keep:
            return CertifiedMeasure.point(Fraction(0))
        pick = lambda seq: [seq[i] for i in keep]
        stops = pick(ms)
        if sum(stops) <= 4 * EXACT_LIMIT:
            total = sum((series.exact_row_sum(a, b, g, d, 1, s)
                         for a, b, g, d, s in zip(pick(al), pick(be), pick(ga), pick(de), stops)), Fraction(0))
            return CertifiedMeasure.point(total)
        b = series.finite_rows(pick(al), pick(be), pick(ga), pick(de), [1] * len(keep), stops)
        return CertifiedMeasure.from_bracket(b)
    if variant != "H":
        raise ValidationError(f"unknown variant {variant!r}")
    # y >= cl: both constraints hold for every x and z
    al.append(Ku)
    be.append(Kum)
    ga.append(cl * Ku)
    de.append(cl * Kum + Ku)
    starts = ms + [1]
    return CertifiedMeasure.from_bracket(series.infinite_rows(al, be, ga, de, starts, rel_tol=tol, budget=budget))


def an_bound(n: int, phi_n: float) -> float:
    """Upper-bound shape ``n log^2(phi)/phi^2 + 1/phi`` for the measure of ``A_n``."""
    if not phi_n > 1:
        raise DomainError("phi_n must exceed 1")
    lp = math.log(phi_n)
    return n * lp * lp / (phi_n * phi_n) + 1.0 / phi_n


@dataclass(frozen=True)
class SeriesPartials:
    total: np.ndarray
    reciprocal: np.ndarray
    log_part: np.ndarray

    def __len__(self) -> int:
        return self.total.size


def series_partial(phi) -> SeriesPartials:
    """Partial sums of ``sum (phi(n) + n log^2 phi(n)) / phi(n)^2``.

    ``phi`` is a table ``phi(1..N)``; it must be >= 1 and nondecreasing.
    """
    vals = np.asarray(phi, dtype=np.float64)
    if vals.ndim != 1 or vals.size == 0:
        raise ValidationError("phi must be a nonempty 1-d table")
    low = np.flatnonzero(vals < 1)
    if low.size:
        raise ValidationError(f"phi(n) < 1 at n={low[0] + 1}")
    drop = np.flatnonzero(np.diff(vals) < 0)
    if drop.size:
        raise ValidationError(f"phi is not nondecreasing: phi({drop[0] + 2}) < phi({drop[0] + 1})")
    n = np.arange(1, vals.size + 1, dtype=np.float64)
    lp = np.log(vals)
    recip = 1.0 / vals
    logp = n * lp * lp / (vals * vals)
    return SeriesPartials(np.cumsum(recip + logp), np.cumsum(recip), np.cumsum(logp))


def series_bracket(phi: Phi, N: int) -> tuple[float, float]:
    """``(S_N, S_N + tail bound)`` for a symbolic family; upper is inf when divergent."""
    s = float(series_partial(phi.table(N)).total[-1])
    return s, s + phi.tail_bound(N)
