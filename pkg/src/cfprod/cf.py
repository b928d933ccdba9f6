"""Exact continued-fraction arithmetic.

Words are plain tuples of positive ints ``(a_1, ..., a_n)``.  Everything in
this module is exact (``int`` / ``Fraction``); it is the oracle layer the
numerical modules are tested against.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import DomainError

Word = tuple[int, ...]


def as_word(quotients: Iterable[int]) -> Word:
    """Validate and freeze a sequence of partial quotients."""
    w = tuple(int(a) for a in quotients)
    for i, a in enumerate(w, 1):
        if a < 1:
            raise DomainError(f"partial quotient a_{i}={a} must be >= 1")
    return w


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        raise DomainError("floats are not accepted; pass a Fraction or 'p/q'")
    return Fraction(x)


@dataclass(frozen=True)
class ContinuantTable:
    """Convergent numerators and denominators with the seed rows.

    ``p[0], q[0]`` hold ``p_{-1}, q_{-1} = 1, 0`` and ``p[1], q[1]`` hold
    ``p_0, q_0 = 0, 1``; so ``p_i`` lives at index ``i + 1``.
    """

    word: Word
    p: tuple[int, ...]
    q: tuple[int, ...]

    @property
    def order(self) -> int:
        return len(self.word)

    def pn(self, i: int) -> int:
        return self.p[i + 1]

    def qn(self, i: int) -> int:
        return self.q[i + 1]

    def convergent(self, i: int | None = None) -> Fraction:
        i = self.order if i is None else i
        return Fraction(self.pn(i), self.qn(i))


def continuants(w: Sequence[int]) -> ContinuantTable:
    w = as_word(w)
    p = [1, 0]
    q = [0, 1]
    for a in w:
        p.append(a * p[-1] + p[-2])
        q.append(a * q[-1] + q[-2])
    return ContinuantTable(w, tuple(p), tuple(q))


def qpair(w: Sequence[int]) -> tuple[int, int]:
    """``(q_n, q_{n-1})`` of a word, without building the full table."""
    q1, q0 = 1, 0
    for a in w:
        q1, q0 = a * q1 + q0, q1
    return q1, q0


def pqpair(w: Sequence[int]) -> tuple[int, int, int, int]:
    """``(p_n, q_n, p_{n-1}, q_{n-1})``."""
    p1, p0, q1, q0 = 0, 1, 1, 0
    for a in w:
        p1, p0 = a * p1 + p0, p1
        q1, q0 = a * q1 + q0, q1
    return p1, q1, p0, q0


def continuant(w: Sequence[int]) -> int:
    return qpair(w)[0]


def evaluate(w: Sequence[int]) -> Fraction:
    """Value of the finite continued fraction ``[a_1, ..., a_n]``; 0 for the empty word."""
    x = Fraction(0)
    for a in reversed(w):
        x = 1 / (a + x)
    return x


def cf_expand(x) -> Word:
    """Canonical finite expansion of a rational in (0, 1).

    The last quotient is at least 2 except for ``x = 1``-type words of
    length one, which cannot occur on the open interval.
    """
    x = _as_fraction(x)
    if not 0 < x < 1:
        raise DomainError(f"cf_expand needs 0 < x < 1, got {x}")
    num, den = x.numerator, x.denominator
    out = []
    while num:
        a, r = divmod(den, num)
        out.append(a)
        num, den = r, num
    return tuple(out)


def gauss_map(x) -> Fraction:
    x = _as_fraction(x)
    if not 0 <= x < 1:
        raise DomainError(f"Gauss map is defined on [0, 1), got {x}")
    if x == 0:
        return x
    y = 1 / x
    return y - (y.numerator // y.denominator)


def gauss_iterate(x, k: int) -> Fraction:
    if k < 0:
        raise DomainError("k must be >= 0")
    x = _as_fraction(x)
    if not 0 <= x < 1:
        raise DomainError(f"Gauss map is defined on [0, 1), got {x}")
    for _ in range(k):
        if x == 0:
            break
        x = gauss_map(x)
    return x


LEFT_CLOSED = "left-closed"
RIGHT_CLOSED = "right-closed"


@dataclass(frozen=True)
class RationalInterval:
    left: Fraction
    right: Fraction
    closed_side: str
    order: int

    def __post_init__(self):
        if not self.left < self.right:
            raise DomainError("empty interval")

    @property
    def length(self) -> Fraction:
        return self.right - self.left

    def __contains__(self, x) -> bool:
        x = _as_fraction(x)
        if self.closed_side == LEFT_CLOSED:
            return self.left <= x < self.right
        return self.left < x <= self.right

    def contains_interval(self, other: "RationalInterval") -> bool:
        return self.left <= other.left and other.right <= self.right

    def __str__(self) -> str:
        lb, rb = ("[", ")") if self.closed_side == LEFT_CLOSED else ("(", "]")
        return f"{lb}{self.left}, {self.right}{rb}"


def cylinder(w: Sequence[int]) -> RationalInterval:
    """The basic cylinder ``I_n(w)``; the empty word gives ``[0, 1)``."""
    w = as_word(w)
    pn, qn, pm, qm = pqpair(w)
    a = Fraction(pn, qn)
    b = Fraction(pn + pm, qn + qm)
    if len(w) % 2 == 0:
        return RationalInterval(a, b, LEFT_CLOSED, len(w))
    return RationalInterval(b, a, RIGHT_CLOSED, len(w))


def cylinder_length(w: Sequence[int]) -> Fraction:
    qn, qm = qpair(as_word(w))
    return Fraction(1, qn * (qn + qm))


def tail_measure(w: Sequence[int], m: int) -> Fraction:
    """Lebesgue measure of ``{x in I_n(w): a_{n+1}(x) >= m}``."""
    if m < 1:
        raise DomainError("tail threshold m must be >= 1")
    qn, qm = qpair(as_word(w))
    return Fraction(1, qn * (m * qn + qm))


def subcylinder_span(w: Sequence[int], lo: int, hi: int) -> RationalInterval:
    """The interval ``{x in I_n(w): lo <= a_{n+1}(x) <= hi}`` as one piece.

    Children are ordered monotonically in ``a_{n+1}``, so the union of a
    contiguous run of them is an interval.
    """
    w = as_word(w)
    if not 1 <= lo <= hi:
        raise DomainError("need 1 <= lo <= hi")
    pn, qn, pm, qm = pqpair(w)
    x_lo = Fraction(lo * pn + pm, lo * qn + qm)
    x_hi = Fraction((hi + 1) * pn + pm, (hi + 1) * qn + qm)
    n1 = len(w) + 1
    left, right = min(x_lo, x_hi), max(x_lo, x_hi)
    side = LEFT_CLOSED if n1 % 2 == 0 else RIGHT_CLOSED
    return RationalInterval(left, right, side, n1)
