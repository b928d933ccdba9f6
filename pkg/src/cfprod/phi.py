"""Threshold functions phi(n) with a closed grammar.

Accepted spellings::

    n^a               power family, a > 0   ("n" alone means a = 1)
    n*log(n+1)^c      c >= 0
    B^n               geometric, B > 1
    <number>          constant (never tends to infinity; rejected where that matters)

Families know their own convergence behaviour for the series
``sum (phi + n log^2 phi) / phi^2`` so tails can be bounded by the integral
test instead of guessed from a finite table.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

_NUM = r"([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)"
_PATTERNS = [
    ("power", re.compile(rf"^n\s*\^\s*{_NUM}$")),
    ("nlog", re.compile(rf"^n\s*\*\s*log\(\s*n\s*\+\s*1\s*\)\s*\^\s*{_NUM}$")),
    ("geometric", re.compile(rf"^{_NUM}\s*\^\s*n$")),
    ("const", re.compile(rf"^{_NUM}$")),
]


@dataclass(frozen=True)
class Phi:
    kind: str
    param: float

    @property
    def spec(self) -> str:
        p = f"{self.param:g}"
        return {"power": f"n^{p}", "nlog": f"n*log(n+1)^{p}", "geometric": f"{p}^n", "const": p}[self.kind]

    def __str__(self) -> str:
        return self.spec

    @property
    def tends_to_infinity(self) -> bool:
        return self.kind != "const"

    def log(self, n) -> np.ndarray:
        """``log phi(n)``; safe for geometric families at large n."""
        n = np.asarray(n, dtype=np.float64)
        if self.kind == "power":
            return self.param * np.log(n)
        if self.kind == "nlog":
            return np.log(n) + self.param * np.log(np.log(n + 1.0))
        if self.kind == "geometric":
            return n * math.log(self.param)
        return np.full_like(n, math.log(self.param))

    def __call__(self, n) -> np.ndarray:
        return np.exp(self.log(n))

    def table(self, N: int) -> np.ndarray:
        return self(np.arange(1, N + 1))

    def term(self, x: float) -> float:
        """Summand ``1/phi + x log^2(phi) / phi^2`` at real ``x``."""
        lp = float(self.log(x))
        return math.exp(-lp) + x * lp * lp * math.exp(-2 * lp)

    @property
    def series_converges(self) -> bool:
        if self.kind == "power":
            return self.param > 1
        if self.kind == "nlog":
            return self.param > 1.5
        return self.kind == "geometric"

    def tail_bound(self, N: int) -> float:
        """Upper bound for ``sum_{n > N}`` of the summand (inf when divergent)."""
        if not self.series_converges:
            return math.inf
        if self.kind == "power":
            a = self.param
            b = 2 * a - 2
            if N < math.exp(2 / (1 + b)):
                raise ValidationError("integral-test tail needs a larger N")
            L = math.log(N)
            first = N ** (1 - a) / (a - 1)
            second = a * a * N ** -b * (L * L / b + 2 * L / b ** 2 + 2 / b ** 3)
            return first + second
        import mpmath

        f = lambda x: mpmath.mpf(self.term(float(x)))
        return float(mpmath.quad(f, [N, 10 * N, mpmath.inf]))


def parse_phi(text: str) -> Phi:
    t = text.strip()
    if t == "n":
        return Phi("power", 1.0)
    for kind, pat in _PATTERNS:
        m = pat.match(t)
        if m:
            val = float(m.group(1))
            if kind == "power" and val <= 0:
                raise ValidationError("power family needs a > 0")
            if kind == "geometric" and val <= 1:
                raise ValidationError("geometric family needs B > 1")
            if kind == "const" and val < 1:
                raise ValidationError("constant phi must be >= 1")
            return Phi(kind, val)
    raise ValidationError(f"cannot parse phi {text!r}; expected n^a, n*log(n+1)^c, B^n or a constant")


def require_unbounded(phi: Phi) -> Phi:
    if not phi.tends_to_infinity:
        raise ValidationError(f"phi={phi.spec} is bounded; the zero-one law needs phi -> infinity")
    return phi
