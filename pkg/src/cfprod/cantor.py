"""The peak construction: a Cantor set whose points have three huge quotients
around each position ``n_k`` and quotients in ``{1..M}`` elsewhere.

Positions ``n_{k-1}+2 .. n_k-2`` are filled by ``m_k`` blocks of ``L``
regular quotients; ``n_k-1`` (pre-peak), ``n_k`` (peak) and ``n_k+1``
(post-peak) carry the large quotients.  Geometry is exact (big ints); masses
and the irrational thresholds ``alpha^n`` live in mpmath at a working
precision sized to the numbers involved.
"""
from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import mpmath
import numpy as np

from .cf import as_word, pqpair, qpair, subcylinder_span
from .errors import BudgetExceeded, DomainError, ValidationError
from .pressure import PotentialSpec, s_n_root

MATERIALIZE_CAP = 10 ** 6
BLOCK_TABLE_LIMIT = 1 << 20

REGULAR, PRE, PEAK, POST = "regular", "pre-peak", "peak", "post-peak"


@dataclass(frozen=True)
class ConstructionParams:
    L: int
    M: int
    B: float
    S: float
    mode: str
    m: tuple[int, ...]
    n: tuple[int, ...]
    n_next: int | None = None
    c: int | None = None
    log_block: np.ndarray = field(repr=False, compare=False, default=None)
    block_levels: tuple = field(repr=False, compare=False, default=())

    @property
    def alpha(self) -> mpmath.mpf:
        return mpmath.power(self.B, 1 - mpmath.mpf(self.S))

    @property
    def beta(self) -> mpmath.mpf:
        S = mpmath.mpf(self.S)
        return mpmath.power(self.B, 3 * S - 1 - S * S)

    @property
    def paper_schedule(self) -> bool:
        return self.mode == "paper"

    @property
    def max_depth(self) -> int:
        """Deepest position whose range is known from the materialised schedule."""
        if self.n_next is None:
            return self.n[-1] + 1
        return self.n_next - 2

    def echo(self) -> dict:
        return {"L": self.L, "M": self.M, "B": self.B, "S": self.S, "mode": self.mode, "c": self.c,
                "alpha": float(self.alpha), "beta": float(self.beta), "m": list(self.m), "n": list(self.n),
                "n_next": self.n_next}


def _paper_m(k: int, history: int, L: int, B: float) -> int:
    with mpmath.workdps(60):
        Bm = mpmath.mpf(B)
        val = 64 * Bm * L * L * k ** 4 * history / mpmath.log(2) + 8 * k * L * Bm * Bm
        return int(mpmath.ceil(val))


def _block_tables(L: int, M: int, S: float):
    if M ** L > BLOCK_TABLE_LIMIT:
        raise BudgetExceeded(f"{M}^{L} blocks exceed the block table limit")
    logq = np.array([math.log(qpair(b)[0]) for b in itertools.product(range(1, M + 1), repeat=L)])
    logw = -2.0 * S * logq
    logw -= np.logaddexp.reduce(logw)
    w = np.exp(logw)
    # levels[r][i]: total weight of blocks whose first r quotients have index i
    levels = tuple(w.reshape(M ** r, M ** (L - r)).sum(axis=1) for r in range(L + 1))
    return logw, levels


def schedule(L: int, M: int, B: float, mode: str = "paper", c: int | None = None,
             S: float | None = None, cap: int = MATERIALIZE_CAP, k_max: int = 64) -> ConstructionParams:
    """Schedule ``m_k``, ``n_k`` and the pre-dimensional number ``S``.

    ``mode="paper"`` takes the growth bound with equality (ceiling);
    ``mode="scaled"`` uses ``m_k = c k``.
    """
    if L < 1 or M < 1:
        raise DomainError("L and M must be >= 1")
    if not B > 1:
        raise DomainError("B must exceed 1")
    if mode not in ("paper", "scaled"):
        raise ValidationError(f"unknown schedule mode {mode!r}")
    if mode == "scaled" and (c is None or c < 1):
        raise ValidationError("scaled mode needs c >= 1")
    if S is None:
        S = s_n_root(L, PotentialSpec(B, "F2", M), tol=1e-14).value
    m, n = [0], [-1]
    n_next = None
    for k in range(1, k_max + 1):
        mk = _paper_m(k, sum(m), L, B) if mode == "paper" else c * k
        nk = n[-1] + mk * L + 3
        if nk > cap:
            n_next = nk
            break
        m.append(mk)
        n.append(nk)
    logw, levels = _block_tables(L, M, S)
    return ConstructionParams(L, M, float(B), float(S), mode, tuple(m[1:]), tuple(n), n_next,
                              c if mode == "scaled" else None, logw, levels)


# -- positions and ranges --------------------------------------------------------

def classify(pos: int, params: ConstructionParams) -> tuple[str, int]:
    """Tag of position ``pos`` (1-based) and the index ``k`` of its segment."""
    if pos < 1:
        raise DomainError("positions start at 1")
    for k in range(1, len(params.n)):
        nk = params.n[k]
        if pos <= nk - 2:
            return REGULAR, k
        if pos == nk - 1:
            return PRE, k
        if pos == nk:
            return PEAK, k
        if pos == nk + 1:
            return POST, k
    if params.n_next is not None and pos <= params.n_next - 2:
        return REGULAR, len(params.n)
    raise BudgetExceeded(f"position {pos} lies beyond the materialised schedule")


def _threshold(tag: str, nk: int, params: ConstructionParams):
    """``t`` with range ``[t, 2t]`` and a precision large enough to round it."""
    S = mpmath.mpf(params.S)
    lb = mpmath.log(params.B, 2)
    bits = nk * lb * (S if tag == PEAK else 1 - S)
    prec = max(80, int(bits) + 80)
    with mpmath.workprec(prec):
        a = mpmath.power(mpmath.mpf(params.B), nk * (1 - S))
        t = mpmath.power(mpmath.mpf(params.B), nk) / a if tag == PEAK else a
        return t, prec


def position_range(pos: int, params: ConstructionParams) -> tuple[int, int, str]:
    """Integer range ``[ceil t, floor 2t]`` (or ``[1, M]``) allowed at ``pos``."""
    return _position_range(pos, params)


@lru_cache(maxsize=4096)
def _position_range(pos: int, params: ConstructionParams) -> tuple[int, int, str]:
    tag, k = classify(pos, params)
    if tag == REGULAR:
        return 1, params.M, tag
    t, prec = _threshold(tag, params.n[k], params)
    with mpmath.workprec(prec):
        lo = int(mpmath.ceil(t))
        hi = int(mpmath.floor(2 * t))
    if lo > hi:
        raise DomainError(f"empty range at position {pos}")
    return max(lo, 1), hi, tag


def admissible_children(word: Sequence[int], params: ConstructionParams) -> range:
    """Admissible values of the next quotient."""
    lo, hi, _ = position_range(len(word) + 1, params)
    return range(lo, hi + 1)


def is_admissible(word: Sequence[int], params: ConstructionParams) -> bool:
    for i, a in enumerate(word, 1):
        lo, hi, _ = position_range(i, params)
        if not lo <= a <= hi:
            return False
    return True


def _require(word, params) -> tuple[int, ...]:
    w = as_word(word)
    if not is_admissible(w, params):
        raise DomainError(f"word is not in D_{len(w)}")
    return w


# -- geometry ------------------------------------------------------------------

def fundamental_interval(word: Sequence[int], params: ConstructionParams):
    w = as_word(word)
    lo, hi, _ = position_range(len(w) + 1, params)
    return subcylinder_span(w, lo, hi)


def _log_length(q: int, qm: int, lo: int, hi: int) -> float:
    # |span| = (hi + 1 - lo) / ((lo q + q') ((hi + 1) q + q'))
    return math.log(hi + 1 - lo) - math.log(lo * q + qm) - math.log((hi + 1) * q + qm)


@dataclass(frozen=True)
class LengthCheck:
    case: str
    length: Fraction
    brackets: tuple

    @property
    def inside(self) -> bool:
        x = mpmath.mpf(self.length.numerator) / self.length.denominator
        return all(lo <= x <= hi for lo, hi in self.brackets)


def length_case(n: int, params: ConstructionParams) -> tuple[str, int]:
    for k in range(1, len(params.n) + 1):
        nk = params.n[k] if k < len(params.n) else params.n_next
        if nk is None:
            break
        if n <= nk - 3:
            return "I", k
        if n == nk - 2:
            return "II", k
        if n == nk - 1:
            return "III", k
        if n == nk:
            return "IV", k
    raise BudgetExceeded(f"depth {n} lies beyond the materialised schedule")


def fundamental_length_bounds(word: Sequence[int], params: ConstructionParams) -> LengthCheck:
    """Exact ``|J_n|`` together with the case brackets it must satisfy."""
    w = _require(word, params)
    n = len(w)
    if n < 1:
        raise DomainError("order must be >= 1")
    J = fundamental_interval(w, params)
    q = qpair(w)[0]
    case, k = length_case(n, params)
    with mpmath.workprec(128):
        B = mpmath.mpf(params.B)
        al = mpmath.power(B, 1 - mpmath.mpf(params.S))
        q2 = mpmath.mpf(q) ** 2
        br = []
        if case == "I":
            br.append((1 / (8 * q2), 4 / q2))
            if k >= 2 and n == params.n[k - 1] + 1:
                q3 = mpmath.mpf(qpair(w[: n - 3])[0]) ** 2
                f = (B * al) ** (2 * (n - 1)) * q3
                br.append((1 / (2 ** 15 * f), 4 / f))
        elif case == "II":
            f = al ** (n + 2) * q2
            br.append((1 / (16 * f), 4 / f))
        elif case == "III":
            f = al ** (n + 1) / B ** (n + 1) / q2
            br.append((f / 16, 4 * f))
        else:
            f = al ** n * q2
            br.append((1 / (16 * f), 4 / f))
            q22 = mpmath.mpf(qpair(w[: n - 2])[0]) ** 2
            g = al ** n * B ** (2 * n) * q22
            br.append((1 / (2 ** 12 * g), 4 / g))
    return LengthCheck(case, J.length, tuple(br))


@dataclass(frozen=True)
class GapResult:
    gap: Fraction | None
    lower_gap: Fraction | None
    upper_gap: Fraction | None
    sides: str
    case: str
    ratio_bound: Fraction
    length: Fraction

    @property
    def one_sided(self) -> bool:
        return self.sides != "both"

    @property
    def holds(self) -> bool:
        return self.gap is None or self.gap >= self.ratio_bound * self.length


def _distance(a, b) -> Fraction:
    return max(b.left - a.right, a.left - b.right)


def gap(word: Sequence[int], params: ConstructionParams) -> GapResult:
    """Exact distance from ``J_n(word)`` to its neighbours ``a_n - 1`` and ``a_n + 1``."""
    w = _require(word, params)
    n = len(w)
    if n < 1:
        raise DomainError("order must be >= 1")
    J = fundamental_interval(w, params)
    lo, hi, _ = position_range(n, params)
    a = w[-1]
    down = _distance(J, fundamental_interval(w[:-1] + (a - 1,), params)) if a - 1 >= lo else None
    up = _distance(J, fundamental_interval(w[:-1] + (a + 1,), params)) if a + 1 <= hi else None
    present = [g for g in (down, up) if g is not None]
    sides = {2: "both", 0: "none"}.get(len(present), "lower-only" if down is not None else "upper-only")
    case, _ = length_case(n, params)
    bound = Fraction(1, 40 * params.M) if case == "I" else Fraction(1, 20)
    return GapResult(min(present) if present else None, down, up, sides, case, bound, J.length)


# -- mass ------------------------------------------------------------------------

@dataclass(frozen=True)
class MassAssignment:
    word: tuple[int, ...]
    mass: mpmath.mpf
    log_mass: float
    rule: str


def _block_index(digits: Sequence[int], M: int) -> int:
    idx = 0
    for d in digits:
        idx = idx * M + (d - 1)
    return idx


def _special_log_factor(tag: str, nk: int, count: int, params: ConstructionParams, rule: str) -> float:
    if rule == "count":
        return -math.log(count)
    la = nk * (1 - params.S) * math.log(params.B)
    if tag == PEAK:
        return la - nk * math.log(params.B)
    return -la


def log_mass(word: Sequence[int], params: ConstructionParams, rule: str = "count") -> float:
    """``log mu(J_n(word))``."""
    if rule not in ("count", "paper"):
        raise ValidationError(f"unknown mass rule {rule!r}")
    w = _require(word, params)
    L, M = params.L, params.M
    total = 0.0
    pos = 1
    n = len(w)
    while pos <= n:
        tag, k = classify(pos, params)
        if tag == REGULAR:
            # blocks of this segment start at n_{k-1} + 2
            start = params.n[k - 1] + 2
            off = (pos - start) % L
            assert off == 0
            block = w[pos - 1: pos - 1 + L]
            r = len(block)
            if r == L:
                total += float(params.log_block[_block_index(block, M)])
            else:
                total += math.log(params.block_levels[r][_block_index(block, M)])
            pos += r
        else:
            lo, hi, _ = position_range(pos, params)
            total += _special_log_factor(tag, params.n[k], hi - lo + 1, params, rule)
            pos += 1
    return total


def mu_assign(word: Sequence[int], params: ConstructionParams, rule: str = "count") -> MassAssignment:
    """Mass of ``J_n(word)``.

    ``rule="count"`` splits mass evenly over the admissible values at the
    three peak positions, so every layer has total mass 1.  ``rule="paper"``
    uses the factors ``1/alpha^{n_k}``, ``alpha^{n_k}/B^{n_k}``, ``1/alpha^{n_k}``.
    """
    lm = log_mass(word, params, rule)
    return MassAssignment(tuple(word), mpmath.exp(lm), lm, rule)


def children_mass_error(word: Sequence[int], params: ConstructionParams, rule: str = "count") -> float:
    """Relative mismatch between ``mu(word)`` and the sum over its children."""
    w = tuple(word)
    parent = mpmath.exp(log_mass(w, params, rule))
    kids = admissible_children(w, params)
    count = kids.stop - kids.start
    with mpmath.workdps(40):
        if count > 4096:
            # special positions: children carry equal mass, so one suffices
            tot = count * mpmath.exp(log_mass(w + (kids.start,), params, rule))
        else:
            tot = mpmath.fsum(mpmath.exp(log_mass(w + (a,), params, rule)) for a in kids)
        return float(abs(tot - parent) / parent)


# -- Hoelder audit ---------------------------------------------------------------

def sample_word(params: ConstructionParams, depth: int, rng: np.random.Generator) -> tuple[int, ...]:
    out = []
    for pos in range(1, depth + 1):
        lo, hi, _ = position_range(pos, params)
        if hi < 2 ** 62:
            out.append(int(rng.integers(lo, hi + 1)))
        else:
            span = hi - lo + 1
            out.append(lo + int.from_bytes(rng.bytes((span.bit_length() + 7) // 8 + 8), "little") % span)
    return tuple(out)


def _branch_exponents(word: tuple[int, ...], params: ConstructionParams, rule: str) -> list[float]:
    """``log mu(J_n) / log |J_n|`` along every prefix of ``word``."""
    exps = []
    q, qm = 1, 0
    lm = 0.0
    L = params.L
    pos = 1
    n = len(word)
    lms = [0.0] * (n + 1)
    # masses by prefix, reusing the block tables
    while pos <= n:
        tag, k = classify(pos, params)
        if tag == REGULAR:
            start = pos
            block = word[start - 1: start - 1 + L]
            for r in range(1, len(block) + 1):
                if r == L:
                    lms[start - 1 + r] = lm + float(params.log_block[_block_index(block, params.M)])
                else:
                    lms[start - 1 + r] = lm + math.log(params.block_levels[r][_block_index(block[:r], params.M)])
            lm = lms[start - 1 + len(block)]
            pos += len(block)
        else:
            lo, hi, _ = position_range(pos, params)
            lm += _special_log_factor(tag, params.n[k], hi - lo + 1, params, rule)
            lms[pos] = lm
            pos += 1
    for i, a in enumerate(word, 1):
        q, qm = a * q + qm, q
        lo, hi, _ = position_range(i + 1, params)
        exps.append(lms[i] / _log_length(q, qm, lo, hi))
    return exps


def holder_report(params: ConstructionParams, depth: int, samples: int, seed: int, rule: str = "count",
                  slack: float = 0.05, workers: int = 1, buckets: int = 20) -> dict:
    """Hoelder exponents ``log mu / log |J_n|`` along sampled branches."""
    if depth < 1 or depth > params.max_depth:
        raise BudgetExceeded(f"depth {depth} outside the materialised schedule (max {params.max_depth})")
    seqs = np.random.SeedSequence(seed).spawn(samples)

    def run(ss):
        w = sample_word(params, depth, np.random.default_rng(ss))
        return w, _branch_exponents(w, params, rule)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(run, seqs))
    else:
        results = [run(ss) for ss in seqs]
    allexp = np.array([e for _, es in results for e in es])
    per_depth_min = np.min(np.array([es for _, es in results]), axis=0)
    threshold = params.S - 4.0 / params.L - slack
    audit_depths = sorted({min(depth, d) for d in (1, params.L, depth)} |
                          {d for nk in params.n[1:] for d in (nk - 2, nk - 1, nk, nk + 1) if 1 <= d <= depth})
    mass_checks = []
    for d in audit_depths:
        if d >= depth:
            continue
        errs = [children_mass_error(w[:d], params, rule) for w, _ in results[: min(samples, 8)]]
        mass_checks.append({"depth": d, "max_rel_error": max(errs)})
    hist, edges = np.histogram(allexp, bins=buckets)
    report = {
        "schedule": params.echo(),
        "rule": rule,
        "depth": depth,
        "samples": samples,
        "seed": seed,
        "threshold": threshold,
        "min_exponent": float(allexp.min()),
        "median_exponent": float(np.median(allexp)),
        "argmin_depth": int(np.argmin(per_depth_min)) + 1,
        "asserted": params.paper_schedule,
        "passed": bool(allexp.min() >= threshold),
        "mass_checks": mass_checks,
        "histogram": {"edges": [float(e) for e in edges], "counts": [int(c) for c in hist]},
    }
    return report


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)
