"""Monte Carlo experiments on large partial quotients of uniform random reals.

A sample is the dyadic rational ``u / 2^bits`` with ``u`` uniform; its
quotients come from Euclid's algorithm and only the first ``usable`` of them
are ever read (the terminating tail of a rational would bias statistics).
Every sample draws from its own child of one ``SeedSequence``, so results
do not depend on how samples are spread over workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import ValidationError
from .measure import an_bound
from .phi import Phi, parse_phi, require_unbounded

try:  # optional: roughly 4x faster long division
    import gmpy2

    _mpz, _divmod = gmpy2.mpz, gmpy2.f_divmod
except ImportError:  # pragma: no cover
    _mpz, _divmod = int, divmod

TAGS = ("E1", "E2", "F1", "F2")
CHUNK = 128
Z95 = NormalDist().inv_cdf(0.975)


@dataclass(frozen=True)
class SampleStream:
    seed: int
    bits: int
    count: int
    usable: int | None = None

    def __post_init__(self):
        if self.bits < 256:
            raise ValidationError("bits must be >= 256")
        if self.count < 1:
            raise ValidationError("count must be >= 1")
        if self.usable is None:
            object.__setattr__(self, "usable", self.bits // 4)
        if not 1 <= self.usable <= self.bits // 4:
            raise ValidationError(f"usable must lie in [1, bits/4 = {self.bits // 4}]")

    @classmethod
    def for_depth(cls, seed: int, count: int, n_max: int) -> "SampleStream":
        """Smallest stream exposing quotients up to index ``n_max``."""
        bits = max(256, 64 * math.ceil(4 * n_max / 64))
        return cls(seed, bits, count)


@dataclass(frozen=True)
class EventFamily:
    tag: str
    phi: Phi

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValidationError(f"family must be one of {TAGS}, got {self.tag!r}")
        require_unbounded(self.phi)

    @classmethod
    def parse(cls, tag: str, phi: str) -> "EventFamily":
        return cls(tag, parse_phi(phi))


def _expand(seq: np.random.SeedSequence, bits: int, usable: int) -> np.ndarray:
    rng = np.random.default_rng(seq)
    u = int.from_bytes(rng.bytes(bits // 8), "little")
    out = np.full(usable, np.nan)
    num, den = _mpz(u), _mpz(1) << bits
    i = 0
    while num and i < usable:
        a, r = _divmod(den, num)
        out[i] = float(a)
        num, den = r, num
        i += 1
    return out


def _children(stream: SampleStream) -> list:
    return np.random.SeedSequence(stream.seed).spawn(stream.count)


def _expand_chunk(args) -> np.ndarray:
    seqs, bits, usable = args
    return np.vstack([_expand(s, bits, usable) for s in seqs])


def _chunks(stream: SampleStream, chunk: int = CHUNK):
    seqs = _children(stream)
    for i in range(0, len(seqs), chunk):
        yield seqs[i: i + chunk], stream.bits, stream.usable


def _map_chunks(fn, stream: SampleStream, workers: int):
    jobs = list(_chunks(stream))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(min(workers, len(jobs))) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


def sample_quotients(stream: SampleStream, workers: int = 1) -> np.ndarray:
    """``(count, usable)`` array of quotients as floats (exact below 2^53)."""
    return np.vstack(_map_chunks(_expand_chunk, stream, workers))


def _exclusive_prefix_max(x: np.ndarray) -> np.ndarray:
    out = np.full_like(x, -np.inf)
    out[:, 1:] = np.maximum.accumulate(x, axis=1)[:, :-1]
    return out


def event_mask(q: np.ndarray, family: EventFamily, lo: int, hi: int) -> np.ndarray:
    """Boolean ``(samples, hi - lo + 1)``: event of ``family`` at each ``n`` in ``[lo, hi]``."""
    q = np.atleast_2d(np.asarray(q, dtype=np.float64))
    if lo < 1 or hi < lo:
        raise ValidationError("need 1 <= lo <= hi")
    if hi + 1 > q.shape[1]:
        raise ValidationError(f"window end {hi} needs quotient {hi + 1}, only {q.shape[1]} usable")
    n = np.arange(lo, hi + 1)
    phi = family.phi(n)
    with np.errstate(invalid="ignore"):
        a_n = q[:, lo - 1: hi]
        if family.tag == "E1":
            return a_n >= phi
        prod = q[:, :-1] * q[:, 1:]
        if family.tag == "E2":
            return prod[:, lo - 1: hi] >= phi
        if family.tag == "F2":
            before = _exclusive_prefix_max(prod)[:, lo - 1: hi]
            return (before >= phi) & (prod[:, lo - 1: hi] >= phi)
        before = _exclusive_prefix_max(q)[:, lo - 1: hi]
        return (before >= phi) & (a_n >= phi)


def detect_A_n(quotients, family: EventFamily, n_range: tuple[int, int]) -> np.ndarray:
    """Indices ``n`` in ``n_range`` (inclusive) where the event holds for one sample."""
    lo, hi = n_range
    mask = event_mask(np.asarray(quotients, dtype=np.float64)[None, :], family, lo, hi)[0]
    return np.flatnonzero(mask) + lo


def wilson(hits: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = hits / n
    d = 1 + z * z / n
    c = (p + z * z / (2 * n)) / d
    h = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / d
    lo = 0.0 if hits == 0 else max(0.0, c - h)
    hi = 1.0 if hits == n else min(1.0, c + h)
    return min(lo, p), max(hi, p)


@dataclass(frozen=True)
class HitResult:
    family: str
    phi: str
    window: tuple[int, int]
    samples: int
    hits: int
    fraction: float
    ci_lo: float
    ci_hi: float
    seed: int
    method: str = "MC"

    def row(self) -> dict:
        return {"family": self.family, "phi": self.phi, "window": f"{self.window[0]}:{self.window[1]}",
                "samples": self.samples, "hits": self.hits, "fraction": self.fraction, "ci_lo": self.ci_lo,
                "ci_hi": self.ci_hi, "seed": self.seed, "method": self.method}


def _hits_chunk(args):
    job, families, lo, hi = args
    q = _expand_chunk(job)
    return [event_mask(q, f, lo, hi).any(axis=1) for f in families]


def hit_fractions(families, window: tuple[int, int], stream: SampleStream, workers: int = 1) -> list[HitResult]:
    """Fraction of samples with at least one event in ``window``, for several families at once."""
    lo, hi = window
    if hi + 1 > stream.usable:
        raise ValidationError(f"window end {hi} exceeds usable quotients {stream.usable}")
    families = list(families)
    jobs = [(j, families, lo, hi) for j in _chunks(stream)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(min(workers, len(jobs))) as ex:
            parts = list(ex.map(_hits_chunk, jobs))
    else:
        parts = [_hits_chunk(j) for j in jobs]
    out = []
    for i, f in enumerate(families):
        hits = int(sum(int(p[i].sum()) for p in parts))
        lo_ci, hi_ci = wilson(hits, stream.count)
        out.append(HitResult(f.tag, f.phi.spec, (lo, hi), stream.count, hits, hits / stream.count,
                             lo_ci, hi_ci, stream.seed))
    return out


def hit_fraction(family: EventFamily, n_window: tuple[int, int], stream: SampleStream,
                 workers: int = 1) -> HitResult:
    return hit_fractions([family], n_window, stream, workers)[0]


@dataclass(frozen=True)
class AnEstimate:
    n: int
    estimate: float
    ci_lo: float
    ci_hi: float
    hits: int
    samples: int
    bound: float

    @property
    def ratio(self) -> float:
        return self.estimate / self.bound


def an_measure_estimate(n: int, family: EventFamily, stream: SampleStream, workers: int = 1) -> AnEstimate:
    """Monte Carlo estimate of the measure of ``A_n`` next to the bound shape."""
    if n + 1 > stream.usable:
        raise ValidationError("n + 1 exceeds usable quotients")
    res = hit_fraction(family, (n, n), stream, workers)
    phi_n = float(family.phi(n))
    return AnEstimate(n, res.fraction, res.ci_lo, res.ci_hi, res.hits, res.samples, an_bound(n, phi_n))


def _digits_chunk(args):
    job, digits = args
    q = _expand_chunk(job)
    finite = np.isfinite(q)
    return [int((q == d).sum()) for d in digits], int(finite.sum())


def digit_frequencies(stream: SampleStream, digits=(1, 2, 3), workers: int = 1) -> list[dict]:
    """Empirical frequencies of small quotients against the Gauss-Kuzmin law."""
    jobs = [(j, tuple(digits)) for j in _chunks(stream)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(min(workers, len(jobs))) as ex:
            parts = list(ex.map(_digits_chunk, jobs))
    else:
        parts = [_digits_chunk(j) for j in jobs]
    total = sum(p[1] for p in parts)
    rows = []
    for i, d in enumerate(digits):
        c = sum(p[0][i] for p in parts)
        p_exp = math.log2((d + 1) ** 2 / (d * (d + 2)))
        sigma = math.sqrt(p_exp * (1 - p_exp) / total)
        freq = c / total
        rows.append({"digit": d, "count": c, "total": total, "frequency": freq, "expected": p_exp,
                     "sigma": sigma, "z": (freq - p_exp) / sigma})
    return rows
