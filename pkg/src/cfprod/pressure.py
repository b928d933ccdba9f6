"""Pressure of finite-alphabet Gauss subsystems and the dimension numbers built on it.

Two independent routes to ``lambda_n(s) = sum q_n^(-2s)`` over ``{1..M}^n``:
direct word enumeration, and ``n`` applications of the transfer operator

    (L_s f)(x) = sum_{a <= M} (a + x)^(-2s) f(1 / (a + x))

evaluated at ``x = 0``.  The operator is discretised by barycentric
interpolation on Chebyshev-Lobatto points of [0, 1]; its spectral radius
gives the pressure ``P_M(s)``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import BudgetExceeded, ConvergenceError, DomainError, NoSignChange, OrderingViolation, ValidationError

S_MAX = 1.5
ENUM_BUDGET = 10 ** 8
SPECTRUM_CACHE_WORDS = 1 << 22
DEFAULT_NODES = 64

G_FUNCS = {
    "E1": lambda s: s,
    "F1": lambda s: 3 * s - 1,
    "E2": lambda s: s * s,
    "F2": lambda s: 3 * s - 1 - s * s,
}
PROFILE_ORDER = ("F1", "E1", "F2", "E2")


@dataclass(frozen=True)
class PotentialSpec:
    B: float
    g: str
    M: int

    def __post_init__(self):
        if not self.B > 1:
            raise DomainError(f"B must exceed 1, got {self.B}")
        if self.g not in G_FUNCS:
            raise ValidationError(f"g must be one of {sorted(G_FUNCS)}, got {self.g!r}")
        if int(self.M) != self.M or self.M < 1:
            raise DomainError(f"M must be a positive integer, got {self.M}")

    def gval(self, s: float) -> float:
        return G_FUNCS[self.g](s)


@dataclass(frozen=True)
class DimensionEstimate:
    value: float
    lo: float
    hi: float
    method: str
    n_or_nodes: int
    M: int
    B: float | None = None
    g: str | None = None
    history: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if not (0 <= self.lo <= self.value <= self.hi <= S_MAX):
            raise ValidationError(f"inconsistent bracket {self.lo} <= {self.value} <= {self.hi}")

    def row(self) -> dict:
        d = asdict(self)
        d.pop("history")
        return d


def _check_s(s: float) -> float:
    s = float(s)
    if not 0 <= s <= S_MAX:
        raise DomainError(f"s must lie in [0, {S_MAX}], got {s}")
    return s


# -- enumeration ---------------------------------------------------------------

def _check_budget(M: int, n: int, budget: int) -> None:
    if n < 1:
        raise DomainError("n must be >= 1")
    if M ** n > budget:
        raise BudgetExceeded(f"{M}^{n} words exceed the enumeration budget {budget}")


def lambda_n(M: int, n: int, s: float, workers: int = 1, budget: int = ENUM_BUDGET) -> float:
    """``sum q_n(w)^(-2s)`` over all words of length ``n`` on ``{1..M}``."""
    _check_budget(M, n, budget)
    if M ** n <= SPECTRUM_CACHE_WORDS:
        return math.fsum(np.exp(-2.0 * s * _log_q_spectrum(M, n)))
    firsts = range(1, M + 1)
    part = lambda a: float(kernels.power_sums_by_first(M, n, s, a, a)[0])
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            vals = list(ex.map(part, firsts))
    else:
        vals = [part(a) for a in firsts]
    # per-first-quotient partials are fixed, so the total is worker-independent
    return math.fsum(vals)


@lru_cache(maxsize=32)
def _log_q_spectrum(M: int, n: int) -> np.ndarray:
    q1 = np.ones(1)
    q0 = np.zeros(1)
    for _ in range(n):
        a = np.arange(1, M + 1, dtype=np.float64)[None, :]
        q1, q0 = (a * q1[:, None] + q0[:, None]).ravel(), np.repeat(q1, M)
    out = np.sort(np.log(q1))[::-1].copy()
    out.setflags(write=False)
    return out


def log_f_n(n: int, s: float, spec: PotentialSpec, workers: int = 1) -> float:
    s = _check_s(s)
    lam = lambda_n(spec.M, n, s, workers)
    return -n * spec.gval(s) * math.log(spec.B) + math.log(lam)


def f_n_eval(n: int, s: float, spec: PotentialSpec, workers: int = 1) -> float:
    """``B^(-n g(s)) sum q_n^(-2s)`` (computed in the log domain)."""
    return math.exp(log_f_n(n, s, spec, workers))


def _bisect(h, lo: float, hi: float, tol: float, max_iter: int = 200):
    """Root of a decreasing ``h`` with ``h(lo) >= 0 >= h(hi)``."""
    for _ in range(max_iter):
        if hi - lo <= tol:
            return lo, hi
        mid = 0.5 * (lo + hi)
        if h(mid) >= 0:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError("bisection did not reach tolerance")


def s_n_root(n: int, spec: PotentialSpec, tol: float = 1e-12, workers: int = 1) -> DimensionEstimate:
    """``inf{s >= 0 : f_n(s) <= 1}`` by bisection."""
    h = lambda s: log_f_n(n, s, spec, workers)
    h0 = h(0.0)
    if h0 <= 0:
        return DimensionEstimate(0.0, 0.0, 0.0, "enumeration", n, spec.M, spec.B, spec.g)
    if h(S_MAX) > 0:
        raise NoSignChange(f"f_{n}({S_MAX}) > 1 for {spec}")
    lo, hi = _bisect(h, 0.0, S_MAX, tol)
    return DimensionEstimate(0.5 * (lo + hi), lo, hi, "enumeration", n, spec.M, spec.B, spec.g)


# -- transfer operator ---------------------------------------------------------

def chebyshev_nodes(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Lobatto points on [0, 1] (node 0 is x = 0) and their barycentric weights."""
    if N < 2:
        raise DomainError("need at least two nodes")
    j = np.arange(N)
    x = 0.5 * (1.0 - np.cos(np.pi * j / (N - 1)))
    x[0] = 0.0
    w = (-1.0) ** j
    w[0] *= 0.5
    w[-1] *= 0.5
    return x, w


@lru_cache(maxsize=256)
def _operator(s: float, M: int, N: int) -> np.ndarray:
    x, w = chebyshev_nodes(N)
    A = kernels.operator_matrix(s, M, x, w)
    A.setflags(write=False)
    return A


@dataclass(frozen=True)
class OperatorState:
    values: np.ndarray
    s: float
    M: int

    @property
    def nodes(self) -> np.ndarray:
        return chebyshev_nodes(self.values.size)[0]

    @classmethod
    def ones(cls, s: float, M: int, N: int = DEFAULT_NODES) -> "OperatorState":
        return cls(np.ones(N), float(s), int(M))

    def at_zero(self) -> float:
        return float(self.values[0])


def transfer_apply(state: OperatorState) -> OperatorState:
    A = _operator(state.s, state.M, state.values.size)
    out = A @ state.values
    if not np.all(out > 0):
        raise ConvergenceError("operator image lost positivity")
    return OperatorState(out, state.s, state.M)


def operator_lambda_n(M: int, n: int, s: float, nodes: int = DEFAULT_NODES) -> float:
    """``(L_s^n 1)(0)`` on the discretised operator."""
    st = OperatorState.ones(_check_s(s), M, nodes)
    for _ in range(n):
        st = transfer_apply(st)
    return st.at_zero()


def _power_log_radius(s: float, M: int, N: int, tol: float, max_iter: int) -> float:
    A = _operator(s, M, N)
    v = np.ones(N)
    prev = None
    for _ in range(max_iter):
        u = A @ v
        if not u[0] > 0:
            raise ConvergenceError("power iterate lost positivity")
        r = math.log(u[0] / v[0])
        v = u / u[0]
        if prev is not None and abs(r - prev) < tol:
            return r
        prev = r
    raise ConvergenceError(f"power iteration for s={s}, M={M} did not settle in {max_iter} steps")


def pressure(s: float, M: int, tol: float = 1e-13, nodes: int = DEFAULT_NODES, max_iter: int = 10_000,
             refine: bool = True, node_tol: float = 1e-10, max_nodes: int = 1024) -> float:
    """``P_M(s)``: log spectral radius of the discretised ``L_s``.

    With ``refine`` the node count is doubled until two successive values
    agree to ``node_tol``.
    """
    s = _check_s(s)
    if M < 1:
        raise DomainError("M must be >= 1")
    p = _power_log_radius(s, M, nodes, tol, max_iter)
    if not refine:
        return p
    N = nodes
    while True:
        N *= 2
        if N > max_nodes:
            raise ConvergenceError(f"pressure not resolved with {max_nodes} nodes")
        q = _power_log_radius(s, M, N, tol, max_iter)
        if abs(q - p) < node_tol:
            return q
        p = q


def dimension(spec: PotentialSpec, tol: float = 1e-9, nodes: int = DEFAULT_NODES,
              bracket: tuple[float, float] | None = None, max_nodes: int = 512) -> DimensionEstimate:
    """Root of ``-g(s) log B + P_M(s)`` on [0, 3/2]."""
    logB = math.log(spec.B)

    def solve(N):
        h = lambda s: -spec.gval(s) * logB + pressure(s, spec.M, nodes=N, refine=False)
        lo, hi = (0.0, S_MAX) if bracket is None else bracket
        if bracket is not None and not (h(lo) >= 0 >= h(hi)):
            lo, hi = 0.0, S_MAX
        if h(lo) <= 0 and lo == 0.0:
            return 0.0, 0.0, h
        if h(hi) > 0:
            raise NoSignChange(f"no root of the pressure equation in [0, {S_MAX}] for {spec}")
        lo, hi = _bisect(h, lo, hi, tol)
        return lo, hi, h

    N = nodes
    lo, hi, _ = solve(N)
    while True:
        if 2 * N > max_nodes:
            raise ConvergenceError(f"dimension for {spec} not stable under node doubling")
        lo2, hi2, h2 = solve(2 * N)
        if abs(0.5 * (lo2 + hi2) - 0.5 * (lo + hi)) <= tol:
            if hi2 > 0 and not (h2(lo2) >= 0 >= h2(hi2)):
                raise NoSignChange("sign change lost at refined node count")
            return DimensionEstimate(0.5 * (lo2 + hi2), lo2, hi2, "operator", 2 * N, spec.M, spec.B, spec.g)
        N *= 2
        lo, hi = lo2, hi2


def dimension_extrapolate(B: float, g: str, tol_M: float = 5e-3, tol: float = 1e-9, M_start: int = 2,
                          M_max: int = 1 << 14) -> DimensionEstimate:
    """Dimension for ``M = M_start, 2 M_start, ...`` until successive values agree to ``tol_M``."""
    history = []
    prev = None
    M = M_start
    while M <= M_max:
        hint = None if prev is None else (max(0.0, prev.value - 10 * tol), S_MAX)
        est = dimension(PotentialSpec(B, g, M), tol, bracket=hint)
        history.append((M, est.value))
        if prev is not None:
            if est.value < prev.value - 10 * tol:
                raise ConvergenceError(f"dimension decreased from M={prev.M} to M={M}: {history}")
            if est.value - prev.value < tol_M:
                return DimensionEstimate(est.value, est.lo, est.hi, est.method, est.n_or_nodes, M, B, g,
                                         tuple(history))
        prev = est
        M *= 2
    raise ConvergenceError(f"no M-convergence to {tol_M} up to M={M_max}: {history}")


@dataclass(frozen=True)
class ProfileRow:
    B: float
    M: int
    values: dict

    @property
    def ordered(self) -> bool:
        v = [self.values[k].value for k in PROFILE_ORDER]
        return all(a <= b for a, b in zip(v, v[1:]))

    @property
    def in_range(self) -> bool:
        return all(0.5 < e.value < 1 for e in self.values.values())


def theorem_profile(B_grid, M: int, tol: float = 1e-9, check: bool = True) -> list[ProfileRow]:
    """The four dimension numbers per ``B``; raises ``OrderingViolation`` when out of order."""
    grid = [float(b) for b in B_grid]
    if not grid:
        raise ValidationError("empty B grid")
    rows = []
    for B in grid:
        vals = {g: dimension(PotentialSpec(B, g, M), tol) for g in PROFILE_ORDER}
        rows.append(ProfileRow(B, M, vals))
    if check:
        bad = [r.B for r in rows if not r.ordered]
        if bad:
            err = OrderingViolation(f"F1 <= E1 <= F2 <= E2 fails at B in {bad}")
            err.rows = rows
            raise err
    return rows


def profile_records(rows: list[ProfileRow]) -> list[dict]:
    out = []
    for r in rows:
        for g in PROFILE_ORDER:
            e = r.values[g]
            out.append({"B": r.B, "g": g, "M": r.M, "n_or_nodes": e.n_or_nodes, "value": e.value,
                        "lo": e.lo, "hi": e.hi, "method": e.method})
    return out
