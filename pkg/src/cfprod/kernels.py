"""Kernel dispatch: compiled extension when importable, numpy otherwise.

Set ``CFPROD_PURE=1`` in the environment to force the fallback.  ``BACKEND``
names the active implementation; ``use_backend`` swaps it at runtime (used
by the benchmark and by the cross-backend tests).
"""
from __future__ import annotations

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # pragma: no cover - depends on build
    _ckernels = None

_IMPLS = {"python": _pykernels}
if _ckernels is not None:
    _IMPLS["compiled"] = _ckernels

BACKEND = "compiled" if _ckernels is not None and not os.environ.get("CFPROD_PURE") else "python"
_active = _IMPLS[BACKEND]


def available() -> list[str]:
    return sorted(_IMPLS)


def use_backend(name: str) -> str:
    """Select a backend; returns the previous one."""
    global BACKEND, _active
    if name not in _IMPLS:
        raise ValueError(f"backend {name!r} unavailable; have {available()}")
    prev = BACKEND
    BACKEND, _active = name, _IMPLS[name]
    return prev


def power_sums_by_first(M, n, s, first_lo, first_hi):
    return _active.power_sums_by_first(int(M), int(n), float(s), int(first_lo), int(first_hi))


def pair_series(alpha, beta, gamma, delta, start, stop):
    import numpy as np

    f = lambda v: np.ascontiguousarray(v, dtype=np.float64)
    i = lambda v: np.ascontiguousarray(v, dtype=np.int64)
    return _active.pair_series(f(alpha), f(beta), f(gamma), f(delta), i(start), i(stop))


def operator_matrix(s, M, x, w):
    import numpy as np

    return _active.operator_matrix(
        float(s), int(M), np.ascontiguousarray(x, dtype=np.float64), np.ascontiguousarray(w, dtype=np.float64)
    )
