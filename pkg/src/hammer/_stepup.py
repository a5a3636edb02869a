"""Fixpoint scan behind the step-up procedure, with a compiled fast path.

The compiled extension and the numpy fallback evaluate identical float
expressions, so which backend is active never changes a rejection set.  Set
``HAMMER_PURE_PYTHON=1`` to force the fallback; ``BACKEND`` records the
choice made at import.
"""

from __future__ import annotations

import os

import numpy as np

_compiled = None
if not os.environ.get("HAMMER_PURE_PYTHON"):
    try:
        from . import _stepup_core as _compiled
    except ImportError:
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "pure"


def kstar_pure(p: np.ndarray, base: np.ndarray, beta: np.ndarray) -> int:
    """Largest k with #{h: base[h]*beta[k-1] > 0 and p[h] <= it} >= k.

    Uniform per-hypothesis levels admit a path over sorted p-values; the
    general case binary-searches each hypothesis's first passing k, which
    is well defined because thresholds are nondecreasing in k.
    """
    m = p.size
    if m == 0:
        return 0
    if np.all(base == base[0]):
        t = base[0] * beta
        f = np.searchsorted(np.sort(p), t, side="right")
        f = np.where(t > 0.0, f, 0)
    else:
        t = base * beta[m - 1]
        active = np.nonzero((t > 0.0) & (p <= t))[0]
        pa, ba = p[active], base[active]
        lo = np.ones(active.size, dtype=np.intp)
        hi = np.full(active.size, m, dtype=np.intp)
        while np.any(lo < hi):
            mid = (lo + hi) >> 1
            t = ba * beta[mid - 1]
            passes = (t > 0.0) & (pa <= t)
            hi = np.where(passes, mid, hi)
            lo = np.where(passes, lo, mid + 1)
        f = np.cumsum(np.bincount(lo, minlength=m + 1)[1:])
    valid = np.nonzero(f >= np.arange(1, m + 1))[0]
    return int(valid[-1]) + 1 if valid.size else 0


def kstar(p: np.ndarray, base: np.ndarray, beta: np.ndarray) -> int:
    p = np.ascontiguousarray(p, dtype=np.float64)
    base = np.ascontiguousarray(base, dtype=np.float64)
    beta = np.ascontiguousarray(beta, dtype=np.float64)
    if _compiled is not None and p.size:
        return _compiled.kstar_scan(p, base, beta)
    return kstar_pure(p, base, beta)
