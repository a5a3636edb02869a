# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled scan for the step-up fixpoint size.

Evaluates exactly the same float expression as the numpy fallback
(``base[h] * beta[k-1]`` in one multiply), so the two backends agree
bit-for-bit on every rejection set.

Thresholds are nondecreasing in k, so each hypothesis has a first k where
it passes and keeps passing; binary-searching that k per hypothesis and
counting gives the fixpoint in O(m log m).
"""

import numpy as np


def kstar_scan(const double[::1] p, const double[::1] base, const double[::1] beta):
    """Largest k in 1..m with #{h: base[h]*beta[k-1] > 0 and p[h] <= it} >= k."""
    cdef Py_ssize_t m = p.shape[0]
    if m == 0:
        return 0
    cdef Py_ssize_t[::1] counts = np.zeros(m + 1, dtype=np.intp)
    cdef Py_ssize_t h, lo, hi, mid
    cdef double t
    for h in range(m):
        t = base[h] * beta[m - 1]
        if not (t > 0.0 and p[h] <= t):
            continue  # never passes, at any k
        lo = 1
        hi = m
        while lo < hi:
            mid = (lo + hi) // 2
            t = base[h] * beta[mid - 1]
            if t > 0.0 and p[h] <= t:
                hi = mid
            else:
                lo = mid + 1
        counts[lo] += 1
    cdef Py_ssize_t k, best = 0
    cdef Py_ssize_t f = 0
    for k in range(1, m + 1):
        f += counts[k]  # f is now #{h: first passing k' <= k}
        if f >= k:
            best = k
    return best
