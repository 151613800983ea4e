"""Adaptive Simpson quadrature for vectorized integrands."""

from __future__ import annotations

from typing import Callable

import numpy as np

__all__ = ["adaptive_simpson"]


def adaptive_simpson(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float = 1e-8,
    max_depth: int = 50,
    max_intervals: int = 1_000_000,
) -> float:
    """Integrate ``f`` over [a, b] to absolute tolerance ``tol``.

    ``f`` takes a 1-d array of abscissae and returns values of the same shape.
    Intervals are bisected until the Richardson error estimate ``|S2 - S1| / 15``
    falls below their share of the tolerance. Summation order is fixed, so the
    result is deterministic.
    """
    if a == b:
        return 0.0
    if b < a:
        return -adaptive_simpson(f, b, a, tol, max_depth)
    fa, fm, fb = f(np.array([a, 0.5 * (a + b), b], dtype=float))
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    total = 0.0
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    visited = 0
    while stack:
        visited += 1
        if visited > max_intervals:
            raise RuntimeError(f"adaptive Simpson did not converge within {max_intervals} intervals")
        lo, hi, flo, fmid, fhi, est, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        flm, frm = f(np.array([0.5 * (lo + mid), 0.5 * (mid + hi)], dtype=float))
        left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        delta = left + right - est
        if not np.isfinite(delta):
            raise FloatingPointError(f"non-finite integrand on [{lo}, {hi}]")
        if depth >= max_depth or abs(delta) <= 15.0 * eps:
            total += left + right + delta / 15.0
        else:
            stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth + 1))
            stack.append((lo, mid, flo, flm, fmid, left, 0.5 * eps, depth + 1))
    return float(total)
