"""Adaptive composite Gauss-Legendre quadrature on fixed panel maps.

The error of a panel is |G16(panel) - G16(left) - G16(right)|; the panel with
the largest error is bisected until the summed error meets the tolerance.
Ties are broken by creation order so results are bitwise reproducible.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError

_ORDER = 16
_MIN_WIDTH = 1e-13
# below this, doubles are subnormal-adjacent and relative accuracy is lost
_TINY = np.finfo(float).tiny / np.finfo(float).eps
_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(_ORDER)


@dataclass
class QuadResult:
    value: np.ndarray | float
    error: np.ndarray | float
    panels: list[tuple[float, float]] = field(default_factory=list)


def _rule(f, a, b):
    half = 0.5 * (b - a)
    x = 0.5 * (a + b) + half * _NODES
    fx = np.asarray(f(x), dtype=float)
    if not np.all(np.isfinite(fx)):
        raise NumericError("integrand is not finite", panel=(float(a), float(b)))
    return half * np.tensordot(fx, _WEIGHTS, axes=([-1], [0]))


def _split(f, a, b):
    m = 0.5 * (a + b)
    left, right = _rule(f, a, m), _rule(f, m, b)
    return left, right, left + right, np.abs(left + right - _rule(f, a, b))


def integrate(f, breakpoints, rtol=1e-10, atol=0.0, max_panels=4000):
    """Integrate ``f`` over ``[breakpoints[0], breakpoints[-1]]``.

    ``f`` maps a 1-D array of abscissae to an array whose last axis runs
    over the abscissae (scalar or vector-valued integrands).  Breakpoints
    mark places where the integrand is not smooth.  Returns a QuadResult
    whose ``error`` is the summed bisection estimate.
    """
    pts = np.unique(np.asarray(breakpoints, dtype=float))
    if pts.size < 2:
        return QuadResult(0.0, 0.0, [])

    heap = []
    counter = 0
    for a, b in zip(pts[:-1], pts[1:]):
        left, right, val, err = _split(f, a, b)
        heap.append((-float(np.max(err)), counter, a, b, val, err))
        counter += 1
    heapq.heapify(heap)
    err = np.sum([h[5] for h in heap], axis=0)
    mag = np.sum([np.abs(h[4]) for h in heap], axis=0)

    while True:
        tol = np.maximum(np.maximum(rtol * mag, atol), _TINY)
        if np.all(err <= tol):
            break
        if len(heap) >= max_panels:
            worst = heap[0]
            raise NumericError(
                "quadrature did not converge",
                error=float(np.max(err)), tol=float(np.max(tol)),
                worst_panel=(worst[2], worst[3]), n_panels=len(heap),
            )
        _, _, a, b, val, e = heapq.heappop(heap)
        err = err - e
        mag = mag - np.abs(val)
        m = 0.5 * (a + b)
        if b - a <= _MIN_WIDTH * max(abs(a), abs(b)):
            # cannot be resolved further in double precision (a jump sits
            # inside); keep it with a rounding-level error and move on
            e = np.abs(val) * _MIN_WIDTH
            heapq.heappush(heap, (-float(np.max(e)), counter, a, b, val, e))
            counter += 1
            err = err + e
            mag = mag + np.abs(val)
            continue
        for lo, hi in ((a, m), (m, b)):
            _, _, val, e = _split(f, lo, hi)
            heapq.heappush(heap, (-float(np.max(e)), counter, lo, hi, val, e))
            counter += 1
            err = err + e
            mag = mag + np.abs(val)

    # sum in panel order, not heap order, for reproducibility
    ordered = sorted(heap, key=lambda h: h[2])
    value = np.sum([h[4] for h in ordered], axis=0)
    error = np.sum([h[5] for h in ordered], axis=0)
    if np.ndim(value) == 0:
        value, error = float(value), float(error)
    return QuadResult(value, error, [(h[2], h[3]) for h in ordered])


def geometric_breaks(lo, hi, ratio=2.0):
    """Points lo, lo*ratio, ... ending exactly at hi; requires 0 < lo < hi."""
    n = max(int(np.ceil(np.log(hi / lo) / np.log(ratio))), 1)
    return np.geomspace(lo, hi, n + 1)
