"""Duhamel integrals for forcing at the inner/outer envelope shapes.

u(x, t) = int_{t0}^t ds  [e^{(t-s) Delta} f(., s)](x),  zero data at t0.

Inner forcing:  f = s^-gamma (log s)^q  on |y| < K1 sqrt(s), 0 outside.
Outer forcing:  f = |y|^-2gamma (log |y|^2)^q  on |y| > K1 sqrt(s), 0 inside.

The spatial part reuses the radial heat-kernel quadrature of heat_tail; the
time integral is split at s = t/2 with panels refined geometrically toward
s = t, where the kernel narrows.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, NumericError
from .heat_tail import _sample
from .quadrature import integrate

E = np.e
Z_WINDOW = 14.0  # exp(-14^2/4) ~ 5e-22, far below the nested tolerances


@dataclass(frozen=True)
class ForcingSpec:
    gamma: float
    q: float
    K1: float = 1.0
    region: str = "inner"
    t0: float = 10.0
    amplitude: float = 1.0

    def __post_init__(self):
        if not 0 < self.gamma < 3:
            raise ConfigurationError("gamma must lie in (0, 3)", gamma=self.gamma)
        if self.K1 <= 0:
            raise ConfigurationError("K1 must be positive", K1=self.K1)
        if self.region not in ("inner", "outer"):
            raise ConfigurationError("region must be 'inner' or 'outer'", region=self.region)
        if self.t0 <= E:
            raise ConfigurationError("t0 must exceed e", t0=self.t0)

    def at(self, s):
        """The radial forcing profile y -> f(y, s) as a heat_tail datum."""
        return _ForcingSlice(self, float(s))

    def sup(self, s):
        if self.region == "inner":
            return abs(self.amplitude) * s ** -self.gamma * np.log(s) ** self.q
        r = self.K1 * np.sqrt(s)
        return abs(self.amplitude) * r ** (-2 * self.gamma) * np.log(r * r) ** self.q


@dataclass(frozen=True)
class _ForcingSlice:
    forcing: ForcingSpec
    s: float

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        f = self.forcing
        edge = f.K1 * np.sqrt(self.s)
        if f.region == "inner":
            val = f.amplitude * self.s ** -f.gamma * np.log(self.s) ** f.q
            return np.where(r < edge, val, 0.0)
        rr = np.maximum(r, edge)
        return np.where(r > edge, f.amplitude * rr ** (-2 * f.gamma) * np.log(rr * rr) ** f.q, 0.0)

    def breakpoints(self):
        return [self.forcing.K1 * np.sqrt(self.s)]


def _time_breaks(t0, t, levels=6):
    pts = [t0, t]
    if t / 2 > t0:
        pts.append(t / 2)
    tau = 0.5 * t
    for _ in range(levels):
        tau *= 0.25
        if t - tau > max(t0, t / 2):
            pts.append(t - tau)
    return sorted(pts)


@dataclass
class DuhamelValue:
    x: float
    t: float
    u: float
    error: float


def duhamel_eval(f, x, t, rtol=1e-6, space_rtol=1e-9):
    """u(x, t) for forcing ``f`` taken at its envelope."""
    if t <= f.t0:
        raise ConfigurationError("t must exceed t0", t=t, t0=f.t0)
    if f.amplitude == 0:
        return DuhamelValue(float(x), float(t), 0.0, 0.0)
    floor = 1e-14 * f.sup(t)

    def g(s_arr):
        out = np.empty_like(s_arr)
        for i, s in enumerate(s_arr):
            out[i] = _sample(f.at(s), x, t - s, space_rtol, atol=floor, z_max=Z_WINDOW).value
        return out

    try:
        res = integrate(g, _time_breaks(f.t0, t), rtol=rtol, atol=floor * t * 1e-3, max_panels=2000)
    except NumericError as exc:
        raise NumericError("Duhamel time integral did not converge", at_x=x, at_t=t,
                           cause=str(exc)) from exc
    return DuhamelValue(float(x), float(t), float(res.value), float(res.error))


def bound_shape(f, x, t, K2=1.0):
    """The two-branch envelope t^{1-gamma}(log t)^q  /  |x|^{2-2gamma}(log|x|^2)^q."""
    if x < K2 * np.sqrt(t):
        return t ** (1 - f.gamma) * np.log(t) ** f.q
    return x ** (2 - 2 * f.gamma) * np.log(x * x) ** f.q


@dataclass
class BoundRow:
    gamma: float
    q: float
    K1: float
    t0: float
    logt: float
    x: float
    u: float
    bound: float
    Cemp: float


def bound_report(f, t_grid, xi_grid, K2=1.0, rtol=1e-6):
    """Empirical constants C_emp = u / shape on the (t, x = xi sqrt t) grid."""
    rows = []
    for t in t_grid:
        for xi in xi_grid:
            x = xi * np.sqrt(t)
            u = duhamel_eval(f, x, t, rtol).u
            b = bound_shape(f, x, t, K2)
            rows.append(BoundRow(f.gamma, f.q, f.K1, f.t0, float(np.log(t)), float(x), u, b, u / b))
    return rows


def spread(values):
    v = np.abs(np.asarray(values, dtype=float))
    if np.any(v == 0) or not np.all(np.isfinite(v)):
        return float("inf")
    return float(v.max() / v.min())


def write_rows_csv(path, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["gamma", "q", "K1", "logt", "x", "u", "bound", "Cemp"])
        for r in rows:
            w.writerow([f"{r.gamma:.17g}", f"{r.q:.17g}", f"{r.K1:.17g}", f"{r.logt:.17g}",
                        f"{r.x:.17g}", f"{r.u:.17g}", f"{r.bound:.17g}", f"{r.Cemp:.17g}"])
