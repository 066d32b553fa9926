"""Free heat evolution of slowly decaying radial data in R^6.

The data are |x|^-gamma (log|x|)^-beta beyond |x| = e with a constant core,
either of one sign or alternating across a radius schedule R_1 < R_2 < ...
Values are computed by exact quadrature of the heat kernel in z = r/sqrt(t).
The angular part of the 6D kernel is integrated in closed form:

    int_0^pi exp(a cos phi) sin^4 phi dphi = 3 pi I_2(a) / a^2,

with |S^4| = 8 pi^2 / 3 and |S^5| = pi^3.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import ive

from .errors import ConfigurationError, DomainError, NumericError, RangeError
from .profiles import eval_cutoff
from .quadrature import geometric_breaks, integrate
from .schedule import make_schedule, validate_radii  # noqa: F401  (re-export)

E = np.e
Z_MAX = 60.0  # exp(-Z_MAX^2/4) ~ 1e-391, below the double range
S4 = 8.0 * np.pi**2 / 3.0
S5 = np.pi**3
NORM = (4.0 * np.pi) ** -3
A1 = 0.125
VALUE_FLOOR = 1e-300

_GAUSS64 = np.polynomial.legendre.leggauss(64)


def q1_of(beta, a1=A1):
    return 5.0 * a1 / (4.0 * (1.0 - beta))


@dataclass
class PiecewiseRadialDatum:
    """Radial datum with a flat core, a power-log tail and optional sign flips.

    ``schedule`` lists R_1 < R_2 < ...; the sign is + on (e, R_1), switches
    through the blend chi(|x|/R_j) on (R_j, 2R_j), and so on.  ``core=False``
    drops the core and the log factor entirely (pure power test datum).
    """
    beta: float
    gamma: float = 2.0
    schedule: tuple = ()
    amplitude: float = 1.0
    core: bool = True
    name: str = "datum"

    def __post_init__(self):
        if not 0 < self.gamma < 6:
            raise ConfigurationError("gamma must lie in (0, 6)", gamma=self.gamma)
        self.schedule = tuple(float(R) for R in self.schedule)
        if self.schedule:
            validate_radii([np.log(R) for R in self.schedule])

    @property
    def plateau(self):
        return self.amplitude * E ** -self.gamma

    def envelope(self, r):
        """f0 = r^-gamma (log r)^-beta beyond e (the core value inside)."""
        r = np.asarray(r, dtype=float)
        if not self.core:
            with np.errstate(divide="ignore"):
                return self.amplitude * r ** -self.gamma
        rr = np.maximum(r, E)
        return np.where(r < E, self.plateau, self.amplitude * rr ** -self.gamma * np.log(rr) ** -self.beta)

    def sign(self, r):
        """Sign factor in [-1, 1]: +1 inside R_1, blended across each (R_j, 2R_j)."""
        r = np.asarray(r, dtype=float)
        s = np.ones_like(r)
        for j, R in enumerate(self.schedule):
            before = (-1.0) ** j
            s = np.where(r > R, before * (2.0 * eval_cutoff(r / R) - 1.0), s)
        return s

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise DomainError("datum evaluated at negative radius")
        return self.envelope(r) * self.sign(r)

    def breakpoints(self):
        pts = [E] if self.core else []
        for R in self.schedule:
            pts += [R, 2 * R]
        return pts


@dataclass
class TabulatedDatum:
    """Datum given by a RadialProfile (for example a computed theta(., t0))."""
    profile: object
    name: str = "tabulated"

    def __call__(self, r):
        return self.profile(r)

    def breakpoints(self):
        return []

    @property
    def support(self):
        return float(self.profile.grid[-1])


def build_theta0(beta, gamma=2.0):
    if not 0.5 < beta < 1:
        raise ConfigurationError("beta must lie in (1/2, 1)", beta=beta)
    return PiecewiseRadialDatum(beta, gamma, name="theta0")


def build_Theta0(beta, schedule, gamma=2.0):
    if not 0.5 < beta < 1:
        raise ConfigurationError("beta must lie in (1/2, 1)", beta=beta)
    if len(schedule) == 0:
        raise ConfigurationError("alternating datum needs at least one radius")
    return PiecewiseRadialDatum(beta, gamma, tuple(schedule), name="Theta0")


def power_datum(gamma=2.0):
    """|x|^-gamma with no core: exactly self-similar under the heat flow."""
    return PiecewiseRadialDatum(0.0, gamma, core=False, name="power")


def modest_schedule(R1=1e4, ratio=1e4, count=4):
    """Geometric radii R_1 ratio^k, valid for heat quadrature in double range."""
    radii = tuple(R1 * ratio**k for k in range(count))
    validate_radii([np.log(R) for R in radii])
    return radii


@dataclass
class HeatSample:
    t: float
    x: float
    value: float
    quad_error: float
    panels: int = 0


def _breaks(datum, sqrt_t, lo, hi):
    pts = [lo, hi]
    for b in datum.breakpoints():
        z = b / sqrt_t
        if lo < z < hi:
            pts.append(z)
    if isinstance(datum, TabulatedDatum):
        z = datum.support / sqrt_t
        if z < hi:
            raise RangeError("tabulated datum does not cover the Gaussian window",
                             support=datum.support, needed=hi * sqrt_t)
    # graded panels toward small z, where the datum varies on the scale e/sqrt(t)
    small = max(lo, min(E / sqrt_t, 1e-3))
    if lo == 0 and small < 1:
        pts += list(geometric_breaks(small, 1.0, 4.0))
    pts += list(np.arange(np.ceil(lo), hi, 4.0))
    return sorted(set(p for p in pts if lo <= p <= hi))


def _ive(nu, a):
    """Exponentially scaled I_nu; Hankel series for large a, where scipy's ive
    returns nan (observed above a ~ 1e9)."""
    a = np.asarray(a, dtype=float)
    big = a > 1e6
    out = ive(nu, np.where(big, 1.0, a))
    if np.any(big):
        ab = np.where(big, a, 1.0)
        mu = 4.0 * nu * nu
        term = np.ones_like(ab)
        acc = np.ones_like(ab)
        for k in range(1, 5):
            term = -term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * ab)
            acc = acc + term
        out = np.where(big, acc / np.sqrt(2 * np.pi * ab), out)
    return out


def _angular_closed(a):
    """e^-a G(a) and e^-a G'(a) for G(a) = int_0^pi exp(a cos phi) sin^4 phi dphi.

    G = 3 pi I_2(a)/a^2 and G' = 3 pi I_3(a)/a^2; small a uses the series.
    """
    a = np.asarray(a, dtype=float)
    small = a < 1e-6
    safe = np.where(small, 1.0, a)
    g = np.where(small, 3 * np.pi / 8 * np.exp(-a), 3 * np.pi * _ive(2, safe) / safe**2)
    dg = np.where(small, 3 * np.pi / 48 * a * np.exp(-a), 3 * np.pi * _ive(3, safe) / safe**2)
    return g, dg


def _angular_gauss(a):
    """Same pair by 64-point Gauss-Legendre in phi (reference path)."""
    x, w = _GAUSS64
    phi = 0.5 * np.pi * (x + 1.0)
    c = np.cos(phi)
    a = np.asarray(a, dtype=float)[..., None]
    kern = np.exp(a * (c - 1.0)) * np.sin(phi) ** 4
    return 0.5 * np.pi * np.sum(kern * w, axis=-1), 0.5 * np.pi * np.sum(kern * c * w, axis=-1)


def _sample(datum, x, t, rtol, derivative=False, angular="bessel", atol=0.0, z_max=Z_MAX):
    if t <= 0:
        raise DomainError("time must be positive", t=t)
    if x < 0:
        raise DomainError("radius must be nonnegative", x=x)
    st = np.sqrt(t)
    xi = x / st
    lo, hi = max(0.0, xi - z_max), xi + z_max

    if xi == 0.0:
        if derivative:
            return HeatSample(t, x, 0.0, 0.0, 0)

        def f(z):
            return np.exp(-z * z / 4.0) * datum(z * st) * z**5

        pref = NORM * S5
    else:
        angle = _angular_closed if angular == "bessel" else _angular_gauss

        def f(z):
            g, dg = angle(0.5 * xi * z)
            # exp(-(xi - z)^2/4) = exp(-(xi^2 + z^2)/4) e^a absorbs the e^-a scaling
            base = z**5 * datum(z * st) * np.exp(-((xi - z) ** 2) / 4.0)
            if not derivative:
                return base * g
            return base * (-0.5 * xi * g + 0.5 * z * dg)

        pref = NORM * S4

    try:
        res = integrate(f, _breaks(datum, st, lo, hi), rtol=rtol, atol=atol / pref)
    except NumericError as exc:
        raise NumericError("heat quadrature did not converge", at_t=t, at_x=x, **exc.details) from exc
    value = pref * res.value
    err = pref * res.error
    if derivative:
        value, err = value / st, err / st
    if not (abs(err) <= 1e-3 * abs(value) or abs(value) < VALUE_FLOOR or abs(err) <= atol):
        raise NumericError("quadrature error above 1e-3 relative", t=t, x=x, value=value, error=err)
    return HeatSample(float(t), float(x), float(value), float(err), len(res.panels))


def theta_origin(datum, t, rtol=1e-10):
    """theta(0, t) for the free heat flow started from ``datum``."""
    return _sample(datum, 0.0, t, rtol)


def theta_at(datum, x, t, rtol=1e-10, angular="bessel"):
    if angular not in ("bessel", "gauss"):
        raise ConfigurationError("angular must be 'bessel' or 'gauss'", angular=angular)
    return _sample(datum, x, t, rtol, angular=angular)


def grad_theta(datum, x, t, rtol=1e-10, angular="bessel"):
    """Radial derivative d theta / d|x|."""
    if angular not in ("bessel", "gauss"):
        raise ConfigurationError("angular must be 'bessel' or 'gauss'", angular=angular)
    return _sample(datum, x, t, rtol, derivative=True, angular=angular)


def dtheta_dt_origin(datum, t, dlog=1e-3, rtol=1e-12):
    """Centered difference of theta(0, .) in log t."""
    hi = theta_origin(datum, t * np.exp(dlog), rtol).value
    lo = theta_origin(datum, t * np.exp(-dlog), rtol).value
    return (hi - lo) / (2.0 * dlog * t)


def A1_constant(rtol=1e-13):
    """(4 pi)^-3 int_{R^6} exp(-|z|^2/4) |z|^-2 dz by radial quadrature."""
    res = integrate(lambda r: np.exp(-r * r / 4.0) * r**3, [0.0, 2.0, 5.0, 10.0, 20.0, Z_MAX],
                    rtol=rtol)
    return NORM * S5 * res.value


def A1_monte_carlo(n=10_000_000, seed=0, chunk=1_000_000):
    """Monte-Carlo estimate of E|z|^-2 with z ~ N(0, 2 I_6); returns (mean, stderr)."""
    rng = np.random.default_rng(seed)
    s = s2 = 0.0
    done = 0
    while done < n:
        m = min(chunk, n - done)
        z = rng.normal(scale=np.sqrt(2.0), size=(m, 6))
        v = 1.0 / np.einsum("ij,ij->i", z, z)
        s += v.sum()
        s2 += (v * v).sum()
        done += m
    mean = s / n
    var = s2 / n - mean**2
    return mean, np.sqrt(var / n)


def main_term(t, beta, a1=A1, log_base="t"):
    """A_1 / (t (log t)^beta), or with log sqrt(t) when log_base == 'sqrt'."""
    L = np.log(t) if log_base == "t" else 0.5 * np.log(t)
    return a1 / (t * L**beta)


@dataclass
class WindowRow:
    j: int
    logsqrt_t: float
    sign: int
    ratio_to_A1: float
    deviation_times_logt: float
    theta: float = field(repr=False, default=0.0)


@dataclass
class WindowReport:
    j: int
    rows: list
    expected_sign: int

    @property
    def sign_ok(self):
        return all(r.sign == self.expected_sign for r in self.rows)

    @property
    def deviation_spread(self):
        d = [abs(r.deviation_times_logt) for r in self.rows]
        return max(d) / min(d) if min(d) > 0 else float("inf")


def window_bounds(schedule, j):
    """(log sqrt t) range of window j: (2R_j log 2R_j, R_{j+1} / log R_{j+1})."""
    if not 1 <= j < len(schedule):
        raise ConfigurationError("window index needs R_j and R_{j+1}", j=j, n_radii=len(schedule))
    Rj, Rn = schedule[j - 1], schedule[j]
    lo = np.log(2 * Rj) + np.log(np.log(2 * Rj))
    hi = np.log(Rn) - np.log(np.log(Rn))
    if hi <= lo:
        raise ConfigurationError("window is empty", j=j)
    return lo, hi


def window_check(datum, j, samples=8, rtol=1e-10, log_base="t"):
    """Sample theta(0, t) across window j; the sign should be (-1)^j there."""
    lo, hi = window_bounds(datum.schedule, j)
    expected = -1 if j % 2 else 1
    rows = []
    for ls in np.linspace(lo, hi, samples):
        t = np.exp(2.0 * ls)
        v = theta_origin(datum, t, rtol).value
        ref = main_term(t, datum.beta, log_base=log_base)
        ratio = expected * v / ref
        dev = (v - expected * ref) / ref * np.log(t)
        rows.append(WindowRow(j, float(ls), int(np.sign(v)), float(ratio), float(dev), float(v)))
    return WindowReport(j, rows, expected)


def monotone_check(datum, ts, rtol=1e-10, log_base="t"):
    """Ratio to the main term and (relative deviation) * log t at the given times."""
    rows = []
    for t in ts:
        v = theta_origin(datum, t, rtol).value
        ref = main_term(t, datum.beta, log_base=log_base)
        rows.append(WindowRow(0, float(0.5 * np.log(t)), int(np.sign(v)), float(v / ref),
                              float((v - ref) / ref * np.log(t)), float(v)))
    return WindowReport(0, rows, 1)


def write_samples_csv(path, samples):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["logt", "x", "theta", "quad_err"])
        for s in samples:
            w.writerow([f"{np.log(s.t):.17g}", f"{s.x:.17g}", f"{s.value:.17g}", f"{s.quad_error:.17g}"])


def write_window_csv(path, reports):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "logsqrt_t", "sign", "ratio_to_A1", "deviation_times_logt"])
        for rep in reports:
            for r in rep.rows:
                w.writerow([r.j, f"{r.logsqrt_t:.17g}", r.sign, f"{r.ratio_to_A1:.17g}",
                            f"{r.deviation_times_logt:.17g}"])
