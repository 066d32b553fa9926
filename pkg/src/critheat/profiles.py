"""Special radial functions of the 6D construction.

Ground state Q(r) = (1 + r^2/24)^-2 solves -Delta Q = Q^2 in R^6.  The
linearised operator is H = Delta + 2Q, whose radial kernel is spanned by the
scaling generator LambdaQ.  Gamma is the second (singular at 0) kernel
element and T1 the bounded solution of H T1 = -LambdaQ, built from the pair
(LambdaQ, Gamma) by variation of parameters.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from .errors import ConfigurationError, DomainError, NumericError

DIM = 6
EXPONENT = 2  # (n + 2) / (n - 2) at n = 6
GAMMA_INF = -1.0 / 4608.0  # -(2n/(n-2)) (n(n-2))^(-n/2) at n = 6
T1_INF = 0.8


@dataclass(frozen=True)
class GroundStateKit:
    dimension: int = DIM
    exponent: int = EXPONENT

    def __post_init__(self):
        if self.dimension != DIM or self.exponent != EXPONENT:
            raise ConfigurationError("only n = 6, p = 2 is supported",
                                     dimension=self.dimension, exponent=self.exponent)

    def potential(self, r):
        """V = p Q^(p-1), which is 2Q here."""
        return self.exponent * eval_Q(r) ** (self.exponent - 1)


@dataclass
class RadialProfile:
    """Samples of a radial function on an ascending grid.

    Evaluation between nodes is cubic: Hermite when derivative samples are
    known, otherwise a not-a-knot spline.
    """
    grid: np.ndarray
    values: np.ndarray
    derivative: np.ndarray | None = None
    name: str = "profile"

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.ndim != 1 or self.grid.shape != self.values.shape:
            raise ConfigurationError("grid and values must be 1-D and equal length")
        if np.any(np.diff(self.grid) <= 0) or self.grid[0] < 0:
            raise ConfigurationError("grid must be strictly increasing and nonnegative")
        if self.derivative is not None:
            self.derivative = np.asarray(self.derivative, dtype=float)
            self._interp = CubicHermiteSpline(self.grid, self.values, self.derivative)
        else:
            self._interp = CubicSpline(self.grid, self.values)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < self.grid[0]) or np.any(r > self.grid[-1]):
            raise DomainError(f"{self.name}: evaluation outside [{self.grid[0]}, {self.grid[-1]}]")
        return self._interp(r)

    def deriv(self, r):
        return self._interp(np.asarray(r, dtype=float), 1)

    def to_csv(self, path):
        write_profile_csv(path, self.grid, self.values)


def write_profile_csv(path, r, values, header=("r", "value")):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for a, b in zip(r, values):
            w.writerow([f"{a:.17g}", f"{b:.17g}"])


def _check_radius(r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(np.isnan(r)):
        raise DomainError("radius must be nonnegative")
    return r


def eval_Q(r):
    r = _check_radius(r)
    return (1.0 + r * r / 24.0) ** -2


def eval_LambdaQ(r):
    r = _check_radius(r)
    s = r * r / 24.0
    return 2.0 * (1.0 - s) * (1.0 + s) ** -3


def dLambdaQ(r):
    """Radial derivative of LambdaQ."""
    r = _check_radius(r)
    s = r * r / 24.0
    # d/ds [2(1-s)(1+s)^-3] = 4(s-2)(1+s)^-4, ds/dr = r/12
    return 4.0 * (s - 2.0) * (1.0 + s) ** -4 * (r / 12.0)


def eval_cutoff(s):
    """Smooth partition: 1 on [0, 1], 0 on [2, inf), exp(-1/t) blend between."""
    s = np.asarray(s, dtype=float)
    a = _phi(2.0 - s)
    b = _phi(s - 1.0)
    out = a / (a + b)
    return out if out.ndim else float(out)


def _phi(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def cutoff_derivatives(s):
    """First and second derivatives of the cutoff (closed form)."""
    s = np.asarray(s, dtype=float)
    a, b = _phi(2.0 - s), _phi(s - 1.0)
    u, v = 2.0 - s, s - 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        da = np.where(u > 0, -a / u**2, 0.0)
        db = np.where(v > 0, b / v**2, 0.0)
        dda = np.where(u > 0, a * (1.0 / u**4 - 2.0 / u**3), 0.0)
        ddb = np.where(v > 0, b * (1.0 / v**4 - 2.0 / v**3), 0.0)
    den = a + b
    d1 = (da * b - a * db) / den**2
    num = da * b - a * db
    dnum = dda * b - a * ddb
    d2 = dnum / den**2 - 2.0 * num * (da + db) / den**3
    return d1, d2


def graded_grid(r_max, n_nodes=2000, r_min=1e-3):
    """Geometric grid r_min * rho^i reaching r_max."""
    if r_max <= r_min:
        raise ConfigurationError("r_max must exceed r_min", r_max=r_max)
    return np.geomspace(r_min, r_max, n_nodes)


def _gamma_system(s, z):
    # s = log r;  G'' + (5/r) G' + 2Q G = 0  becomes  G_ss + 4 G_s + 2 r^2 Q G = 0
    g, gs = z
    r = np.exp(s)
    return [gs, -4.0 * gs - 2.0 * r * r * eval_Q(r) * g]


_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def _cumulative_panels(f, grid):
    """int_{grid[0]}^{grid[i]} f, one 16-point Gauss panel per grid interval.

    Also returns the largest per-panel discrepancy against the 8-point rule,
    used as the error estimate.
    """
    a, b = grid[:-1], grid[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * _GL_X[None, :]
    fx = f(x.ravel()).reshape(x.shape)
    panel = half * (fx @ _GL_W)
    x8, w8 = np.polynomial.legendre.leggauss(8)
    y = mid[:, None] + half[:, None] * x8[None, :]
    panel8 = half * (f(y.ravel()).reshape(y.shape) @ w8)
    err = np.abs(panel - panel8)
    return np.concatenate([[0.0], np.cumsum(panel)]), err


@dataclass
class KernelPair:
    """Gamma with its derivative and the two running integrals of T1."""
    grid: np.ndarray
    gamma: np.ndarray
    dgamma: np.ndarray
    int_lq2: np.ndarray   # int_0^r LambdaQ^2 s^5 ds
    int_glq: np.ndarray   # int_0^r Gamma LambdaQ s^5 ds
    scale: float
    quad_error: float

    def wronskian(self, r=None):
        """r^5 (LambdaQ Gamma' - Gamma LambdaQ') at grid nodes nearest ``r``."""
        idx = slice(None) if r is None else np.searchsorted(self.grid, r)
        g, dg, rr = self.gamma[idx], self.dgamma[idx], self.grid[idx]
        return rr**5 * (eval_LambdaQ(rr) * dg - g * dLambdaQ(rr))


@lru_cache(maxsize=8)
def _kernel_pair(r_max, tol, n_nodes, r_min):
    if r_max < 100:
        raise ConfigurationError("r_max must be at least 100", r_max=r_max)
    grid = graded_grid(r_max, n_nodes, r_min)
    # Gamma = Gamma_inf (1 + 288 r^-2) + O(r^-4) at large r.
    g0 = GAMMA_INF * (1.0 + 288.0 / r_max**2)
    gs0 = -576.0 * GAMMA_INF / r_max**2  # r * dGamma/dr
    s_grid = np.log(grid)
    sol = solve_ivp(_gamma_system, (s_grid[-1], s_grid[0]), [g0, gs0],
                    method="DOP853", dense_output=True, rtol=min(1e-3 * tol, 1e-12), atol=1e-300,
                    first_step=1e-3)
    if not sol.success:
        raise NumericError("Gamma integration failed", message=sol.message, nfev=sol.nfev)
    g, gs = sol.sol(s_grid)
    dg = gs / grid

    # Rescale so r^5 (LambdaQ Gamma' - Gamma LambdaQ') = +1 (Abel: constant).
    w = grid**5 * (eval_LambdaQ(grid) * dg - g * dLambdaQ(grid))
    mid = (grid > 0.1) & (grid < r_max / 2)
    w0 = np.median(w[mid])
    if not np.isfinite(w0) or w0 == 0:
        raise NumericError("degenerate Wronskian", wronskian=w0)
    scale = 1.0 / w0
    g, dg = g * scale, dg * scale

    def gamma_at(r):
        return scale * sol.sol(np.log(r))[0]

    int_lq2, e1 = _cumulative_panels(lambda r: eval_LambdaQ(r) ** 2 * r**5, grid)
    int_glq, e2 = _cumulative_panels(lambda r: gamma_at(r) * eval_LambdaQ(r) * r**5, grid)
    # below r_min: LambdaQ^2 r^5 ~ 4 r^5, Gamma LambdaQ r^5 ~ 2 c r with c = Gamma(r_min) r_min^4
    int_lq2 += 4.0 * r_min**6 / 6.0
    int_glq += g[0] * r_min**6
    err = float(max(e1.max(), e2.max()))
    return KernelPair(grid, g, dg, int_lq2, int_glq, scale, err)


def build_Gamma(r_max=2.0e4, tol=1e-6, n_nodes=2000, r_min=1e-3):
    """Second radial kernel element of H, normalised to unit Wronskian with LambdaQ."""
    kp = _kernel_pair(float(r_max), float(tol), int(n_nodes), float(r_min))
    return RadialProfile(kp.grid, kp.gamma, kp.dgamma, name="Gamma")


def kernel_pair(r_max=2.0e4, tol=1e-6, n_nodes=2000, r_min=1e-3):
    return _kernel_pair(float(r_max), float(tol), int(n_nodes), float(r_min))


def build_T1(r_max=2.0e4, tol=1e-6, n_nodes=2000, r_min=1e-3):
    """Bounded solution of H T1 + LambdaQ = 0 with T1 -> 4/5."""
    kp = _kernel_pair(float(r_max), float(tol), int(n_nodes), float(r_min))
    r = kp.grid
    lq = eval_LambdaQ(r)
    t1 = -kp.gamma * kp.int_lq2 + lq * kp.int_glq
    # the terms from differentiating the integrals cancel
    dt1 = -kp.dgamma * kp.int_lq2 + dLambdaQ(r) * kp.int_glq
    far = r[-1]
    if abs(t1[-1] - T1_INF) > 1e-2 * (1 + 1e4 / far**2):
        raise ConfigurationError(
            "T1 does not approach 4/5; flip the sign of Gamma's normalisation",
            t1_at_rmax=float(t1[-1]),
        )
    # extend to r = 0 using the even expansion T1 = T1(r0) + O(r^2)
    grid = np.concatenate([[0.0], r])
    c2 = dt1[0] / (2.0 * r[0])
    values = np.concatenate([[t1[0] - c2 * r[0] ** 2], t1])
    deriv = np.concatenate([[0.0], dt1])
    return RadialProfile(grid, values, deriv, name="T1")


def build_Q_profile(r_max, n_nodes=2000, r_min=1e-3):
    r = np.concatenate([[0.0], graded_grid(r_max, n_nodes, r_min)])
    s = r * r / 24.0
    return RadialProfile(r, eval_Q(r), -(r / 6.0) * (1 + s) ** -3, name="Q")


def build_LambdaQ_profile(r_max, n_nodes=2000, r_min=1e-3):
    r = np.concatenate([[0.0], graded_grid(r_max, n_nodes, r_min)])
    return RadialProfile(r, eval_LambdaQ(r), dLambdaQ(r), name="LambdaQ")


def fd_weights(x0, x, m=2):
    """Fornberg finite-difference weights at x0 for derivatives 0..m on nodes x."""
    n = len(x)
    c = np.zeros((n, m + 1))
    c1, c4 = 1.0, x[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


def fd_apply_H(r, f, width=3):
    """H f = f'' + 5 f'/r + 2Q f at interior nodes by (2 width + 1)-point stencils.

    Uses only the sampled values, not the interpolant, so it checks a profile
    independently of how it was built.  End nodes are NaN.
    """
    r = np.asarray(r, dtype=float)
    f = np.asarray(f, dtype=float)
    out = np.full_like(f, np.nan)
    q = eval_Q(r)
    for i in range(width, len(r) - width):
        sl = slice(i - width, i + width + 1)
        w = fd_weights(r[i], r[sl], 2)
        out[i] = w[:, 2] @ f[sl] + 5.0 * (w[:, 1] @ f[sl]) / r[i] + 2.0 * q[i] * f[i]
    return out
