"""Radial Dirichlet spectrum of -H = -(Delta + 2Q) on the ball B_R in R^6.

With w = r^(5/2) u the radial operator becomes -w'' + (15/(4 r^2) - 2Q) w,
which on the uniform grid r_i = i h (w = 0 at r = 0 and r = R) is a
symmetric tridiagonal matrix.  Euclidean inner products of w-vectors are
r^5-weighted inner products of u-vectors, so orthogonality carries over.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .errors import ConfigurationError, NumericError
from .profiles import RadialProfile, eval_Q

CENTRIFUGAL = 15.0 / 4.0  # (n-1)(n-3)/4 at n = 6
MIN_NODES_PER_UNIT = 20


@dataclass
class DirichletOperator:
    R: float
    N: int
    nodes: np.ndarray
    potential: np.ndarray
    weights: np.ndarray
    diag: np.ndarray = field(repr=False)
    offdiag: np.ndarray = field(repr=False)

    @property
    def h(self):
        return self.R / (self.N + 1)

    def apply(self, u):
        """(-H) u at the interior nodes, with u = 0 at r = 0 and r = R in w-form."""
        u = np.asarray(u, dtype=float)
        w = self.nodes**2.5 * u
        tw = self.diag * w
        tw[:-1] += self.offdiag * w[1:]
        tw[1:] += self.offdiag * w[:-1]
        return tw / self.nodes**2.5

    def inner(self, u, v):
        """Discrete r^5-weighted inner product."""
        return float(np.sum(self.weights * u * v))


@dataclass
class EigenPair:
    mu: float
    psi: RadialProfile
    index: int = 0


def discretize(R, N):
    R, N = float(R), int(N)
    if R < 5:
        raise ConfigurationError("ball radius must be at least 5", R=R)
    if N < 500:
        raise ConfigurationError("need at least 500 interior nodes", N=N)
    if N / R < MIN_NODES_PER_UNIT:
        raise ConfigurationError("fewer than 20 nodes per unit radius",
                                 R=R, N=N, nodes_per_unit=N / R)
    h = R / (N + 1)
    r = h * np.arange(1, N + 1)
    V = 2.0 * eval_Q(r)
    diag = 2.0 / h**2 + CENTRIFUGAL / r**2 - V
    off = np.full(N - 1, -1.0 / h**2)
    return DirichletOperator(R, N, r, V, h * r**5, diag, off)


def _value_at_origin(r, u):
    # quadratic through the three smallest nodes, evaluated at 0
    r0, r1, r2 = r[:3]
    u0, u1, u2 = u[:3]
    l0 = r1 * r2 / ((r0 - r1) * (r0 - r2))
    l1 = r0 * r2 / ((r1 - r0) * (r1 - r2))
    l2 = r0 * r1 / ((r2 - r0) * (r2 - r1))
    return l0 * u0 + l1 * u1 + l2 * u2


def eig(op, k=5):
    """Lowest k eigenpairs of -H on B_R, each scaled to psi(0) = 1."""
    if not 1 <= k <= 10:
        raise ConfigurationError("k must lie in 1..10", k=k)
    try:
        mu, vecs = eigh_tridiagonal(op.diag, op.offdiag, select="i",
                                    select_range=(0, k - 1), lapack_driver="stebz")
    except LinAlgError as exc:
        raise NumericError("tridiagonal eigensolver failed", detail=str(exc), k=k) from exc

    r = op.nodes
    pairs = []
    for j in range(k):
        w = vecs[:, j]
        resid = op.apply(w / r**2.5) * r**2.5 - mu[j] * w
        if not np.all(np.isfinite(w)) or np.max(np.abs(resid)) > 1e-6 * np.max(np.abs(op.diag)):
            raise NumericError("eigenvector did not converge", index=j + 1,
                               residual=float(np.max(np.abs(resid))))
        u = w / r**2.5
        u0 = _value_at_origin(r, u)
        if u0 == 0:
            raise NumericError("eigenfunction vanishes at the origin", index=j + 1)
        u = u / u0
        grid = np.concatenate([[0.0], r, [op.R]])
        vals = np.concatenate([[1.0], u, [0.0]])
        pairs.append(EigenPair(float(mu[j]), RadialProfile(grid, vals, name=f"psi{j + 1}"), j + 1))
    return pairs


def psi1_decay_rate(pair, R):
    """Exponential rate a in |psi1| ~ exp(-a r), fitted on (5, R/2)."""
    r, v = pair.psi.grid, pair.psi.values
    m = (r > 5) & (r < R / 2) & (np.abs(v) > 0)
    if m.sum() < 5:
        return float("nan")
    return float(-np.polyfit(r[m], np.log(np.abs(v[m])), 1)[0])


def psi2_decay_power(pair, R):
    """Power p in |psi2| ~ r^-p, fitted on (6, R/2)."""
    r, v = pair.psi.grid, pair.psi.values
    m = (r > 6) & (r < R / 2) & (np.abs(v) > 0)
    if m.sum() < 5:
        return float("nan")
    return float(-np.polyfit(np.log(r[m]), np.log(np.abs(v[m])), 1)[0])


@dataclass
class ScalingRow:
    R: float
    N: int
    mu1: float
    mu2R4: float
    mu3R3: float
    psi1_decay_fit: float
    psi2_decay_fit: float
    psi2_weighted_sup: float  # sup |psi2| (1+r)^4 over (0, R/2)


def scaling_report(Rs, N_per_R=100):
    rows = []
    prev = None
    for R in Rs:
        if R < 10:
            raise ConfigurationError("scaling radii must be at least 10", R=R)
        if prev is not None and R <= prev:
            raise ConfigurationError("radii must be ascending", Rs=list(Rs))
        prev = R
        N = int(round(N_per_R * R))
        pairs = eig(discretize(R, N), 3)
        p2 = pairs[1].psi
        half = p2.grid < R / 2
        rows.append(ScalingRow(
            R=float(R), N=N, mu1=pairs[0].mu,
            mu2R4=pairs[1].mu * R**4, mu3R3=pairs[2].mu * R**3,
            psi1_decay_fit=psi1_decay_rate(pairs[0], R),
            psi2_decay_fit=psi2_decay_power(pairs[1], R),
            psi2_weighted_sup=float(np.max(np.abs(p2.values[half]) * (1 + p2.grid[half]) ** 4)),
        ))
    return rows


def e0_estimate(R=40.0, N_per_R=(25, 50, 100)):
    """-lim mu1 with a Richardson error bar in h (R fixed, large enough that
    the R-dependence is exponentially small)."""
    mus = [eig(discretize(R, int(n * R)), 1)[0].mu for n in N_per_R]
    # second order: mu(h) = mu* + c h^2, and h halves between levels
    extrap = mus[-1] + (mus[-1] - mus[-2]) / 3.0
    err = abs(extrap - (mus[-2] + (mus[-2] - mus[-3]) / 3.0))
    return -extrap, err


def write_report_csv(path, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["R", "N", "mu1", "mu2R4", "mu3R3", "psi1_decay_fit", "psi2_decay_fit"])
        for row in rows:
            w.writerow([f"{row.R:.17g}", row.N, f"{row.mu1:.17g}", f"{row.mu2R4:.17g}",
                        f"{row.mu3R3:.17g}", f"{row.psi1_decay_fit:.17g}",
                        f"{row.psi2_decay_fit:.17g}"])
