"""Radial method of lines for u_t = Delta u + |u| u in R^6.

Finite volumes on a sinh-graded grid: faces r_k = h0 sinh(k delta) / delta
are uniform (spacing h0) near the origin and geometric (ratio e^delta) far
out.  With cell volumes V and face fluxes r^5 (u_{i+1} - u_i) / dr the
semi-discrete system is V u' = -K u + V |u| u with K symmetric, positive
definite and tridiagonal (homogeneous Dirichlet at r_max).

Time stepping is the convex splitting of the discrete energy
E(u) = pi^3 (u.K u / 2 - sum V |u|^3 / 3): diffusion implicit, reaction
explicit.  Each step lowers E regardless of dt.  Step size is controlled
by step doubling and the two half steps are kept, so the energy property
survives adaptivity.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.linalg import solve_banded

from .errors import BlowUpSuspected, ConfigurationError, DomainError, RangeError
from .heat_tail import theta_at, theta_origin
from .profiles import RadialProfile, build_T1, eval_cutoff, eval_Q

SPHERE = np.pi**3  # area of the unit 5-sphere


@dataclass(frozen=True)
class SimConfig:
    lam: float = 1.0          # core scale the grid must resolve
    h0: float | None = None   # spacing at the origin, default lam / 50
    delta: float = 0.02       # asymptotic log-spacing of the faces
    t_start: float = 10.0
    horizon: float = 10.0
    rtol: float = 1e-4        # step-doubling tolerance, relative to sup|u|
    atol: float = 1e-12
    kappa: float = 0.25
    R: float = 10.0           # inner zone is |x| < R lam
    r_max: float | None = None
    nonlinear: bool = True
    dt0: float = 1e-3
    dt_max: float = np.inf
    max_steps: int = 200_000
    blowup_factor: float = 1e6

    def __post_init__(self):
        if not 0 < self.kappa < 0.5:
            raise ConfigurationError("kappa must lie in (0, 1/2)", kappa=self.kappa)
        if self.lam <= 0 or self.t_start < 0 or self.horizon <= 0:
            raise ConfigurationError("lam, horizon must be positive and t_start >= 0")
        if self.delta <= 0 or (self.h0 is not None and self.h0 <= 0):
            raise ConfigurationError("grid spacings must be positive")
        if not 0 < self.rtol < 1:
            raise ConfigurationError("rtol must lie in (0, 1)", rtol=self.rtol)
        if self.r_max is not None and self.r_max < 20 * np.sqrt(self.t_start + self.horizon):
            raise ConfigurationError("r_max must be at least 20 sqrt(t_end)", r_max=self.r_max)

    @property
    def spacing(self):
        return self.lam / 50.0 if self.h0 is None else self.h0

    @property
    def outer_radius(self):
        if self.r_max is not None:
            return self.r_max
        return max(20.0 * np.sqrt(self.t_start + self.horizon), 40.0 * self.lam)

    def refined(self, factor=2):
        """Same grid map with every cell split into ``factor`` pieces."""
        return replace(self, h0=self.spacing / factor, delta=self.delta / factor)


@dataclass
class RadialGrid:
    faces: np.ndarray
    centers: np.ndarray
    volumes: np.ndarray
    diag: np.ndarray = field(repr=False)
    off: np.ndarray = field(repr=False)

    @property
    def n(self):
        return self.centers.size

    def laplacian(self, u):
        """Discrete Delta u = -K u / V at the cell centres."""
        return -self.apply_K(u) / self.volumes

    def apply_K(self, u):
        out = self.diag * u
        out[:-1] += self.off * u[1:]
        out[1:] += self.off * u[:-1]
        return out

    def energy(self, u):
        quad = 0.5 * float(np.dot(u, self.apply_K(u)))
        return SPHERE * (quad - float(np.sum(self.volumes * np.abs(u) ** 3)) / 3.0)

    def value_at_origin(self, u):
        # quadratic through the first three centres (u is even in r)
        c = self.centers[:3] ** 2
        l0 = c[1] * c[2] / ((c[0] - c[1]) * (c[0] - c[2]))
        l1 = c[0] * c[2] / ((c[1] - c[0]) * (c[1] - c[2]))
        l2 = c[0] * c[1] / ((c[2] - c[0]) * (c[2] - c[1]))
        return float(l0 * u[0] + l1 * u[1] + l2 * u[2])


def make_grid(cfg):
    h0, d = cfg.spacing, cfg.delta
    n = int(np.ceil(np.arcsinh(cfg.outer_radius * d / h0) / d))
    k = np.arange(n + 1)
    faces = h0 * np.sinh(k * d) / d
    faces[-1] = max(faces[-1], cfg.outer_radius)
    centers = 0.5 * (faces[1:] + faces[:-1])
    volumes = (faces[1:] ** 6 - faces[:-1] ** 6) / 6.0
    inner = faces[1:-1]
    cond = inner**5 / np.diff(centers)
    diag = np.zeros(n)
    diag[:-1] += cond
    diag[1:] += cond
    # Dirichlet: u = 0 on the outer face, half a cell from the last centre
    diag[-1] += faces[-1] ** 5 / (faces[-1] - centers[-1])
    return RadialGrid(faces, centers, volumes, diag, -cond)


# ---- ansatz -----------------------------------------------------------------

_T1 = None


def t1_profile():
    global _T1
    if _T1 is None:
        _T1 = build_T1()
    return _T1


def outer_cutoff(r, lam, t, kappa):
    """chi_1 = chi(|x| / (lam^kappa sqrt(t)^(1-kappa)))."""
    return eval_cutoff(np.asarray(r) / (lam**kappa * np.sqrt(t) ** (1 - kappa)))


def tabulate_heat(datum, t, r):
    """theta(r, t) for a heat_tail datum at the given radii (one quadrature per radius)."""
    r = np.asarray(r, dtype=float)
    vals = np.array([theta_origin(datum, t).value if x == 0 else theta_at(datum, x, t).value
                     for x in r])
    return RadialProfile(r, vals, name=f"theta(t={t:g})")


def assemble_ansatz(lam, b, theta_profile, cfg, t=None, r=None):
    """lam^-2 Q(x/lam) chi_1 + (5b/4) T1(x/lam) chi_1 + theta (1 - chi_1) on the grid."""
    if lam <= 0:
        raise DomainError("lambda must be positive", lam=lam)
    t = cfg.t_start if t is None else t
    r = make_grid(cfg).centers if r is None else np.asarray(r, dtype=float)
    chi = outer_cutoff(r, lam, t, cfg.kappa)
    core = chi > 0
    y = r[core] / lam
    T1 = t1_profile()
    if y.size and y.max() > T1.grid[-1]:
        raise RangeError("cutoff extends past the tabulated T1", y_max=float(y.max()))
    out = np.zeros_like(r)
    out[core] = chi[core] * (lam**-2 * eval_Q(y) + 1.25 * b * T1(y))
    tail = chi < 1
    if np.any(tail):
        if theta_profile is None:
            raise RangeError("theta profile required outside the cutoff")
        g = theta_profile.grid
        if r[tail].min() < g[0] or r[tail].max() > g[-1]:
            raise RangeError("theta profile does not cover the grid",
                             need=(float(r[tail].min()), float(r[tail].max())),
                             have=(float(g[0]), float(g[-1])))
        out[tail] += (1 - chi[tail]) * theta_profile(r[tail])
    return RadialProfile(r, out, name="ansatz")


def ground_state(lam, cfg):
    r = make_grid(cfg).centers
    return RadialProfile(r, lam**-2 * eval_Q(r / lam), name="Q_lam")


# ---- residual ---------------------------------------------------------------

@dataclass
class ResidualReport:
    inner: float
    intermediate: float
    outer: float
    pointwise: np.ndarray = field(repr=False)


def residual(u, u_prev, dt, cfg, t=None, lam=None):
    """|(u - u_prev)/dt - Delta u - |u| u| and its sup over three zones.

    Zones: |x| < R lam, R lam <= |x| <= sqrt t, |x| > sqrt t.  ``u`` and
    ``u_prev`` are profiles (or arrays) on the cfg grid centres.
    """
    grid = make_grid(cfg)
    uv = _values(u, grid)
    pv = _values(u_prev, grid)
    t = cfg.t_start if t is None else t
    lam = cfg.lam if lam is None else lam
    res = np.abs((uv - pv) / dt - grid.laplacian(uv) - np.abs(uv) * uv)
    r = grid.centers
    zones = [r < cfg.R * lam, (r >= cfg.R * lam) & (r <= np.sqrt(t)), r > np.sqrt(t)]
    sups = [float(res[z].max()) if np.any(z) else 0.0 for z in zones]
    return ResidualReport(*sups, res)


def _values(u, grid):
    v = u.values if isinstance(u, RadialProfile) else np.asarray(u, dtype=float)
    if v.shape != grid.centers.shape:
        raise ConfigurationError("profile is not on the simulation grid")
    return v


def ansatz_residual(datum, lam, t, dt, cfg, matched=True):
    """Residual of the ansatz between t - dt and t, with lambda on the modulation law.

    Both variants move lambda with d log(lambda)/dt = (5/4) b(t); the matched one
    also carries the (5b/4) T1 correction, the unmatched one drops it.
    """
    grid = make_grid(cfg)
    b_now = theta_origin(datum, t).value
    b_prev = theta_origin(datum, t - dt).value
    lam_prev = lam * np.exp(-1.25 * b_now * dt)
    w = 1.0 if matched else 0.0
    u = assemble_ansatz(lam, w * b_now, tabulate_heat(datum, t, grid.centers), cfg, t=t)
    u_prev = assemble_ansatz(lam_prev, w * b_prev, tabulate_heat(datum, t - dt, grid.centers),
                             cfg, t=t - dt)
    return residual(u, u_prev, dt, cfg, t=t, lam=lam)


# ---- time stepping ----------------------------------------------------------

@dataclass
class SimState:
    t: float
    u: np.ndarray
    energy: float
    u0: float
    lambda_est: float
    dt: float = 0.0
    rejected: int = 0


@dataclass
class RunResult:
    config: SimConfig
    grid: RadialGrid
    states: list
    status: str = "ok"      # ok | blowup | stopped | max_steps

    @property
    def times(self):
        return np.array([s.t for s in self.states])

    @property
    def u0(self):
        return np.array([s.u0 for s in self.states])

    @property
    def energy(self):
        return np.array([s.energy for s in self.states])

    @property
    def lambda_est(self):
        return np.array([s.lambda_est for s in self.states])

    @property
    def final(self):
        return self.states[-1]

    def write_csv(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "u0", "lambda_est", "energy", "dt"])
            for s in self.states:
                w.writerow([f"{s.t:.17g}", f"{s.u0:.17g}", f"{s.lambda_est:.17g}",
                            f"{s.energy:.17g}", f"{s.dt:.17g}"])

    def snapshot_csv(self, path, index=-1):
        s = self.states[index]
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["r", "u"])
            for r, v in zip(self.grid.centers, s.u):
                w.writerow([f"{r:.17g}", f"{v:.17g}"])


class _Stepper:
    def __init__(self, grid, nonlinear):
        self.grid = grid
        self.nonlinear = nonlinear
        self._ab = np.zeros((3, grid.n))

    def __call__(self, u, dt):
        g = self.grid
        rhs = g.volumes * u
        if self.nonlinear:
            rhs = rhs + dt * g.volumes * np.abs(u) * u
        ab = self._ab
        ab[0, 1:] = dt * g.off
        ab[1] = g.volumes + dt * g.diag
        ab[2, :-1] = dt * g.off
        return solve_banded((1, 1), ab, rhs, check_finite=False)


def _lambda_est(u0):
    return u0 ** -0.5 if u0 > 0 else float("nan")


def make_state(grid, t, u):
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise DomainError("state is not finite", t=t)
    u0 = grid.value_at_origin(u)
    return SimState(float(t), u, grid.energy(u), u0, _lambda_est(u0))


def step(state, cfg, grid=None, dt=None, stepper=None):
    """One adaptive step; returns (new_state, dt_next).  Rejections retry internally."""
    grid = make_grid(cfg) if grid is None else grid
    stepper = _Stepper(grid, cfg.nonlinear) if stepper is None else stepper
    dt = state.dt or cfg.dt0 if dt is None else dt
    u = state.u
    rejected = 0
    while True:
        big = stepper(u, dt)
        half = stepper(stepper(u, 0.5 * dt), 0.5 * dt)
        scale = cfg.atol + cfg.rtol * max(np.max(np.abs(half)), np.max(np.abs(u)))
        err = float(np.max(np.abs(big - half))) / scale
        if not np.isfinite(err):
            err = np.inf
        if err <= 1.0:
            break
        rejected += 1
        dt *= max(0.2, 0.9 / np.sqrt(err)) if np.isfinite(err) else 0.2
        if dt < 1e-14 * max(state.t, 1.0):
            raise BlowUpSuspected("time step collapsed", t=state.t, dt=dt)
    new = make_state(grid, state.t + dt, half)
    new.dt, new.rejected = dt, rejected
    factor = min(2.0, 0.9 / np.sqrt(err)) if err > 0 else 2.0
    return new, min(dt * max(factor, 0.2), cfg.dt_max)


def run(cfg, initial, stop=None, fixed_dt=None, record_every=1):
    """Evolve ``initial`` (profile or array on the cfg grid) from t_start over the horizon.

    ``stop(state)`` may return a status string to end the run early.  With
    ``fixed_dt`` the step size is constant (used for convergence studies).
    """
    grid = make_grid(cfg)
    stepper = _Stepper(grid, cfg.nonlinear)
    state = make_state(grid, cfg.t_start, _values(initial, grid))
    sup0 = float(np.max(np.abs(state.u)))
    states = [state]
    t_end = cfg.t_start + cfg.horizon
    dt = cfg.dt0 if fixed_dt is None else fixed_dt
    status = "ok"
    for k in range(cfg.max_steps):
        if state.t >= t_end * (1 - 1e-14):
            break
        dt = min(dt, t_end - state.t)
        if fixed_dt is not None:
            u = stepper(state.u, dt)
            state = make_state(grid, state.t + dt, u)
            state.dt = dt
            dt = fixed_dt
        else:
            state, dt = step(state, cfg, grid, dt, stepper)
        if k % record_every == 0 or state.t >= t_end * (1 - 1e-14):
            states.append(state)
        if np.max(np.abs(state.u)) > cfg.blowup_factor * sup0:
            status = "blowup"
            break
        if stop is not None:
            s = stop(state)
            if s:
                status = s
                break
    else:
        status = "max_steps"
    if states[-1] is not state:
        states.append(state)
    return RunResult(cfg, grid, states, status)


def run_or_raise(cfg, initial, **kw):
    res = run(cfg, initial, **kw)
    if res.status == "blowup":
        raise BlowUpSuspected("finite-time blow-up suspected", t=res.final.t,
                              sup=float(np.max(np.abs(res.final.u))))
    return res


def extract_lambda(state):
    """lambda_est = u(0, t)^(-1/2)."""
    u0 = state.u0 if isinstance(state, SimState) else float(state)
    if not u0 > 0:
        raise DomainError("center value is not positive; profile is not ground-state-like",
                          u0=u0)
    return u0 ** -0.5


def observed_order(errors, factor=2.0):
    """Convergence orders between consecutive refinement levels."""
    e = np.asarray(errors, dtype=float)
    return np.log(e[:-1] / e[1:]) / np.log(factor)


# ---- oscillation demo -------------------------------------------------------

def unstable_mode(cfg, lam=None, R=20.0):
    """First Dirichlet eigenfunction of -H on B_R, rescaled to lam, on the grid."""
    from .spectrum import discretize, eig

    lam = cfg.lam if lam is None else lam
    psi = eig(discretize(R, int(100 * R)), 1)[0].psi
    r = make_grid(cfg).centers / lam
    return np.where(r < R, psi(np.minimum(r, R)), 0.0) * lam**-2


@dataclass
class TrendReport:
    label: str
    t_start: float
    b_sign: int
    settle_until: float
    shadow_until: float
    steps: int
    agree: float
    mean_rate: float
    predicted_rate: float
    mode_amplitude: float
    bisections: int

    @property
    def passed(self):
        return self.steps >= 20 and self.agree >= 0.9


@dataclass
class ControlReport:
    t_end: float
    u0: float
    heat_u0: float

    @property
    def rel_error(self):
        return abs(self.u0 / self.heat_u0 - 1)


@dataclass
class DemoReport:
    trends: list
    control: ControlReport | None = None

    @property
    def passed(self):
        return all(t.passed for t in self.trends)


def _classify(u00, factor=1.5):
    def stop(s):
        if s.u0 > factor * u00:
            return "up"
        if s.u0 < u00 / factor:
            return "down"
        return None
    return stop


def stable_manifold_pair(cfg, base, mode, bracket=1e-2, max_iter=80):
    """Bisect the mode amplitude between collapse and dispersal.

    Returns the two final bracketing runs (one per outcome) and the iteration
    count.  Along the stable manifold neither outcome occurs over the horizon;
    in double precision the runs shadow it until the unstable mode, seeded at
    rounding level, has grown to the tolerance used to compare them.
    """
    grid = make_grid(cfg)
    stop = _classify(grid.value_at_origin(base))
    lo, hi = -bracket, bracket
    rl, rh = run(cfg, base + lo * mode, stop=stop), run(cfg, base + hi * mode, stop=stop)
    if rl.status == rh.status:
        raise ConfigurationError("bracket does not separate collapse from dispersal",
                                 status=rl.status, bracket=bracket)
    it = 0
    for it in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        r = run(cfg, base + mid * mode, stop=stop)
        if r.status == rl.status:
            lo, rl = mid, r
        else:
            hi, rh = mid, r
    return rl, rh, 0.5 * (lo + hi), it


def _shadow_time(a, b, tol):
    la, lb = np.log(a.lambda_est), np.log(b.lambda_est)
    lb_on_a = np.interp(a.times, b.times, lb)
    bad = np.nonzero(~(np.abs(la - lb_on_a) < tol))[0]
    end = min(a.final.t, b.final.t)
    return min(a.times[bad[0]], end) if bad.size else end


def trend_window(cfg, datum, label="", settle=10.0, shadow_tol=1e-7):
    """Sign test of d log(lambda_est)/dt against (5/4) b(t) on one window."""
    grid = make_grid(cfg)
    ts = cfg.t_start
    theta = tabulate_heat(datum, ts, grid.centers)
    b0 = theta_origin(datum, ts).value
    base = assemble_ansatz(cfg.lam, b0, theta, cfg).values
    rl, rh, amp, it = stable_manifold_pair(cfg, base, unstable_mode(cfg))
    t_shadow = _shadow_time(rl, rh, shadow_tol)
    t_settle = ts + settle * cfg.lam**2
    t = rl.times
    ll = np.log(rl.lambda_est)
    m = (t[1:] > t_settle) & (t[1:] <= t_shadow)
    dl = np.diff(ll)[m]
    tm = t[1:][m]
    if tm.size:
        bs = np.array([theta_origin(datum, x).value for x in tm[:: max(1, tm.size // 8)]])
        if np.any(np.sign(bs) != np.sign(b0)):
            raise ConfigurationError("b changes sign inside the evaluation interval", label=label)
    agree = float(np.mean(np.sign(dl) == np.sign(b0))) if dl.size else 0.0
    rate = float((ll[1:][m][-1] - ll[1:][m][0]) / (tm[-1] - tm[0])) if tm.size > 1 else float("nan")
    return TrendReport(label, ts, int(np.sign(b0)), t_settle, float(t_shadow), int(dl.size), agree,
                       rate, 1.25 * b0, float(amp), it)


def control_run(cfg, datum, horizon=10.0):
    """Nonlinearity off: the centre value must follow the free heat flow of the ansatz."""
    from .heat_tail import TabulatedDatum

    c = replace(cfg, nonlinear=False, horizon=horizon, rtol=min(cfg.rtol, 1e-7))
    grid = make_grid(c)
    theta = tabulate_heat(datum, c.t_start, grid.centers)
    u_init = assemble_ansatz(c.lam, theta_origin(datum, c.t_start).value, theta, c)
    res = run(c, u_init)
    prof = RadialProfile(np.concatenate([[0.0], grid.centers]),
                         np.concatenate([[grid.value_at_origin(u_init.values)], u_init.values]))
    ref = theta_origin(TabulatedDatum(prof), horizon, rtol=1e-10).value
    return ControlReport(res.final.t, res.final.u0, ref)


def oscillation_demo(cfg, data, settle=10.0, shadow_tol=1e-7, control=True):
    """Run trend_window for each (label, datum) pair, plus an optional control run."""
    trends = [trend_window(cfg, d, label, settle, shadow_tol) for label, d in data]
    ctl = control_run(cfg, data[0][1]) if control else None
    return DemoReport(trends, ctl)
