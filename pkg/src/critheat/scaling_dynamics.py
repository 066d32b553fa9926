"""Dynamics of the scaling parameter lambda(t) in log time tau = log t.

On sign windows (t_j^+, t_{j+1}^-) the rate is

    d log(lambda) / d tau = -/+ (1 - beta) q1 tau^-beta + D(tau),

with the minus sign for odd j.  On gap windows (t_j^-, t_j^+) only an
envelope |rate| < 2 (1 - beta) q1 tau^-beta is prescribed.  The main-term
increments are exact (q1 times differences of tau^(1-beta)) and are
accumulated in mpmath, because tau itself reaches n1^(j/(1-beta)) ~ 1e24.
Perturbations and user rates are integrated in v = log tau with scipy.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import mpmath as mp
import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import CubicSpline

from .errors import ConfigurationError, DomainError, RangeError
from .heat_tail import A1, q1_of
from .profiles import eval_LambdaQ, eval_Q
from .schedule import WORK_DPS, TimeSchedule, make_schedule

D_CHOICES = ("zero", "envelope+", "envelope-", "random")
GAP_CHOICES = ("zero", "envelope", "random")
SAMPLES_PER_WINDOW = 16
QUAD_EPS = 1e-12


@dataclass(frozen=True)
class PiecewiseRate:
    beta: float
    q1: float
    C1: float = 1.0
    beta_prime: float = 1.2
    d_choice: str = "zero"
    gap_choice: str = "envelope"
    seed: int = 0
    gap_rate: object = None  # optional callable tau -> d log(lambda)/d tau

    def __post_init__(self):
        if self.d_choice not in D_CHOICES:
            raise ConfigurationError("unknown perturbation choice", d_choice=self.d_choice)
        if self.gap_choice not in GAP_CHOICES:
            raise ConfigurationError("unknown gap rate choice", gap_choice=self.gap_choice)
        if self.beta_prime <= 1:
            raise ConfigurationError("beta' must exceed 1", beta_prime=self.beta_prime)
        if self.C1 < 0:
            raise ConfigurationError("C1 must be nonnegative", C1=self.C1)

    def main_sign(self, j):
        return -1 if j % 2 else 1

    def gap_envelope(self, tau):
        return 2.0 * (1.0 - self.beta) * self.q1 * tau ** -self.beta

    def d_envelope(self, tau):
        return self.C1 * tau ** -self.beta_prime


def random_profile(seed, n_modes=6):
    """Seeded smooth function of v = log tau with values in [-1, 1]."""
    rng = np.random.default_rng(seed)
    amp = rng.uniform(0.2, 1.0, n_modes)
    freq = rng.uniform(0.3, 4.0, n_modes)
    phase = rng.uniform(0, 2 * np.pi, n_modes)
    amp = amp / amp.sum()

    def xi(v):
        return np.sum(amp * np.sin(np.multiply.outer(v, freq) + phase), axis=-1)
    return xi


def _mp_pow(x, a):
    with mp.workdps(WORK_DPS):
        return mp.power(mp.mpf(x), a)


@dataclass
class Segment:
    kind: str        # "gap" or "sign"
    j: int
    tau_lo: object   # mpf
    tau_hi: object


@dataclass
class LambdaTrajectory:
    """Samples (tau, log lambda) with provenance.

    ``loglambda`` entries are mpf; ``int_D`` and ``int_absD`` accumulate the
    perturbation integral and its absolute value from tau_1^+ onward.
    """
    schedule: TimeSchedule
    rate: PiecewiseRate
    tau: list = field(default_factory=list)
    loglambda: list = field(default_factory=list)
    branch: list = field(default_factory=list)
    window: list = field(default_factory=list)
    int_D: list = field(default_factory=list)
    int_absD: list = field(default_factory=list)

    def at_node(self, tau):
        """log lambda at a stored node (exact match on a schedule point)."""
        for k, t in enumerate(self.tau):
            if t == tau:
                return self.loglambda[k], self.int_absD[k], self.int_D[k]
        raise RangeError("tau is not a stored node", tau=float(tau))

    def write_csv(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["tau", "loglambda", "branch"])
            for t, l, b in zip(self.tau, self.loglambda, self.branch):
                w.writerow([mp.nstr(t, 25), mp.nstr(l, 25), b])


def _segments(sched):
    segs = []
    for j in range(1, sched.jmax + 1):
        segs.append(Segment("gap", j, sched.log_tj_minus[j - 1], sched.log_tj_plus[j - 1]))
        if j < sched.jmax:
            segs.append(Segment("sign", j, sched.log_tj_plus[j - 1], sched.log_tj_minus[j]))
    return segs


def _d_value(rate, xi, v):
    tau = np.exp(v)
    env = rate.C1 * tau ** (1.0 - rate.beta_prime)  # d/dv form: tau * envelope
    if rate.d_choice == "zero":
        return 0.0 * v
    if rate.d_choice == "envelope+":
        return env
    if rate.d_choice == "envelope-":
        return -env
    return env * xi(v)


def _integrate_v(fn, v_lo, v_hi):
    """int fn dv on [v_lo, v_hi] with unit-width panels (v spans up to ~55)."""
    pts = np.unique(np.concatenate([[v_lo], np.arange(np.ceil(v_lo), v_hi, 1.0), [v_hi]]))
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        scale = (abs(fn(a)) + abs(fn(0.5 * (a + b))) + abs(fn(b))) * (b - a)
        total += quad(fn, a, b, epsabs=QUAD_EPS * scale, epsrel=QUAD_EPS, limit=200)[0]
    return total


def integrate_piecewise(schedule, rate, samples=SAMPLES_PER_WINDOW):
    """Trajectory from lambda(t_1^-) = exp(q1 (log t_1^-)^(1-beta)) to t_jmax^+."""
    if abs(rate.beta - schedule.beta) > 1e-15:
        raise ConfigurationError("rate and schedule disagree on beta")
    xi = random_profile(rate.seed)
    gap_xi = random_profile(rate.seed + 7919)
    one_b = 1 - mp.mpf(rate.beta)
    q1 = mp.mpf(rate.q1)
    traj = LambdaTrajectory(schedule, rate)

    with mp.workdps(WORK_DPS):
        tau0 = schedule.log_tj_minus[0]
        ell = q1 * mp.power(tau0, one_b)
        intD = intabs = 0.0
        traj.tau.append(tau0)
        traj.loglambda.append(ell)
        traj.branch.append("init")
        traj.window.append(1)
        traj.int_D.append(0.0)
        traj.int_absD.append(0.0)

        for seg in _segments(schedule):
            if seg.kind == "sign":
                # sign windows span a factor n1^(1/(1-beta)) in tau: sample in log tau
                v_lo, v_hi = float(mp.log(seg.tau_lo)), float(mp.log(seg.tau_hi))
                nodes_v = np.linspace(v_lo, v_hi, samples + 1)[1:]
                nodes = [mp.exp(mp.mpf(v)) for v in nodes_v[:-1]] + [seg.tau_hi]
            else:
                # gap windows are O(log tau) wide, far below float resolution of
                # log tau at large j: sample linearly in the offset from tau_lo
                width = seg.tau_hi - seg.tau_lo
                nodes = [seg.tau_lo + width * k / samples for k in range(1, samples)] + [seg.tau_hi]
                nodes_v = [float(t - seg.tau_lo) for t in nodes]
            prev_tau, prev_v = seg.tau_lo, (v_lo if seg.kind == "sign" else 0.0)
            for tau_k, v_k in zip(nodes, nodes_v):
                dpow = mp.power(tau_k, one_b) - mp.power(prev_tau, one_b)
                if seg.kind == "sign":
                    s = rate.main_sign(seg.j)
                    ell += s * q1 * dpow
                    fn = lambda v: _d_value(rate, xi, v)
                    dD = _integrate_v(fn, prev_v, v_k)
                    dA = dD if rate.d_choice in ("envelope+", "zero") else (
                        -dD if rate.d_choice == "envelope-" else
                        _integrate_v(lambda v: abs(_d_value(rate, xi, v)), prev_v, v_k))
                    ell += dD
                    intD += dD
                    intabs += dA
                    branch = "sign+" if s > 0 else "sign-"
                else:
                    # gap windows carry D = 0; their rate is envelope-bounded
                    ell += _gap_increment(rate, seg, gap_xi, prev_v, v_k, dpow)
                    branch = "gap"
                traj.tau.append(tau_k)
                traj.loglambda.append(+ell)
                traj.branch.append(branch)
                traj.window.append(seg.j)
                traj.int_D.append(intD)
                traj.int_absD.append(intabs)
                prev_tau, prev_v = tau_k, v_k

    if not all(mp.isfinite(x) for x in traj.loglambda):
        raise DomainError("non-finite log lambda")
    return traj


def _gap_increment(rate, seg, gap_xi, s0, s1, dpow):
    """Increment of log lambda over [tau_lo + s0, tau_lo + s1] in a gap window."""
    if rate.gap_choice == "zero" and rate.gap_rate is None:
        return mp.mpf(0)
    if rate.gap_rate is None and rate.gap_choice == "envelope":
        return (-1 if seg.j % 2 else 1) * 2 * mp.mpf(rate.q1) * dpow
    base = float(seg.tau_lo)
    width = float(seg.tau_hi - seg.tau_lo)
    if rate.gap_rate is not None:
        sig = np.linspace(s0, s1, 16)
        r = np.array([float(rate.gap_rate(base + x)) for x in sig])
        if np.any(np.abs(r) > rate.gap_envelope(base + sig)):
            raise DomainError("gap rate exceeds the envelope 2(1-beta)q1/tau^beta", j=seg.j)
        fn = lambda x: float(rate.gap_rate(base + x))
    else:
        # seeded profile over the normalised window position, kept inside the envelope
        fn = lambda x: 0.95 * rate.gap_envelope(base + x) * float(gap_xi(8.0 * x / width))
    return mp.mpf(_integrate_v(fn, s0, s1))


# ---- verdicts -------------------------------------------------------------

@dataclass
class Verdict:
    check: str
    j: int
    parity: str
    lhs: float
    rhs: float
    passed: bool
    tol: float = 0.0
    anchor: str = ""

    @property
    def slack(self):
        return self.rhs - self.lhs


def _verdict(check, j, lhs, rhs, kind, tol, anchor):
    # kind "<": lhs < rhs ;  ">": lhs > rhs ;  "<=": lhs <= rhs + tol |rhs|
    with mp.workdps(WORK_DPS):
        lhs, rhs = mp.mpf(lhs), mp.mpf(rhs)
        if kind == "<":
            ok = lhs < rhs
        elif kind == ">":
            ok = lhs > rhs
        else:
            ok = lhs <= rhs + tol * max(abs(rhs), 1)
    parity = "all" if j == 0 else ("even" if j % 2 == 0 else "odd")
    if kind == ">":
        # store so that slack = rhs - lhs stays "positive when passing"
        return Verdict(check, j, parity, float(-lhs), float(-rhs), bool(ok), tol, anchor)
    return Verdict(check, j, parity, float(lhs), float(rhs), bool(ok), tol, anchor)


def check_scaling_bounds(traj, C1=None, beta_prime=None, tol=1e-10):
    """Verdicts for the alternating bounds at t_j^- (j >= 2) and the global envelope.

    The j = 1 instance is excluded: for odd j = 1 the left side is exactly
    zero while the lower bound q1 (n1/2 - 6) - ... is positive for n1 > 12.
    """
    sched, rate = traj.schedule, traj.rate
    C1 = rate.C1 if C1 is None else C1
    bp = rate.beta_prime if beta_prime is None else beta_prime
    q1, n1 = mp.mpf(rate.q1), sched.n1
    out = []
    with mp.workdps(WORK_DPS):
        base = traj.at_node(sched.log_tj_minus[0])[0]
        dterm = mp.mpf(C1) / (bp - 1) * mp.power(sched.log_tj_minus[0], -(bp - 1))
        for j in range(2, sched.jmax + 1):
            lhs = traj.at_node(sched.log_tj_minus[j - 1])[0] - base
            main = q1 / 2 * mp.power(n1, j) - 6 * q1 * mp.power(n1, j - 1)
            if j % 2 == 0:
                out.append(_verdict("alternating upper bound", j, lhs, -main + dterm, "<", 0,
                                    "scaling lemma: even-j upper bound"))
            else:
                out.append(_verdict("alternating lower bound", j, lhs, main - dterm, ">", 0,
                                    "scaling lemma: odd-j lower bound"))
        one_b = 1 - mp.mpf(rate.beta)
        tI = sched.log_tI
        worst = None
        for tau, ell in zip(traj.tau, traj.loglambda):
            rhs = -q1 * mp.power(tI, one_b) + 2 * q1 * mp.power(tau, one_b)
            gap = ell - rhs
            if worst is None or gap > worst[0]:
                worst = (gap, ell, rhs)
        out.append(_verdict("global envelope", 0, worst[1], worst[2], "<=", tol,
                            "scaling lemma: global envelope"))
    return out


def check_telescoping(traj, tol=0.0):
    """Two-sided bounds at t_j^- (j >= 2) with the accumulated int |D|."""
    sched, rate = traj.schedule, traj.rate
    q1 = mp.mpf(rate.q1)
    out = []
    with mp.workdps(WORK_DPS):
        one_b = 1 - mp.mpf(rate.beta)
        base = traj.at_node(sched.log_tj_minus[0])[0]
        for j in range(2, sched.jmax + 1):
            ell, absD, _ = traj.at_node(sched.log_tj_minus[j - 1])
            lhs = ell - base
            a = mp.power(sched.log_tj_minus[j - 1], one_b)
            b = mp.power(sched.log_tj_plus[j - 2], one_b)
            if j % 2 == 0:
                out.append(_verdict("telescoping upper", j, lhs, -q1 * a + 3 * q1 * b + absD, "<", 0,
                                    "telescoping: even-j upper"))
                out.append(_verdict("telescoping lower", j, lhs, -q1 * a - q1 * b - absD, ">", 0,
                                    "telescoping: even-j lower"))
            else:
                out.append(_verdict("telescoping upper", j, lhs, q1 * a + q1 * b + absD, "<", 0,
                                    "telescoping: odd-j upper"))
                out.append(_verdict("telescoping lower", j, lhs, q1 * a - 3 * q1 * b - absD, ">", 0,
                                    "telescoping: odd-j lower"))
    return out


def check_gap_bounds(traj, tol=1e-10):
    """|log lambda(t) - log lambda(t_j^-)| <= 2 q1 |tau^(1-beta) - (tau_j^-)^(1-beta)|."""
    sched, rate = traj.schedule, traj.rate
    q1 = mp.mpf(rate.q1)
    out = []
    with mp.workdps(WORK_DPS):
        one_b = 1 - mp.mpf(rate.beta)
        for j in range(1, sched.jmax + 1):
            t_minus = sched.log_tj_minus[j - 1]
            ell0 = traj.at_node(t_minus)[0]
            worst = None
            for tau, ell, br, w in zip(traj.tau, traj.loglambda, traj.branch, traj.window):
                if br != "gap" or w != j:
                    continue
                lhs = abs(ell - ell0)
                rhs = 2 * q1 * abs(mp.power(tau, one_b) - mp.power(t_minus, one_b))
                if worst is None or lhs - rhs > worst[0] - worst[1]:
                    worst = (lhs, rhs)
            out.append(_verdict("gap window bound", j, worst[0], worst[1], "<=", tol,
                                "scaling lemma: gap-window bound"))
    return out


def check_sign_identity(traj, tol=1e-10):
    """On sign windows: log lambda(t) - log lambda(t_j^+) -/+ q1 delta = int D.

    The right side is recomputed by an independent scipy quad over the whole
    stretch [tau_j^+, tau]; the comparison is relative to |log lambda|.
    """
    sched, rate = traj.schedule, traj.rate
    xi = random_profile(rate.seed)
    q1 = mp.mpf(rate.q1)
    out = []
    with mp.workdps(WORK_DPS):
        one_b = 1 - mp.mpf(rate.beta)
        for j in range(1, sched.jmax):
            t_plus = sched.log_tj_plus[j - 1]
            ell0 = traj.at_node(t_plus)[0]
            s = rate.main_sign(j)
            worst = (0.0, 0.0)
            for tau, ell, br, w in zip(traj.tau, traj.loglambda, traj.branch, traj.window):
                if not br.startswith("sign") or w != j:
                    continue
                resid = ell - ell0 - s * q1 * (mp.power(tau, one_b) - mp.power(t_plus, one_b))
                v0, v1 = float(mp.log(t_plus)), float(mp.log(tau))
                ref = quad(lambda v: _d_value(rate, xi, v), v0, v1, epsabs=1e-13, epsrel=1e-13,
                           limit=2000)[0]
                err = abs(float(resid) - ref)
                scale = float(max(abs(ell), 1))
                if err / scale >= worst[0]:
                    worst = (err / scale, scale)
            out.append(Verdict("sign window identity", j, "even" if j % 2 == 0 else "odd",
                               worst[0], tol, worst[0] <= tol, tol, "scaling lemma: sign-window identity"))
    return out


def slack_comparison(traj, C1=None, beta_prime=None):
    """Per even j: slack of the coarse bound minus slack of the telescoping bound."""
    coarse = {v.j: v for v in check_scaling_bounds(traj, C1, beta_prime) if v.j > 0}
    fine = {v.j: v for v in check_telescoping(traj) if v.check == "telescoping upper" and v.j % 2 == 0}
    return {j: coarse[j].slack - fine[j].slack for j in fine}


def alternation_proxy(traj):
    """log lambda(t_j^-) for j = 1..jmax (signs alternate, magnitudes grow)."""
    return [float(traj.at_node(traj.schedule.log_tj_minus[j - 1])[0])
            for j in range(1, traj.schedule.jmax + 1)]


def find_nbar(beta=0.75, jmax=5, C1=1.0, beta_prime=1.2, n_max=64):
    """Smallest n1 >= 4 for which every verdict passes under envelope+/- D."""
    q1 = q1_of(beta)
    for n1 in range(4, n_max + 1):
        try:
            sched = make_schedule(n1, beta, jmax)
        except ConfigurationError:
            continue
        ok = True
        for d in ("envelope+", "envelope-", "zero"):
            rate = PiecewiseRate(beta, q1, C1, beta_prime, d)
            traj = integrate_piecewise(sched, rate, samples=4)
            vs = check_scaling_bounds(traj) + check_telescoping(traj) + check_gap_bounds(traj)
            if not all(v.passed for v in vs):
                ok = False
                break
        if ok:
            return n1
    return None


def write_verdicts_csv(path, verdicts):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "parity", "bound", "lhs", "rhs", "pass"])
        for v in verdicts:
            w.writerow([v.j, v.parity, v.anchor, f"{v.lhs:.17g}", f"{v.rhs:.17g}", int(v.passed)])


# ---- outer field and modulation ------------------------------------------

@dataclass(frozen=True)
class SyntheticOuterField:
    """Bound shape t^-1 (log t)^-b' inside |x| < sqrt t, |x|^-2 (log |x|^2)^-b' outside."""
    beta_prime: float = 1.2
    amplitude: float = 1.0

    def __call__(self, x, t):
        x = np.asarray(x, dtype=float)
        inner = t**-1.0 * np.log(t) ** -self.beta_prime
        xx = np.maximum(x, np.sqrt(t))
        outer = xx**-2.0 * np.log(xx * xx) ** -self.beta_prime
        return self.amplitude * np.where(x < np.sqrt(t), inner, outer)

    def seam_mismatch(self, t):
        """Relative jump at |x| = sqrt t (zero: log|x|^2 = log t there)."""
        st = np.sqrt(t)
        a = t**-1.0 * np.log(t) ** -self.beta_prime
        b = st**-2.0 * np.log(st * st) ** -self.beta_prime
        return abs(a - b) / a


def modulation_rhs(w, lam, t, psi2, R):
    """-<2Q w(lambda y, t), psi2> / <LambdaQ, psi2> over B_R, r^5-weighted."""
    if lam <= 0:
        raise DomainError("lambda must be positive", lam=lam)
    if lam * R >= np.sqrt(t):
        raise DomainError("requires lambda R < sqrt(t)", lam=lam, R=R, t=t)
    y = psi2.psi.grid
    if y[-1] < R * (1 - 1e-12):
        raise RangeError("eigenfunction does not cover B_R", R=R)
    m = y <= R
    y, p = y[m], psi2.psi.values[m]
    wy = np.asarray(w(lam * y, t), dtype=float)
    num = np.trapezoid(2.0 * eval_Q(y) * wy * p * y**5, y)
    den = np.trapezoid(eval_LambdaQ(y) * p * y**5, y)
    if den == 0 or not np.isfinite(den):
        raise ConfigurationError("<LambdaQ, psi2> vanishes; wrong eigenfunction?")
    return -num / den


# ---- b-driven integration -------------------------------------------------

@dataclass
class BTable:
    """Tabulated b(t) held as g(tau) = t b(t) on an ascending tau grid."""
    tau: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        self.tau = np.asarray(self.tau, dtype=float)
        self.g = np.asarray(self.g, dtype=float)
        self._spline = CubicSpline(self.tau, self.g)

    @classmethod
    def from_samples(cls, t, b):
        t = np.asarray(t, dtype=float)
        return cls(np.log(t), t * np.asarray(b, dtype=float))

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        if np.any(tau < self.tau[0] - 1e-12) or np.any(tau > self.tau[-1] + 1e-12):
            raise RangeError("b table does not cover tau", lo=float(self.tau[0]), hi=float(self.tau[-1]))
        return self._spline(tau)


@dataclass
class MatchedTrajectory:
    tau: np.ndarray
    loglambda: np.ndarray
    rate: np.ndarray  # d log(lambda) / d tau at the samples


def integrate_matched(b, tau_span, loglambda0=0.0, correction=None, samples=200, rtol=1e-10):
    """d log(lambda)/d tau = (5/4) t b(t) (+ correction(tau)) by adaptive RK.

    ``b`` is a BTable or any callable returning t b(t) as a function of tau.
    """
    lo, hi = tau_span
    if isinstance(b, BTable):
        b(np.array([lo, hi]))  # coverage check, raises RangeError

    def rhs(tau, y):
        r = 1.25 * float(b(tau))
        if correction is not None:
            r += float(correction(tau))
        return [r]

    ts = np.linspace(lo, hi, samples)
    sol = solve_ivp(rhs, (lo, hi), [loglambda0], method="RK45", t_eval=ts, rtol=rtol, atol=1e-14)
    if not sol.success:
        raise DomainError("matched integration failed", message=sol.message)
    rates = np.array([rhs(t, None)[0] for t in ts])
    return MatchedTrajectory(ts, sol.y[0], rates)


def exact_b_trajectory(tau, tau0, beta, a1=A1, sign=-1):
    """Closed form for t b = sign A1 tau^-beta: sign q1 (tau^(1-b) - tau0^(1-b))."""
    q1 = q1_of(beta, a1)
    return sign * q1 * (np.asarray(tau) ** (1 - beta) - tau0 ** (1 - beta))
