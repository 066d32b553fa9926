"""The ten acceptance checks as functions returning verdict records.

Shared by ``critheat verify-all`` and tests/test_acceptance.py.  Every
function takes ``quick``; the quick profile shrinks grids and sample counts
roughly fourfold but keeps the tolerances.
"""
from __future__ import annotations

import numpy as np

from . import duhamel as du
from . import heat_tail as ht
from . import pde_sim as ps
from . import profiles as pf
from . import scaling_dynamics as sd
from . import spectrum as sp
from .records import Record, from_verdict, inside, le
from .schedule import make_schedule

MONOTONE_TIMES = (1e6, 1e8, 1e10)


def criterion_1(quick=False):
    a1 = ht.A1_constant()
    return [le("A1 quadrature vs 1/8", abs(a1 - 0.125), 1e-8, "tail constant: Gaussian moment",
               group="criterion 1")]


def profile_records(t1, group="criterion 2"):
    """Limit and equation checks for a tabulated T1 (needs r_max >= 2e3)."""
    r = t1.grid[1:]
    res = pf.fd_apply_H(r, t1.values[1:], 3) + pf.eval_LambdaQ(r)
    band = (r >= 0.5) & (r <= r[-1] / 2)
    sup_lq = float(np.max(np.abs(pf.eval_LambdaQ(np.linspace(0, 10, 10001)))))
    return [
        le("T1(1e3) vs 4/5", abs(float(t1(1e3)) - 0.8), 1e-4, "matching profile: limit 4/5",
           group=group),
        le("|H T1 + LambdaQ| by finite differences", float(np.max(np.abs(res[band]))),
           1e-6 * sup_lq, "matching profile: H T1 = -LambdaQ", group=group),
    ]


def criterion_2(quick=False):
    return profile_records(pf.build_T1())


def _min_over_median(v):
    v = np.asarray(v, dtype=float)
    return float(v.min() / np.median(v))


def spectrum_records(rows, group="criterion 3"):
    """Sign, scaling and decay checks over a scaling_report (at least two radii)."""
    g = group
    mu1 = np.array([r.mu1 for r in rows])
    out = [
        le("max mu1 < 0", float(mu1.max()), 0.0, "spectrum: negative eigenvalue", group=g),
        le("mu1 variation over the last two R", abs(mu1[-1] - mu1[-2]) / abs(mu1[-1]), 0.02,
           "spectrum: negative eigenvalue", group=g),
    ]
    for name, vals, anchor in (("mu2 R^4", [r.mu2R4 for r in rows], "spectrum: second eigenvalue ~ R^-4"),
                               ("mu3 R^3", [r.mu3R3 for r in rows], "spectrum: third eigenvalue ~ R^-3")):
        out.append(Record(f"{name} positive", bool(min(vals) > 0), float(min(vals)), 0.0, 0.0,
                          anchor, g))
        out.append(Record(f"{name} min/median", bool(_min_over_median(vals) >= 0.3),
                          _min_over_median(vals), 0.3, 0.0, anchor, g))
    # the R -> infinity limit of psi2 is LambdaQ / 2, which fixes the scale
    r = np.linspace(0, 40, 4001)
    limit = float(np.max(np.abs(pf.eval_LambdaQ(r) / 2) * (1 + r) ** 4))
    out.append(le("sup psi2 (1+r)^4 across R", max(r_.psi2_weighted_sup for r_ in rows),
                  1.5 * limit, "spectrum: second eigenfunction decay", group=g))
    return out


def criterion_3(quick=False):
    Rs, n_per_R = ((10, 20, 40), 50) if quick else ((10, 20, 40, 80), 100)
    return spectrum_records(sp.scaling_report(Rs, n_per_R))


def criterion_4(beta=0.75, quick=False, log_base="t"):
    """Monotone datum against the main term; ``log_base='t'`` is the literal form."""
    d = ht.build_theta0(beta)
    rep = ht.monotone_check(d, MONOTONE_TIMES, log_base=log_base)
    g = "criterion 4"
    out = [inside(f"theta(0,t) t (log t)^beta / A1 at t={row_t:g}", row.ratio_to_A1, 0.7, 1.3,
                  "heat tail: monotone main term", group=g)
           for row_t, row in zip(MONOTONE_TIMES, rep.rows)]
    # bounded: the deviation must not grow in proportion to log t; allow the
    # square root of the log t growth over the sampled range
    dev = np.abs([row.deviation_times_logt for row in rep.rows])
    growth = float(np.sqrt(np.log(MONOTONE_TIMES[-1]) / np.log(MONOTONE_TIMES[0])))
    out.append(le("growth of |deviation| log t", float(dev.max() / dev.min()), growth,
                  "heat tail: error shape", group=g))
    ts = np.geomspace(1e3, 1e10, 8 if quick else 29)
    worst = max(abs(ht.theta_origin(d, t).value) / (2 * ht.A1 / (t * np.log(t) ** beta)) for t in ts)
    out.append(le("|theta(0,t)| / (2 A1 / (t (log t)^beta))", worst, 1.0,
                  "heat tail: global envelope", group=g))
    return out


def window_reports(beta=0.75, windows=(1, 2, 3), samples=8):
    d = ht.build_Theta0(beta, ht.modest_schedule())
    return [ht.window_check(d, j, samples=samples) for j in windows]


def criterion_5(beta=0.75, quick=False, windows=(1, 2, 3), reports=None):
    if reports is None:
        reports = window_reports(beta, windows, 4 if quick else 8)
    out = []
    for rep in reports:
        j = rep.j
        worst = min(rep.expected_sign * r.theta for r in rep.rows)
        out.append(Record(f"sign (-1)^j on window j={j}", rep.sign_ok, float(worst), 0.0, 0.0,
                          "heat tail: window signs", "criterion 5"))
    return out


DUHAMEL_CASES = ([(g, q, "inner") for g in (1.0, 2.0) for q in (-1.0, 0.0, 1.0)]
                 + [(2.0, q, "outer") for q in (-1.0, 0.0)])


def duhamel_records(cases, ts, xis, t0s=(10.0, 20.0), rtol=1e-6, group="criterion 6"):
    """Spread of C_emp over (t, t0) at each fixed xi; returns (records, rows)."""
    out, rows = [], []
    for gamma, q, region in cases:
        for xi in xis:
            c = []
            for t0 in t0s:
                f = du.ForcingSpec(gamma, q, region=region, t0=t0)
                part = du.bound_report(f, ts, [xi], rtol=rtol)
                rows += part
                c += [r.Cemp for r in part]
            s = du.spread(c)
            out.append(Record(f"C_emp spread gamma={gamma:g} q={q:g} {region} xi={xi:g}",
                              bool(s < 2.0), s, 2.0, 0.0, f"Duhamel: {region} forcing bound", group))
    return out, rows


def criterion_6(quick=False):
    ts = (1e4, 1e5) if quick else (1e4, 10**4.5, 1e5)
    xis = (0.0, 2.0) if quick else (0.0, 0.5, 2.0)
    return duhamel_records(DUHAMEL_CASES, ts, xis)[0]


def lambda_verdicts(n1=16, beta=0.75, jmax=5, d_choice="zero", seed=0, gap="envelope",
                    C1=1.0, beta_prime=1.2, plus_form="double"):
    sched = make_schedule(n1, beta, jmax, plus_form=plus_form)
    rate = sd.PiecewiseRate(beta, ht.q1_of(beta), C1, beta_prime, d_choice, gap, seed)
    traj = sd.integrate_piecewise(sched, rate)
    vs = (sd.check_scaling_bounds(traj) + sd.check_telescoping(traj) + sd.check_gap_bounds(traj)
          + sd.check_sign_identity(traj))
    return traj, vs


def criterion_7(beta=0.75, quick=False):
    out = []
    runs = [("zero", None), ("envelope+", None), ("envelope-", None)]
    runs += [("random", s) for s in range(5)]
    for d, seed in runs:
        _, vs = lambda_verdicts(16, beta, 5, d, 0 if seed is None else seed)
        tag = d if seed is None else f"random seed={seed}"
        out += [from_verdict(v, prefix=f"[D={tag}] ", group="criterion 7") for v in vs]
    return out


def criterion_8(beta_prime=1.2, quick=False):
    psi2 = sp.eig(sp.discretize(20.0, 2000 if quick else 4000), 2)[1]
    W = sd.SyntheticOuterField(beta_prime)
    ts = np.geomspace(1e4, 1e5, 5)
    C = [abs(sd.modulation_rhs(W, 1.0, t, psi2, 20.0)) * t * np.log(t) ** beta_prime for t in ts]
    return [Record("modulation constant spread over a decade of t", bool(max(C) / min(C) < 2.0),
                   float(max(C) / min(C)), 2.0, 0.0, "modulation: outer-field bound", "criterion 8")]


def _scaled_Q(cfg, lam, amp=1.0):
    return amp * ps.ground_state(lam, cfg).values


def criterion_9(beta=0.75, quick=False):
    g = "criterion 9"
    out = []
    # energy on three configurations; 1e-13 relative covers summation rounding
    for amp, nonlinear in ((0.5, True), (1.0, False), (-0.7, True)):
        cfg = ps.SimConfig(t_start=0.0, horizon=5.0, r_max=100, nonlinear=nonlinear, rtol=1e-5)
        E = ps.run(cfg, _scaled_Q(cfg, 1.0, amp)).energy
        rise = float(np.max(np.diff(E) / np.abs(E[:-1])))
        out.append(le(f"max relative energy change amp={amp} nonlinear={nonlinear}", rise, 1e-13,
                      "PDE: energy dissipation", group=g))
    d = ht.build_theta0(beta)
    cfg = ps.SimConfig(h0=0.05, t_start=10.0, horizon=90.0, nonlinear=False, rtol=1e-7)
    res = ps.run(cfg, ps.tabulate_heat(d, 10.0, ps.make_grid(cfg).centers))
    errs = []
    for t in (20.0, 50.0, 100.0):
        s = res.states[int(np.argmin(np.abs(res.times - t)))]
        errs.append(abs(s.u0 / ht.theta_origin(d, s.t).value - 1))
    out.append(le("pure heat vs quadrature at the origin", max(errs), 1e-3,
                  "PDE: heat control", group=g))
    T, vals = 5.0, {}
    for f in (1, 2):
        for lam in (1.0, 2.0):
            c = ps.SimConfig(t_start=0.0, horizon=lam**2 * T, h0=0.05 / f, delta=0.04 / f,
                             rtol=1e-7, r_max=200)
            vals[f, lam] = lam**2 * ps.run(c, _scaled_Q(c, lam, 0.5)).final.u0
    mis1, mis2 = abs(vals[1, 1.0] - vals[1, 2.0]), abs(vals[2, 1.0] - vals[2, 2.0])
    disc = abs(vals[1, 1.0] - vals[2, 1.0])
    out.append(le("scaling mismatch vs discretization error", mis1, disc,
                  "PDE: scaling covariance", group=g))
    out.append(le("scaling mismatch after refinement", mis2, mis1,
                  "PDE: scaling covariance", group=g))
    base = ps.SimConfig(h0=0.1, delta=0.04)
    sups = []
    for f in (1, 2, 4):
        c = base.refined(f) if f > 1 else base
        Q = _scaled_Q(c, 1.0)
        sups.append(ps.residual(Q, Q, 1.0, c).inner)
    order = float(np.min(ps.observed_order(sups)))
    out.append(Record("stationary residual observed order", bool(order >= 1.7), order, 1.7, 0.0,
                      "PDE: stationary residual order", g))
    return out


DEMO_CONFIG = ps.SimConfig(t_start=1e4, horizon=100.0, kappa=0.05, rtol=1e-7)


def demo_data(beta=0.75):
    return [("negative b", ht.PiecewiseRadialDatum(beta, amplitude=-1.0)),
            ("positive b", ht.PiecewiseRadialDatum(beta, amplitude=1.0))]


def demo_records(rep):
    out = []
    for tr in rep.trends:
        out.append(Record(f"trend sign agreement, {tr.label} ({tr.steps} steps)", tr.passed,
                          tr.agree, 0.9, 0.0, "oscillation demo: trend sign", "criterion 10"))
    if rep.control is not None:
        out.append(le("control heat run at the origin", rep.control.rel_error, 1e-3,
                      "oscillation demo: heat control", group="criterion 10"))
    return out


def criterion_10(beta=0.75, quick=False):
    return demo_records(ps.oscillation_demo(DEMO_CONFIG, demo_data(beta)))


def all_criteria(beta=0.75, quick=False):
    """Yield (number, records) for every criterion, in order."""
    yield 1, criterion_1(quick)
    yield 2, criterion_2(quick)
    yield 3, criterion_3(quick)
    yield 4, criterion_4(beta, quick)
    yield 5, criterion_5(beta, quick)
    yield 6, criterion_6(quick)
    yield 7, criterion_7(beta, quick)
    yield 8, criterion_8(1.2, quick)
    yield 9, criterion_9(beta, quick)
    yield 10, criterion_10(beta, quick)
