"""Command line entry point: ``critheat <subcommand> [options]``.

Every subcommand writes its CSV artifacts and a ``verdicts.jsonl`` file to
the output directory (``--out`` > ``$CRITHEAT_OUT`` > config ``out`` >
``critheat_out``).  Exit status: 0 when every verdict passes, 1 on a failed
verdict or a module error, 2 on a usage error.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import checks
from . import duhamel as du
from . import heat_tail as ht
from . import pde_sim as ps
from . import profiles as pf
from . import scaling_dynamics as sd
from . import spectrum as sp
from .errors import CritHeatError
from .records import Record, from_verdict, le, read_config, write_jsonl

DEFAULT_OUT = "critheat_out"
ENV_OUT = "CRITHEAT_OUT"


class UsageError(Exception):
    pass


# ---- argument types -------------------------------------------------------

def float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def int_range(text):
    """'1..3' or '1,3'."""
    try:
        if ".." in text:
            a, b = text.split("..")
            return list(range(int(a), int(b) + 1))
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a range like 1..3, got {text!r}")


def boolean(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


# ---- run configuration ----------------------------------------------------

def _open(lo, hi):
    return lambda v: lo < v < hi


def _at_least(lo):
    return lambda v: v >= lo


def _positive(v):
    return v > 0


# parameter -> (predicate, message); applied to scalars and to each list entry
RULES = {
    "beta": (_open(0.5, 1.0), "beta must lie in (1/2, 1)"),
    "beta_prime": (lambda v: v > 1, "beta' must exceed 1"),
    "C1": (_at_least(0.0), "C1 must be nonnegative"),
    "n1": (_at_least(4), "n1 must be at least 4"),
    "jmax": (_at_least(2), "jmax must be at least 2"),
    "seed": (_at_least(0), "seed must be nonnegative"),
    "R": (_at_least(10.0), "spectrum radii must be at least 10"),
    "n_per_R": (_at_least(20), "n-per-R must be at least 20"),
    "r_max": (_at_least(2e3), "r-max must be at least 2e3 (T1 is checked at r = 1e3)"),
    "tol": (_open(0.0, 1e-2), "tol must lie in (0, 1e-2)"),
    "n_nodes": (_at_least(200), "n-nodes must be at least 200"),
    "windows": (lambda v: 1 <= v <= 3, "windows must lie in 1..3 (modest schedule)"),
    "samples": (_at_least(2), "samples must be at least 2"),
    "gamma": (_open(0.0, 3.0), "gamma must lie in (0, 3)"),
    "K1": (_positive, "K1 must be positive"),
    "t0": (lambda v: v > np.e, "t0 must exceed e"),
    "t": (lambda v: v > np.e, "times must exceed e"),
    "xi": (_at_least(0.0), "xi must be nonnegative"),
    "rtol": (_open(0.0, 1.0), "rtol must lie in (0, 1)"),
    "lam": (_positive, "lambda must be positive"),
    "t_start": (_at_least(0.0), "t-start must be nonnegative"),
    "horizon": (_positive, "horizon must be positive"),
    "kappa": (_open(0.0, 0.5), "kappa must lie in (0, 1/2)"),
    "h0": (_positive, "h0 must be positive"),
    "delta": (_positive, "delta must be positive"),
}


@dataclass
class RunConfig:
    """Resolved parameters of one invocation."""
    subcommand: str
    out: Path
    params: dict = field(default_factory=dict)

    def validate(self):
        for key, value in self.params.items():
            if key not in RULES or value is None:
                continue
            ok, msg = RULES[key]
            for v in value if isinstance(value, list) else [value]:
                if not ok(v):
                    raise UsageError(f"{msg} (got {key}={v!r})")
        if self.subcommand == "spectrum":
            R = self.params["R"]
            if len(R) < 2 or any(b <= a for a, b in zip(R, R[1:])):
                raise UsageError("--R needs at least two ascending radii")
        if self.subcommand == "duhamel" and len(self.params["t0"]) < 1:
            raise UsageError("--t0 needs at least one value")
        if self.subcommand == "simulate" and self.params.get("r_max") is not None:
            t_end = self.params["t_start"] + self.params["horizon"]
            if self.params["r_max"] < 20 * np.sqrt(t_end):
                raise UsageError("r-max must be at least 20 sqrt(t-start + horizon)")
        return self


def resolve_out(flag, config_value):
    if flag:
        return Path(flag)
    if os.environ.get(ENV_OUT):
        return Path(os.environ[ENV_OUT])
    if config_value:
        return Path(config_value)
    return Path(DEFAULT_OUT)


# ---- parser ---------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser():
    common = _Parser(add_help=False)
    # SUPPRESS keeps a sub-level default from clobbering a top-level flag
    common.add_argument("--config", default=argparse.SUPPRESS, help="flat key = value file")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")

    p = _Parser(prog="critheat", description=__doc__.splitlines()[0])
    p.add_argument("--config", default=None, help="flat key = value file")
    p.add_argument("--out", default=None, help="output directory")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    s = sub.add_parser("profiles", parents=[common], help="Q, LambdaQ and T1 tables")
    s.add_argument("--r-max", dest="r_max", type=float, default=2.0e4)
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--n-nodes", dest="n_nodes", type=int, default=2000)

    s = sub.add_parser("spectrum", parents=[common], help="Dirichlet spectrum scaling report")
    s.add_argument("--R", type=float_list, default=[10.0, 20.0, 40.0, 80.0])
    s.add_argument("--n-per-R", dest="n_per_R", type=int, default=100)

    s = sub.add_parser("tail", parents=[common], help="free heat evolution of the tail datum")
    s.add_argument("--datum", choices=("monotone", "oscillating"), default="monotone")
    s.add_argument("--beta", type=float, default=0.75)
    s.add_argument("--windows", type=int_range, default=[1, 2, 3])
    s.add_argument("--samples", type=int, default=8)
    s.add_argument("--log-base", dest="log_base", choices=("t", "sqrt"), default="t",
                   help="main term with log t (literal) or log sqrt(t)")

    s = sub.add_parser("duhamel", parents=[common], help="Duhamel bound constants")
    s.add_argument("--gamma", type=float, default=None, help="default: all standard cases")
    s.add_argument("--q", type=float, default=None)
    s.add_argument("--region", choices=("inner", "outer"), default="inner")
    s.add_argument("--t", type=float_list, default=[1e4, 10**4.5, 1e5])
    s.add_argument("--t0", type=float_list, default=[10.0, 20.0])
    s.add_argument("--xi", type=float_list, default=[0.0, 0.5, 2.0])
    s.add_argument("--rtol", type=float, default=1e-6)

    s = sub.add_parser("lambda", parents=[common], help="piecewise log-lambda dynamics")
    s.add_argument("--n1", type=int, default=16)
    s.add_argument("--jmax", type=int, default=5)
    s.add_argument("--beta", type=float, default=0.75)
    s.add_argument("--beta-prime", dest="beta_prime", type=float, default=1.2)
    s.add_argument("--C1", type=float, default=1.0)
    s.add_argument("--D", dest="D", choices=sd.D_CHOICES, default="zero")
    s.add_argument("--gap", choices=sd.GAP_CHOICES, default="envelope")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--plus-form", dest="plus_form", choices=("double", "single"), default="double")
    s.add_argument("--find-nbar", dest="find_nbar", type=boolean, nargs="?", const=True,
                   default=False)

    s = sub.add_parser("simulate", parents=[common], help="radial PDE run or oscillation demo")
    s.add_argument("--mode", choices=("run", "demo"), default="run")
    s.add_argument("--datum", choices=("ground", "monotone", "positive", "negative"),
                   default="ground")
    s.add_argument("--amplitude", type=float, default=0.5)
    s.add_argument("--beta", type=float, default=0.75)
    s.add_argument("--lam", type=float, default=1.0)
    s.add_argument("--t-start", dest="t_start", type=float, default=0.0)
    s.add_argument("--horizon", type=float, default=5.0)
    s.add_argument("--rtol", type=float, default=1e-5)
    s.add_argument("--kappa", type=float, default=0.25)
    s.add_argument("--h0", type=float, default=None)
    s.add_argument("--delta", type=float, default=0.02)
    s.add_argument("--r-max", dest="r_max", type=float, default=None)
    s.add_argument("--linear", type=boolean, nargs="?", const=True, default=False,
                   help="drop the |u|u term")

    s = sub.add_parser("verify-all", parents=[common], help="every acceptance criterion")
    s.add_argument("--beta", type=float, default=0.75)
    s.add_argument("--quick", type=boolean, nargs="?", const=True, default=False)
    return p


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def apply_config(parser, name, values):
    """Install config-file values as subcommand defaults, so flags still win."""
    sp_ = _subparser(parser, name)
    actions = {a.dest: a for a in sp_._actions}
    defaults = {}
    for key, raw in values.items():
        if key in ("out", "config"):
            continue
        a = actions.get(key)
        if a is None or key == "help":
            raise UsageError(f"unknown config key {key!r} for {name}")
        conv = a.type or str
        try:
            v = conv(raw)
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise UsageError(f"bad value for config key {key!r}: {exc}")
        if a.choices is not None and v not in a.choices:
            raise UsageError(f"config key {key!r} must be one of {sorted(a.choices)}")
        defaults[key] = v
    sp_.set_defaults(**defaults)


def parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg_values = read_config(args.config) if args.config else {}
    if cfg_values:
        apply_config(parser, args.subcommand, cfg_values)
        args = parser.parse_args(argv)
    params = {k: v for k, v in vars(args).items() if k not in ("subcommand", "config", "out")}
    rc = RunConfig(args.subcommand, resolve_out(args.out, cfg_values.get("out")), params)
    return rc.validate()


# ---- subcommands ----------------------------------------------------------

def run_profiles(rc):
    p = rc.params
    t1 = pf.build_T1(p["r_max"], p["tol"], p["n_nodes"])
    r = t1.grid
    pf.write_profile_csv(rc.out / "profile_Q.csv", r, pf.eval_Q(r))
    pf.write_profile_csv(rc.out / "profile_LambdaQ.csv", r, pf.eval_LambdaQ(r))
    pf.write_profile_csv(rc.out / "profile_T1.csv", r, t1.values)
    a1 = ht.A1_constant()
    return checks.profile_records(t1, group="profiles") + [
        le("A1 quadrature vs 1/8", abs(a1 - 0.125), 1e-8, "tail constant: Gaussian moment",
           group="profiles")]


def run_spectrum(rc):
    rows = sp.scaling_report(rc.params["R"], rc.params["n_per_R"])
    sp.write_report_csv(rc.out / "spectrum.csv", rows)
    return checks.spectrum_records(rows, group="spectrum")


def run_tail(rc):
    p = rc.params
    if p["datum"] == "monotone":
        rep = ht.monotone_check(ht.build_theta0(p["beta"]), checks.MONOTONE_TIMES,
                                log_base=p["log_base"])
        ht.write_window_csv(rc.out / "tail_monotone.csv", [rep])
        recs = checks.criterion_4(p["beta"], log_base=p["log_base"])
    else:
        reps = checks.window_reports(p["beta"], p["windows"], p["samples"])
        ht.write_window_csv(rc.out / "tail_windows.csv", reps)
        recs = checks.criterion_5(p["beta"], reports=reps)
    for r in recs:
        r.group = "tail"
    return recs


def run_duhamel(rc):
    p = rc.params
    if p["gamma"] is None and p["q"] is None:
        cases = checks.DUHAMEL_CASES
    elif p["gamma"] is None or p["q"] is None:
        raise UsageError("--gamma and --q go together")
    else:
        cases = [(p["gamma"], p["q"], p["region"])]
    recs, rows = checks.duhamel_records(cases, p["t"], p["xi"], p["t0"], p["rtol"],
                                        group="duhamel")
    # the CSV schema has no t0 column, so one file per t0
    for t0 in p["t0"]:
        du.write_rows_csv(rc.out / f"duhamel_t0_{t0:g}.csv", [r for r in rows if r.t0 == t0])
    return recs


def run_lambda(rc):
    p = rc.params
    traj, vs = checks.lambda_verdicts(p["n1"], p["beta"], p["jmax"], p["D"], p["seed"], p["gap"],
                                      p["C1"], p["beta_prime"], p["plus_form"])
    traj.write_csv(rc.out / "lambda_trajectory.csv")
    sd.write_verdicts_csv(rc.out / "lambda_verdicts.csv", vs)
    recs = [from_verdict(v, group="lambda") for v in vs]
    if p["find_nbar"]:
        nbar = sd.find_nbar(p["beta"], p["jmax"], p["C1"], p["beta_prime"])
        print(f"n-bar (smallest n1 with all verdicts passing): {nbar}")
        recs.append(Record("n-bar found", nbar is not None, float(nbar or np.nan), float(p["n1"]),
                           0.0, "scaling lemma: large constant", "lambda"))
    return recs


def _sim_config(p, **over):
    kw = dict(lam=p["lam"], h0=p["h0"], delta=p["delta"], t_start=p["t_start"],
              horizon=p["horizon"], rtol=p["rtol"], kappa=p["kappa"], r_max=p["r_max"],
              nonlinear=not p["linear"])
    kw.update(over)
    return ps.SimConfig(**kw)


def _initial(cfg, p):
    if p["datum"] == "ground":
        return p["amplitude"] * ps.ground_state(p["lam"], cfg).values
    if p["datum"] == "monotone":
        d = ht.build_theta0(p["beta"])
    else:
        sign = 1.0 if p["datum"] == "positive" else -1.0
        d = ht.PiecewiseRadialDatum(p["beta"], amplitude=sign * abs(p["amplitude"]))
    if cfg.t_start <= 0:
        raise UsageError("tail data need --t-start > 0")
    grid = ps.make_grid(cfg)
    theta = ps.tabulate_heat(d, cfg.t_start, grid.centers)
    b = ht.theta_origin(d, cfg.t_start).value
    return ps.assemble_ansatz(p["lam"], b, theta, cfg).values


def run_simulate(rc):
    p = rc.params
    if p["mode"] == "demo":
        cfg = replace(checks.DEMO_CONFIG, **_sim_overrides(p))
        rep = ps.oscillation_demo(cfg, checks.demo_data(p["beta"]))
        _write_demo_csv(rc.out / "demo.csv", rep)
        recs = checks.demo_records(rep)
    else:
        cfg = _sim_config(p)
        res = ps.run(cfg, _initial(cfg, p))
        res.write_csv(rc.out / "simulation.csv")
        res.snapshot_csv(rc.out / "snapshot.csv")
        E = res.energy
        rise = float(np.max(np.diff(E) / np.abs(E[:-1]))) if E.size > 1 else 0.0
        recs = [le("max relative energy change per step", rise, 1e-13, "PDE: energy dissipation"),
                Record(f"run status {res.status}", res.status == "ok", float(res.final.t),
                       cfg.t_start + cfg.horizon, 0.0, "PDE: run completed")]
    for r in recs:
        r.group = "simulate"
    return recs


_SIM_DEFAULTS = dict(lam=1.0, t_start=0.0, horizon=5.0, rtol=1e-5, kappa=0.25, h0=None,
                     delta=0.02, r_max=None, linear=False)


def _sim_overrides(p):
    """Simulation flags that differ from their defaults, as SimConfig fields."""
    over = {k: p[k] for k, v in _SIM_DEFAULTS.items() if p[k] != v}
    if "linear" in over:
        over["nonlinear"] = not over.pop("linear")
    return over


def _write_demo_csv(path, rep):
    import csv

    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "t_start", "b_sign", "settle_until", "shadow_until", "steps", "agree",
                    "mean_rate", "predicted_rate"])
        for t in rep.trends:
            w.writerow([t.label, f"{t.t_start:.17g}", t.b_sign, f"{t.settle_until:.17g}",
                        f"{t.shadow_until:.17g}", t.steps, f"{t.agree:.17g}",
                        f"{t.mean_rate:.17g}", f"{t.predicted_rate:.17g}"])


def run_verify_all(rc):
    import csv

    recs, summary = [], []
    for n, rs in checks.all_criteria(rc.params["beta"], rc.params["quick"]):
        ok = all(r.passed for r in rs)
        print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'} ({sum(r.passed for r in rs)}/{len(rs)} checks)",
              flush=True)
        summary.append((n, ok, len(rs)))
        recs += rs
    rc.out.mkdir(parents=True, exist_ok=True)
    with (rc.out / "summary.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["criterion", "pass", "checks"])
        for n, ok, k in summary:
            w.writerow([n, int(ok), k])
    return recs


RUNNERS = {
    "profiles": run_profiles,
    "spectrum": run_spectrum,
    "tail": run_tail,
    "duhamel": run_duhamel,
    "lambda": run_lambda,
    "simulate": run_simulate,
    "verify-all": run_verify_all,
}


def _report(recs, verbose):
    for r in recs:
        if verbose or not r.passed:
            tag = "PASS" if r.passed else "FAIL"
            print(f"{tag} {r.check}: lhs={r.lhs:.6g} rhs={r.rhs:.6g} [{r.anchor}]")


def dispatch(argv):
    """Run one subcommand; returns the exit status."""
    try:
        rc = parse(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except CritHeatError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        recs = RUNNERS[rc.subcommand](rc)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except CritHeatError as exc:
        print(f"error in {rc.subcommand}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    write_jsonl(rc.out / "verdicts.jsonl", recs)
    _report(recs, verbose=rc.subcommand != "verify-all")
    failed = sum(not r.passed for r in recs)
    print(f"{len(recs) - failed}/{len(recs)} verdicts pass; written to {rc.out}")
    return 0 if failed == 0 else 1


def main(argv=None):
    sys.exit(dispatch(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
