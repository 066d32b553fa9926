"""Trajectories and verdicts for every D choice; writes one CSV pair per run."""
import argparse
from pathlib import Path

from critheat import checks
from critheat import scaling_dynamics as sd


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n1", type=int, default=16)
    ap.add_argument("--jmax", type=int, default=5)
    ap.add_argument("--beta", type=float, default=0.75)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--out", default="lambda_sweep")
    args = ap.parse_args()
    out = Path(args.out)
    runs = [("zero", 0), ("envelope+", 0), ("envelope-", 0)]
    runs += [("random", s) for s in range(args.seeds)]
    for d, seed in runs:
        traj, vs = checks.lambda_verdicts(args.n1, args.beta, args.jmax, d, seed)
        tag = d if d != "random" else f"random{seed}"
        traj.write_csv(out / f"trajectory_{tag}.csv")
        sd.write_verdicts_csv(out / f"verdicts_{tag}.csv", vs)
        slack = min(v.slack for v in vs if v.check.startswith("alternating"))
        print(f"D={tag:<10} pass={all(v.passed for v in vs)}  min alternating-bound slack={slack:.4g}  "
              f"log lambda(t_j^-)={[round(x, 2) for x in sd.alternation_proxy(traj)]}")


if __name__ == "__main__":
    main()
