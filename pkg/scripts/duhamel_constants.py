"""Table of empirical Duhamel constants C_emp over t, t0 and xi = |x| / sqrt(t)."""
import argparse

import numpy as np

from critheat import checks
from critheat import duhamel as du


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t", default="1e4,3.16e4,1e5")
    ap.add_argument("--xi", default="0,0.5,2")
    args = ap.parse_args()
    ts = [float(x) for x in args.t.split(",")]
    xis = [float(x) for x in args.xi.split(",")]
    for gamma, q, region in checks.DUHAMEL_CASES:
        for xi in xis:
            c = {t0: [r.Cemp for r in du.bound_report(du.ForcingSpec(gamma, q, region=region, t0=t0),
                                                      ts, [xi])]
                 for t0 in (10.0, 20.0)}
            allc = c[10.0] + c[20.0]
            print(f"gamma={gamma:g} q={q:+g} {region:5s} xi={xi:<4g} "
                  f"C(t0=10)={np.round(c[10.0], 4)} C(t0=20)={np.round(c[20.0], 4)} "
                  f"spread={du.spread(allc):.3f}")


if __name__ == "__main__":
    main()
