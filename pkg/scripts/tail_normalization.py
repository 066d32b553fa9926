"""Compare theta(0, t) for the monotone datum with both main-term normalizations.

Prints the ratio to A1 / (t L^beta) and (relative deviation) * log t for
L = log t and L = log sqrt(t), and the ratio of the two (2^beta in the limit).
"""
import argparse

import numpy as np

from critheat import heat_tail as ht


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--beta", type=float, default=0.75)
    ap.add_argument("--decades", type=str, default="4,6,8,10,14,20")
    args = ap.parse_args()
    ts = [10.0 ** float(d) for d in args.decades.split(",")]
    d = ht.build_theta0(args.beta)
    lit = ht.monotone_check(d, ts, log_base="t")
    half = ht.monotone_check(d, ts, log_base="sqrt")
    print(f"{'log10 t':>8} {'ratio(log t)':>13} {'dev*log t':>10} {'ratio(log sqrt t)':>18} {'dev*log t':>10}")
    for t, a, b in zip(ts, lit.rows, half.rows):
        print(f"{np.log10(t):8.1f} {a.ratio_to_A1:13.6f} {a.deviation_times_logt:10.4f} "
              f"{b.ratio_to_A1:18.6f} {b.deviation_times_logt:10.4f}")
    print(f"2^beta = {2 ** args.beta:.6f}")


if __name__ == "__main__":
    main()
