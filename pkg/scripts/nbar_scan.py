"""Smallest n1 for which every scaling-lemma and telescoping verdict passes."""
import argparse

from critheat import scaling_dynamics as sd


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--betas", default="0.6,0.75,0.85")
    ap.add_argument("--jmax", type=int, default=5)
    ap.add_argument("--C1", type=float, default=1.0)
    ap.add_argument("--beta-prime", type=float, default=1.2)
    args = ap.parse_args()
    for b in (float(x) for x in args.betas.split(",")):
        print(f"beta={b:g}  n-bar={sd.find_nbar(b, args.jmax, args.C1, args.beta_prime)}")


if __name__ == "__main__":
    main()
