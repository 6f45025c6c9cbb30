"""beta / (2 L^2) against stage count for the undamped polynomials.

    python3 scripts/stability_ratio.py --M-max 64 > ratio.csv
"""

import argparse
import sys

from frkc.polynomial import maximize_alpha


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--M-max", type=int, default=32)
    parser.add_argument("--orders", type=int, nargs="+", default=[1, 2, 4])
    args = parser.parse_args(argv)
    out = sys.stdout
    out.write("N,M,L,alpha,beta,ratio\n")
    for N in args.orders:
        for M in range(1, args.M_max + 1):
            poly = maximize_alpha(N, M)
            L = poly.degree
            out.write(f"{N},{M},{L},{poly.alpha:.12g},{poly.beta:.12g},{poly.beta / (2 * L * L):.8f}\n")


if __name__ == "__main__":
    main()
