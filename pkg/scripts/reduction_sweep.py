"""Reduction count n and certified Q / L^2 for every damped scheme up to M_max.

    python3 scripts/reduction_sweep.py --N 2 --M-max 128 > sweep.csv

The last line reports the mean and largest n.
"""

import argparse
import sys
import time

import numpy as np

from frkc.scheme import DEFAULT_NU0, build_scheme


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--N", type=int, default=2)
    parser.add_argument("--M-max", type=int, default=128)
    parser.add_argument("--nu0", type=float, default=DEFAULT_NU0)
    args = parser.parse_args(argv)
    out = sys.stdout
    out.write("M,L,beta,beta_bar,n,Q_over_L2\n")
    ns = []
    start = time.perf_counter()
    for M in range(1, args.M_max + 1):
        sc = build_scheme(args.N, M, args.nu0)
        ns.append(sc.n_reduction)
        out.write(f"{M},{sc.degree},{sc.beta:.10g},{sc.beta_bar:.10g},{sc.n_reduction},"
                  f"{sc.Q_realized / sc.degree**2:.4f}\n")
        out.flush()
    out.write(f"# mean n {np.mean(ns):.4f}, max n {max(ns)}, {time.perf_counter() - start:.1f} s\n")


if __name__ == "__main__":
    main()
