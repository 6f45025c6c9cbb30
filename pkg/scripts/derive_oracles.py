"""Recompute the frozen reference values in tests/oracles.json.

Works in 40-digit arithmetic with mpmath and shares no code with the
package: the polynomial is assembled from Chebyshev polynomials by their
three-term recurrence, its coefficients come from Taylor expansions at the
origin, and the stability extent from a dense scan refined by root finding.

    python3 scripts/derive_oracles.py > tests/oracles.json
"""

import json
import sys

import mpmath as mp

mp.mp.dps = 40


def cheb(p, x):
    t0, t1 = mp.mpf(1), x
    if p == 0:
        return t0
    for _ in range(p - 1):
        t0, t1 = t1, 2 * x * t1 - t0
    return t1


def polynomial(N, M, alpha):
    s = mp.mpf(M) ** 2 * alpha
    basis = [lambda z, k=k: cheb(k * M, 1 + z / s) * (1 if k == 0 else 2) for k in range(N + 1)]
    taylor = [mp.taylor(f, 0, N) for f in basis]
    A = mp.matrix(N + 1, N + 1)
    rhs = mp.matrix(N + 1, 1)
    for n in range(N + 1):
        for k in range(N + 1):
            A[n, k] = taylor[k][n]
        rhs[n] = 1 / mp.factorial(n)
    d = mp.lu_solve(A, rhs)
    return lambda z: sum(d[k] * basis[k](z) for k in range(N + 1))


def beta(N, M, alpha, samples_per_unit=8):
    R = polynomial(N, M, alpha)
    x_max = 3 * M * M * alpha
    n = int(samples_per_unit * x_max) + 100
    prev = mp.mpf(0)
    for i in range(1, n + 1):
        x = -x_max * i / n
        if abs(R(x)) > 1:
            sign = 1 if R(x) > 0 else -1
            return mp.findroot(lambda y: R(y) - sign, (x, prev), solver="anderson")
        prev = x
    raise RuntimeError("no stability boundary found")


def main():
    cases = [(2, M, 1.2) for M in (2, 3, 4, 8)] + [(4, M, 1.8) for M in (1, 2, 4)] + [(1, M, 1.0) for M in (3, 7)]
    out = {"beta": [{"N": N, "M": M, "alpha": a, "beta": float(-beta(N, M, mp.mpf(a)))} for N, M, a in cases]}
    json.dump(out, sys.stdout, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
