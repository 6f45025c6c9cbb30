"""Chebyshev-sum stability polynomials and their roots.

The stability polynomial of rank ``N`` and index ``M`` (``L = N*M`` stages)
is written in the shifted Chebyshev argument ``w = 1 + z / (M**2 * alpha)`` as

    B(w) = d_0 + 2 * sum_{k=1}^{N} d_k C_{kM}(w),

with the weights ``d_k`` fixed by the linear order conditions at ``z = 0``.
Because ``C_{kM} = C_k o C_M`` the polynomial is a degree-``N`` polynomial
``P`` of ``u = C_M(w)``, which is how it is evaluated here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as npcheb

SUPPORTED_ORDERS = (1, 2, 4)

# |R| may exceed one by this much before a point counts as unstable.
STABILITY_TOL = 1e-12

# successive alpha search brackets; the last covers order 4 at large M
BRACKETS = ((0.1, 1.0), (0.01, 2.0), (0.01, 4.0))


class ConstructionError(RuntimeError):
    """Raised when a scheme cannot be generated for the requested parameters."""


@dataclass(frozen=True)
class StabilityPolynomial:
    order: int
    index: int
    d: np.ndarray
    alpha: float
    beta: float = 0.0

    @property
    def degree(self) -> int:
        return self.order * self.index

    @property
    def scale(self) -> float:
        """Factor ``M**2 * alpha`` mapping ``z`` onto the Chebyshev argument."""
        return self.index**2 * self.alpha

    def chebyshev_coefficients(self) -> np.ndarray:
        """Coefficients of ``B`` in the basis ``C_0 ... C_L``."""
        c = np.zeros(self.degree + 1)
        c[0] = self.d[0]
        for k in range(1, self.order + 1):
            c[k * self.index] = 2.0 * self.d[k]
        return c

    def reduced_coefficients(self) -> np.ndarray:
        """Coefficients of ``P`` (with ``B = P o C_M``) in the Chebyshev basis."""
        return np.concatenate(([self.d[0]], 2.0 * np.asarray(self.d[1:])))

    def eval_w(self, w):
        return npcheb.chebval(chebyshev_eval(self.index, w), self.reduced_coefficients())

    def __call__(self, z):
        return self.eval_w(1.0 + np.asarray(z) / self.scale)


@dataclass(frozen=True)
class ComplexRootSet:
    roots: np.ndarray
    # index into ``reduced_roots`` naming the root of P each zeta maps onto
    group: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    reduced_roots: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))

    def __len__(self) -> int:
        return len(self.roots)


def chebyshev_eval(p: int, x):
    """Chebyshev polynomial of the first kind ``C_p(x)`` by three-term recurrence."""
    if p < 0:
        raise ValueError("p must be non-negative")
    x = np.asarray(x)
    c_prev = np.ones_like(x)
    if p == 0:
        return c_prev if c_prev.ndim else c_prev[()]
    c = x.copy()
    for _ in range(p - 1):
        c_prev, c = c, 2.0 * x * c - c_prev
    return c if c.ndim else c[()]


def chebyshev_derivative_at_one(p: int, n: int) -> float:
    """``C_p^{(n)}(1) = prod_{j<n} (p^2 - j^2) / (2j + 1)``."""
    if p < 0 or n < 0:
        raise ValueError("p and n must be non-negative")
    value = 1.0
    for j in range(n):
        value *= (p * p - j * j) / (2 * j + 1)
    return value


def solve_d_coefficients(N: int, M: int, alpha: float) -> np.ndarray:
    """Chebyshev weights ``d_0..d_N`` satisfying the order conditions.

    Solves ``B(1) = 1`` and ``B^{(n)}(1) = (M^2 alpha)^n`` for ``n = 1..N``.
    Row ``n`` is divided by ``M^(2n)`` to keep the system balanced for large ``M``.
    """
    if N not in SUPPORTED_ORDERS:
        raise ValueError(f"order N={N} not supported, expected one of {SUPPORTED_ORDERS}")
    if M < 1:
        raise ValueError("M must be >= 1")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    A = np.zeros((N + 1, N + 1))
    rhs = np.empty(N + 1)
    for n in range(N + 1):
        row_scale = float(M) ** (2 * n)
        A[n, 0] = 1.0 if n == 0 else 0.0
        for k in range(1, N + 1):
            A[n, k] = 2.0 * chebyshev_derivative_at_one(k * M, n) / row_scale
        rhs[n] = alpha**n
    try:
        return np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise ConstructionError(f"order-condition system singular at N={N}, M={M}, alpha={alpha}") from exc


def stability_extent(R, x_max: float, n_samples: int, rtol: float = 1e-10) -> float:
    """Largest ``b <= x_max`` with ``|R(x)| <= 1`` on ``[-b, 0]``.

    ``R`` is evaluated on a uniform scan; local maxima of ``|R|`` between
    samples are refined before deciding where the interval first fails, then
    the crossing is bisected to relative tolerance ``rtol``.
    """
    x = -np.linspace(0.0, x_max, n_samples + 1)
    mag = np.abs(R(x))
    bad = mag > 1.0 + STABILITY_TOL
    # refine interior peaks that the scan may straddle
    peaks = np.flatnonzero((mag[1:-1] >= mag[:-2]) & (mag[1:-1] >= mag[2:]) & ~bad[1:-1]) + 1
    if len(peaks):
        dx = x_max / n_samples
        xp, vp = _refine_peaks(R, x[peaks] - dx, x[peaks] + dx)
        hit = vp > 1.0 + STABILITY_TOL
        # a refined peak that fails stands in for its sample
        bad[peaks[hit]] = True
        x[peaks[hit]] = xp[hit]
    if not bad.any():
        return float(x_max)
    first = int(np.argmax(bad))
    if first == 1 or (first == 0):
        return 0.0
    lo, hi = x[first - 1], x[first]  # lo stable, hi unstable (hi < lo <= 0)
    while abs(hi - lo) > rtol * abs(lo):
        mid = 0.5 * (lo + hi)
        if abs(R(mid)) > 1.0 + STABILITY_TOL:
            hi = mid
        else:
            lo = mid
    return float(-lo)


def _refine_peaks(R, lo, hi, iters: int = 40):
    """Vectorised golden-section maximisation of ``|R|`` on each ``[lo_i, hi_i]``."""
    g = (math.sqrt(5.0) - 1.0) / 2.0
    lo, hi = lo.copy(), hi.copy()
    x1 = hi - g * (hi - lo)
    x2 = lo + g * (hi - lo)
    f1, f2 = np.abs(R(x1)), np.abs(R(x2))
    for _ in range(iters):
        left = f1 > f2
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        new_x1 = np.where(left, hi - g * (hi - lo), x2)
        new_x2 = np.where(left, x1, lo + g * (hi - lo))
        new_f1 = np.where(left, np.nan, f2)
        new_f2 = np.where(left, f1, np.nan)
        x1, x2 = new_x1, new_x2
        # one fresh evaluation per interval, spent on whichever point moved
        fresh = np.abs(R(np.where(left, x1, x2)))
        f1 = np.where(left, fresh, new_f1)
        f2 = np.where(left, new_f2, fresh)
    take1 = f1 > f2
    return np.where(take1, x1, x2), np.where(take1, f1, f2)


def find_beta(poly: StabilityPolynomial) -> float:
    """Real stability extent of a candidate polynomial (``d`` and ``alpha`` set)."""
    L = poly.degree
    # beyond w = -2 every C_{kM} has left the stable band
    x_max = 3.0 * poly.scale
    return stability_extent(poly, x_max, 20 * L)


def _make(N: int, M: int, alpha: float) -> StabilityPolynomial:
    return StabilityPolynomial(order=N, index=M, d=solve_d_coefficients(N, M, alpha), alpha=alpha)


def _beta_of(N: int, M: int, alpha: float) -> float:
    try:
        return find_beta(_make(N, M, alpha))
    except ConstructionError:
        return 0.0


def _golden_max(f, lo: float, hi: float, rtol: float):
    g = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - g * (hi - lo)
    x2 = lo + g * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > rtol * abs(x1):
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - g * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + g * (hi - lo)
            f2 = f(x2)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def maximize_alpha(N: int, M: int, rtol: float = 1e-10) -> StabilityPolynomial:
    """Order-``N`` polynomial whose argument scale maximises the real stability extent."""
    if N not in SUPPORTED_ORDERS:
        raise ValueError(f"order N={N} not supported, expected one of {SUPPORTED_ORDERS}")

    def objective(alpha):
        return _beta_of(N, M, alpha)

    for lo, hi in BRACKETS:
        alpha, beta = _golden_max(objective, lo, hi, rtol)
        # a maximiser pressed against the bracket edge means the bracket is too small,
        # unless beta does not depend on alpha at all (M = 1)
        at_edge = min(alpha - lo, hi - alpha) < 1e-6 * hi
        flat = abs(objective(lo) - beta) <= 1e-9 * beta and abs(objective(hi) - beta) <= 1e-9 * beta
        if beta > 0 and (not at_edge or flat):
            break
    else:
        raise ConstructionError(f"no interior maximum of beta(alpha) for N={N}, M={M} in {BRACKETS[-1]}")
    poly = _make(N, M, alpha)
    return StabilityPolynomial(order=N, index=M, d=poly.d, alpha=alpha, beta=beta)


def _reduced_roots(poly: StabilityPolynomial) -> np.ndarray:
    return npcheb.chebroots(poly.reduced_coefficients()).astype(complex)


def find_roots(poly: StabilityPolynomial) -> ComplexRootSet:
    """All ``L`` roots of ``B`` from the colleague matrix, Newton-polished."""
    c = poly.chebyshev_coefficients()
    dc = npcheb.chebder(c)
    raw = np.linalg.eigvals(npcheb.chebcompanion(c))
    scale = np.max(np.abs(poly.d))

    upper = raw[raw.imag > 1e-12 * (1.0 + np.abs(raw.real))]
    real = raw[np.abs(raw.imag) <= 1e-12 * (1.0 + np.abs(raw.real))].real

    def polish(z):
        return z - npcheb.chebval(z, c) / npcheb.chebval(z, dc)

    upper = polish(upper)
    real = polish(real)
    roots = np.concatenate((real.astype(complex), upper, np.conj(upper)))
    if len(roots) != poly.degree:
        raise ConstructionError(
            f"root count {len(roots)} != degree {poly.degree}; unpaired complex eigenvalues"
        )
    order = np.lexsort((roots.imag, roots.real))
    roots = roots[order]
    resid = np.abs(poly.eval_w(roots))
    worst = int(np.argmax(resid))
    if resid[worst] > 1e-8 * scale:
        raise ConstructionError(f"root {worst} residual {resid[worst]:.3e} exceeds tolerance")

    u = _reduced_roots(poly)
    images = chebyshev_eval(poly.index, roots)
    group = np.argmin(np.abs(images[:, None] - u[None, :]), axis=1)
    return ComplexRootSet(roots=roots, group=group, reduced_roots=u)


def base_coefficients(poly: StabilityPolynomial, roots: ComplexRootSet) -> np.ndarray:
    """Complex Euler step fractions ``a_l = 1 / (M^2 alpha (1 - zeta_l))``."""
    gap = 1.0 - roots.roots
    if np.any(np.abs(gap) < 1e-12):
        raise ConstructionError("root at w = 1 makes the step fractions degenerate")
    return 1.0 / (poly.scale * gap)


def product_form(a, z):
    """Evaluate ``prod_l (1 + a_l z)`` for an array of ``z``."""
    z = np.asarray(z)
    return np.prod(1.0 + np.multiply.outer(z, np.asarray(a)), axis=-1)


def product_form_abs(a, z):
    """``|prod_l (1 + a_l z)|`` accumulated in log-magnitude so partial products cannot overflow."""
    z = np.asarray(z)
    logs = np.log(np.abs(1.0 + np.multiply.outer(z, np.asarray(a))))
    return np.exp(np.sum(logs, axis=-1))


def elementary_symmetric(a, n_max: int) -> np.ndarray:
    """``e_0 .. e_{n_max}`` of the values ``a`` (coefficients of ``prod (1 + a_l z)``)."""
    e = np.zeros(n_max + 1, dtype=complex)
    e[0] = 1.0
    for al in np.asarray(a):
        e[1:] = e[1:] + al * e[:-1]
    return e
