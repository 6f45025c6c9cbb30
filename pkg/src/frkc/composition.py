"""Fourth-order schemes by Butcher composition.

All but four steps of an ordered ``N = 4`` scheme form an explicit
Runge-Kutta prefix made of plain Euler steps. A four-stage finishing tableau
is then solved for so that the composition (prefix, then finishing) has the
elementary weights of a fourth-order method on all eight rooted trees with
at most four nodes.

The prefix steps are complex, so its elementary weights on the non-tall
trees are complex too; the finishing tableau is solved over the complex
numbers and the composed weights come out real and exact.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .integrator import StepFailure
from .polynomial import ConstructionError
from .scheme import DEFAULT_NU0, build_scheme


class RootedTree(enum.Enum):
    """The rooted trees with at most four nodes, in bracket notation."""

    t1 = "t"
    t2 = "[t]"
    t3a = "[t,t]"
    t3b = "[[t]]"
    t4a = "[t,t,t]"
    t4b = "[t,[t]]"
    t4c = "[[t,t]]"
    t4d = "[[[t]]]"

    @property
    def order(self) -> int:
        # every leaf is a "t" and every internal node opens a bracket
        return self.value.count("t") + self.value.count("[")

    @property
    def density(self) -> int:
        """gamma(t): the order condition is ``Phi(t) = 1 / gamma(t)``."""
        return _DENSITY[self]


_DENSITY = {
    RootedTree.t1: 1,
    RootedTree.t2: 2,
    RootedTree.t3a: 3,
    RootedTree.t3b: 6,
    RootedTree.t4a: 4,
    RootedTree.t4b: 8,
    RootedTree.t4c: 12,
    RootedTree.t4d: 24,
}

TREES = tuple(RootedTree)

TreeWeights = Mapping[RootedTree, complex]


def order_targets() -> dict:
    return {t: 1.0 / t.density for t in TREES}


@dataclass(frozen=True)
class ButcherTableau:
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A)
        if A.shape != (len(self.b), len(self.b)):
            raise ValueError("A must be s x s for s weights")
        if np.any(np.triu(A) != 0):
            raise ValueError("tableau must be explicit (strictly lower triangular)")

    @property
    def stages(self) -> int:
        return len(self.b)

    @property
    def c(self) -> np.ndarray:
        return np.asarray(self.A).sum(axis=1)

    def stability_function(self, z):
        """``R(z) = 1 + z b^T (I - z A)^{-1} 1``."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        s = self.stages
        out = np.empty(z.shape, dtype=complex)
        for k, zk in enumerate(z.flat):
            out.flat[k] = 1.0 + zk * self.b @ np.linalg.solve(np.eye(s) - zk * self.A, np.ones(s))
        return out


def euler_prefix_tableau(a) -> ButcherTableau:
    """Tableau of consecutive Euler steps: row ``i`` is ``(a_1 .. a_{i-1}, 0 ..)``, weights ``a``."""
    a = np.asarray(a)
    s = len(a)
    A = np.tril(np.broadcast_to(a, (s, s)), k=-1)
    return ButcherTableau(A=A, b=a.copy())


def elementary_weights(tab: ButcherTableau) -> dict:
    """``Phi(t)`` for the eight trees (``Phi(t) = 1/gamma(t)`` for a fourth-order method)."""
    A, b = np.asarray(tab.A), np.asarray(tab.b)
    if tab.stages == 0:
        return {t: 0.0 for t in TREES}
    c = A.sum(axis=1)
    Ac = A @ c
    return {
        RootedTree.t1: b.sum(),
        RootedTree.t2: b @ c,
        RootedTree.t3a: b @ c**2,
        RootedTree.t3b: b @ Ac,
        RootedTree.t4a: b @ c**3,
        RootedTree.t4b: b @ (c * Ac),
        RootedTree.t4c: b @ (A @ c**2),
        RootedTree.t4d: b @ (A @ Ac),
    }


def compose_weights(p: TreeWeights, q: TreeWeights) -> dict:
    """Weights of "``p`` then ``q``" from the weights of the two parts."""
    T = RootedTree
    B = p[T.t1]
    return {
        T.t1: B + q[T.t1],
        T.t2: p[T.t2] + B * q[T.t1] + q[T.t2],
        T.t3a: p[T.t3a] + B**2 * q[T.t1] + 2 * B * q[T.t2] + q[T.t3a],
        T.t3b: p[T.t3b] + p[T.t2] * q[T.t1] + B * q[T.t2] + q[T.t3b],
        T.t4a: p[T.t4a] + B**3 * q[T.t1] + 3 * B**2 * q[T.t2] + 3 * B * q[T.t3a] + q[T.t4a],
        T.t4b: (p[T.t4b] + B * p[T.t2] * q[T.t1] + (B**2 + p[T.t2]) * q[T.t2]
                + B * (q[T.t3a] + q[T.t3b]) + q[T.t4b]),
        T.t4c: p[T.t4c] + p[T.t3a] * q[T.t1] + B**2 * q[T.t2] + 2 * B * q[T.t3b] + q[T.t4c],
        T.t4d: p[T.t4d] + p[T.t3b] * q[T.t1] + p[T.t2] * q[T.t2] + B * q[T.t3b] + q[T.t4d],
    }


def compose_tableaux(first: ButcherTableau, second: ButcherTableau) -> ButcherTableau:
    """Single tableau that runs ``first`` and then ``second``."""
    s1, s2 = first.stages, second.stages
    dtype = np.result_type(first.A, second.A, first.b, second.b)
    A = np.zeros((s1 + s2, s1 + s2), dtype=dtype)
    A[:s1, :s1] = first.A
    A[s1:, :s1] = first.b
    A[s1:, s1:] = second.A
    return ButcherTableau(A=A, b=np.concatenate((first.b, second.b)).astype(dtype))


# classical 3/8 rule, the starting point of the finishing solve
_RULE38_A = np.array([[0, 0, 0, 0], [1 / 3, 0, 0, 0], [-1 / 3, 1, 0, 0], [1, -1, 1, 0]], dtype=float)
_RULE38_B = np.array([1, 3, 3, 1], dtype=float) / 8


def _finishing_tableau(x, span):
    # x = (a32, a41, a42, a43, b1, b2, b3, b4); c2, c3 pinned at span/3, 2 span/3
    a32, a41, a42, a43 = x[:4]
    A = np.zeros((4, 4), dtype=complex)
    A[1, 0] = span / 3.0
    A[2, 0], A[2, 1] = 2.0 * span / 3.0 - a32, a32
    A[3, :3] = a41, a42, a43
    return ButcherTableau(A=A, b=np.array(x[4:], dtype=complex))


def composition_residuals(p: TreeWeights, finishing: ButcherTableau) -> np.ndarray:
    """Composed weights minus the fourth-order targets, one entry per tree."""
    w = compose_weights(p, elementary_weights(finishing))
    return np.array([w[t] - 1.0 / t.density for t in TREES], dtype=complex)


def _newton(p, x, span, maxiter, tol):
    def F(y):
        return composition_residuals(p, _finishing_tableau(y, span))

    r = F(x)
    for _ in range(maxiter):
        if np.max(np.abs(r)) < tol:
            return x, r
        # the residuals are polynomial in x, so central differences are near-exact
        h = 1e-6 * (1.0 + np.abs(x))
        J = np.empty((8, 8), dtype=complex)
        for j in range(8):
            e = np.zeros(8, dtype=complex)
            e[j] = h[j]
            J[:, j] = (F(x + e) - F(x - e)) / (2.0 * h[j])
        try:
            dx = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            return x, r
        norm0 = np.max(np.abs(r))
        step = 1.0
        while step > 1e-4:
            trial = x + step * dx
            r_trial = F(trial)
            if np.max(np.abs(r_trial)) < norm0 or step <= 1.0 / 64:
                break
            step /= 2.0
        x, r = trial, r_trial
    return x, r


def finishing_targets(prefix_weights: TreeWeights) -> dict:
    """Weights the finishing tableau needs so that the composition is fourth order.

    The composition law is triangular in the finishing weights, so they
    follow by forward substitution.
    """
    T = RootedTree
    p = {t: complex(v) for t, v in prefix_weights.items()}
    B = p[T.t1]
    q = {T.t1: 1.0 - B}
    q[T.t2] = 1 / 2 - p[T.t2] - B * q[T.t1]
    q[T.t3a] = 1 / 3 - p[T.t3a] - B**2 * q[T.t1] - 2 * B * q[T.t2]
    q[T.t3b] = 1 / 6 - p[T.t3b] - p[T.t2] * q[T.t1] - B * q[T.t2]
    q[T.t4a] = 1 / 4 - p[T.t4a] - B**3 * q[T.t1] - 3 * B**2 * q[T.t2] - 3 * B * q[T.t3a]
    q[T.t4b] = (1 / 8 - p[T.t4b] - B * p[T.t2] * q[T.t1] - (B**2 + p[T.t2]) * q[T.t2]
                - B * (q[T.t3a] + q[T.t3b]))
    q[T.t4c] = 1 / 12 - p[T.t4c] - p[T.t3a] * q[T.t1] - B**2 * q[T.t2] - 2 * B * q[T.t3b]
    q[T.t4d] = 1 / 24 - p[T.t4d] - p[T.t3b] * q[T.t1] - p[T.t2] * q[T.t2] - B * q[T.t3b]
    return q


def _direct_finishing(q, span):
    """Four-stage tableau with weights ``q`` and ``c2, c3 = span/3, 2 span/3``.

    With ``c2`` and ``c3`` fixed the conditions decouple: ``b4 a43`` and
    ``a32`` are fixed by the two deepest trees, ``c4`` then solves a linear
    equation, and ``b`` is a Vandermonde solve.
    """
    T = RootedTree
    c2, c3 = span / 3.0, 2.0 * span / 3.0
    m = np.array([q[T.t1], q[T.t2], q[T.t3a], q[T.t4a]])
    b4a43 = (q[T.t4c] - c2 * q[T.t3b]) / (c3 * (c3 - c2))
    a32 = q[T.t4d] / (c2 * b4a43)
    kappa = a32 * c2 / (c3 * (c3 - c2))
    c4 = (q[T.t4b] - kappa * (m[3] - c2 * m[2])) / (q[T.t3b] - kappa * (m[2] - c2 * m[1]))
    nodes = np.array([0.0, c2, c3, c4])
    b = np.linalg.solve(np.vander(nodes, 4, increasing=True).T, m)
    v = (q[T.t4b] - q[T.t3b] * c3) / (b[3] * (c4 - c3))  # (A c)_4
    a43 = b4a43 / b[3]
    a42 = (v - a43 * c3) / c2
    a41 = c4 - a42 - a43
    return np.array([a32, a41, a42, a43, *b], dtype=complex)


def solve_finishing(prefix_weights: TreeWeights, maxiter: int = 60, tol: float = 1e-13,
                    retries: int = 8) -> ButcherTableau:
    """Four-stage tableau completing ``prefix_weights`` to fourth order.

    Abscissae two and three are pinned at one and two thirds of the remaining
    interval ``1 - Phi_prefix(t1)``. The remaining eight entries come from the
    decoupled closed form and are polished by damped Newton on the full
    composed conditions. If that fails, Newton restarts from the 3/8 rule
    scaled to the interval, then from perturbed copies of it.
    """
    span = 1.0 - complex(prefix_weights[RootedTree.t1])
    rule38 = span * np.concatenate(([_RULE38_A[2, 1]], _RULE38_A[3, :3], _RULE38_B)).astype(complex)
    starts = []
    try:
        with np.errstate(divide="ignore", invalid="ignore"):
            direct = _direct_finishing(finishing_targets(prefix_weights), span)
        if np.all(np.isfinite(direct)):
            starts.append(direct)
    except (ZeroDivisionError, np.linalg.LinAlgError):
        pass
    rng = np.random.default_rng(0)
    starts.append(rule38)
    starts += [rule38 * (1.0 + 0.2 * rng.standard_normal(8)) for _ in range(retries)]
    best = None
    for x0 in starts:
        x, r = _newton(prefix_weights, x0, span, maxiter, tol)
        res = float(np.max(np.abs(r)))
        if best is None or res < best:
            best = res
        if res < 10 * tol:
            return _finishing_tableau(x, span)
    raise ConstructionError(f"finishing tableau not found; best residual {best:.3e} after {len(starts)} starts")


@dataclass(frozen=True)
class FRKC4Scheme:
    """Euler-step prefix plus four finishing stages; ``L`` derivative evaluations per step."""

    index: int
    prefix: np.ndarray
    finishing: ButcherTableau
    beta_bar: float

    @property
    def degree(self) -> int:
        return len(self.prefix) + 4

    def tableau(self) -> ButcherTableau:
        return compose_tableaux(euler_prefix_tableau(self.prefix), self.finishing)

    def residuals(self) -> np.ndarray:
        return composition_residuals(elementary_weights(euler_prefix_tableau(self.prefix)), self.finishing)


def split_prefix(a) -> tuple[np.ndarray, np.ndarray]:
    """Split ordered steps into the Euler prefix and the four withheld steps.

    The four largest steps (two conjugate pairs) are withheld; the rest keep
    their order. Small prefix steps leave only small defects on the
    non-tall trees, which keeps the finishing coefficients of order one.
    """
    a = np.asarray(a)
    if len(a) < 4:
        raise ValueError("need at least four steps")
    withheld = np.sort(np.argsort(-np.abs(a), kind="stable")[:4])
    keep = np.setdiff1d(np.arange(len(a)), withheld)
    return a[keep].copy(), a[withheld].copy()


def build_frkc4(M: int, nu0: float = DEFAULT_NU0) -> FRKC4Scheme:
    """FRKC4 from the ordered ``N = 4`` scheme: ``L - 4`` Euler steps plus a solved four-stage finish."""
    base = build_scheme(4, M, nu0)
    prefix, _ = split_prefix(base.a)
    finishing = solve_finishing(elementary_weights(euler_prefix_tableau(prefix)))
    return FRKC4Scheme(index=M, prefix=prefix, finishing=finishing, beta_bar=base.beta_bar)


def frkc4_step(rhs, w, t: float, T: float, prefix, finishing: ButcherTableau):
    """One composed fourth-order step (real part of the complex result)."""
    W = np.asarray(w, dtype=complex)
    c = 0.0
    for a in prefix:
        W = W + (T * a) * np.asarray(rhs(t + T * c, W))
        c += a
    A, b, cf = finishing.A, finishing.b, finishing.c
    K = []
    for i in range(4):
        Y = W
        for j in range(i):
            Y = Y + (T * A[i, j]) * K[j]
        K.append(np.asarray(rhs(t + T * (c + cf[i]), Y)))
    for i in range(4):
        W = W + (T * b[i]) * K[i]
    if not np.all(np.isfinite(W)):
        raise StepFailure("non-finite stage value")
    return W.real.copy()
