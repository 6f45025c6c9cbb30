"""Ordering of complex Euler steps to bound internal amplification.

A factorized scheme applies its ``L`` factors ``(1 + a_l T f)`` one after the
other, so any contiguous run of factors can amplify round-off. The ordering
here sequences the steps greedily, keeping both the product of what has
been placed and the product of what remains small over the stability
interval, then certifies the worst contiguous product on a finer grid.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .polynomial import ConstructionError

REDUCTION_STEP = 1e-4  # the constant C in beta_bar = (1 - n C) beta
MAX_REDUCTIONS = 64


@dataclass(frozen=True)
class OrderedSteps:
    a_ordered: np.ndarray
    beta_bar: float
    n_reduction: int
    Q_realized: float


def q_bound(L: int) -> float:
    return 10.0 * L * L


def conjugate_split(a) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Indices of the upper-half-plane steps, their conjugate partners, and the real steps."""
    a = np.asarray(a, dtype=complex)
    is_real = np.abs(a.imag) <= 1e-13 * np.abs(a)
    upper = np.flatnonzero(~is_real & (a.imag > 0))
    lower = list(np.flatnonzero(~is_real & (a.imag < 0)))
    partners = []
    for i in upper:
        if not lower:
            raise ConstructionError(f"coefficient {i} has no conjugate partner")
        j = min(lower, key=lambda j: abs(a[j] - np.conj(a[i])))
        if abs(a[j] - np.conj(a[i])) > 1e-9 * abs(a[i]):
            raise ConstructionError(f"coefficient {i} has no conjugate partner")
        lower.remove(j)
        partners.append(j)
    if lower:
        raise ConstructionError(f"coefficient {lower[0]} has no conjugate partner")
    return upper, np.array(partners, dtype=int), np.flatnonzero(is_real)


def _log_factors(a, x):
    # shape (len(x), len(a))
    return np.log(np.abs(1.0 + np.multiply.outer(np.asarray(x), np.asarray(a))))


def realized_Q(a, beta_bar: float) -> float:
    """Largest ``prod_{l=j}^{k} |1 + a_l x|`` over ``j <= k`` and ``x`` on a ``4L + 1`` grid."""
    a = np.asarray(a)
    L = len(a)
    x = np.linspace(-beta_bar, 0.0, 4 * L + 1)
    logs = _log_factors(a, x)
    # Kadane: best sum ending at l = max(own term, own term + best ending at l-1)
    best_here = logs[:, 0].copy()
    best = best_here.copy()
    for l in range(1, L):
        best_here = logs[:, l] + np.maximum(best_here, 0.0)
        np.maximum(best, best_here, out=best)
    return float(np.exp(best.max()))


def _greedy(logs: np.ndarray) -> list[int]:
    """Greedy sequence over rows of ``logs`` (log factor magnitudes at the sample points).

    Each position takes the row minimising the 1-norm over sample points of
    ``max(placed product * row, remaining product / row)``; ties go to the
    lowest index.
    """
    pool = list(range(len(logs)))
    placed = np.zeros(logs.shape[1])
    remaining = logs.sum(axis=0)
    order = []
    while pool:
        cand = logs[pool]
        score = np.exp(np.maximum(placed + cand, remaining - cand)).sum(axis=1)
        pick = pool.pop(int(np.argmin(score)))
        order.append(pick)
        placed = placed + logs[pick]
        remaining = remaining - logs[pick]
    return order


def order_steps(a, beta_bar: float) -> np.ndarray:
    """Order the steps to keep the internal amplification small.

    The upper-half-plane steps are sequenced greedily against the estimator
    sampled at ``L`` points of ``[-beta_bar, 0]``; their conjugates then
    follow in the same sequence, so step ``l`` and step ``l + L/2`` are
    conjugates. Since ``|1 + a x| = |1 + conj(a) x|`` on the real axis, every
    contiguous product is bounded by the square of the half-sequence bound.
    Schemes with real steps are sequenced step by step instead.
    """
    a = np.asarray(a, dtype=complex)
    L = len(a)
    upper, lower, real = conjugate_split(a)
    x = np.linspace(-beta_bar, 0.0, L)
    if len(real):
        logs = _log_factors(a, x).T
        return a[_greedy(logs)]
    logs = _log_factors(a[upper], x).T
    half = _greedy(logs)
    return np.concatenate((a[upper[half]], a[lower[half]]))


def stabilize(a, beta: float) -> OrderedSteps:
    """Shrink the sampled interval until the ordered steps certify ``Q <= 10 L^2``."""
    L = len(a)
    for n in range(1, MAX_REDUCTIONS + 1):
        beta_bar = (1.0 - n * REDUCTION_STEP) * beta
        ordered = order_steps(a, beta_bar)
        Q = realized_Q(ordered, beta_bar)
        if Q <= q_bound(L):
            return OrderedSteps(a_ordered=ordered, beta_bar=beta_bar, n_reduction=n, Q_realized=Q)
    raise ConstructionError(f"no ordering reached Q <= 10 L^2 (L={L}) within {MAX_REDUCTIONS} reductions")


def exhaustive_Q(a, beta_bar: float, max_len: int = 8) -> float:
    """Smallest realized ``Q`` over every permutation of ``a`` (``len(a) <= max_len``)."""
    a = np.asarray(a, dtype=complex)
    L = len(a)
    if L > max_len:
        raise ValueError(f"exhaustive search limited to {max_len} steps, got {L}")
    x = np.linspace(-beta_bar, 0.0, 4 * L + 1)
    logs = _log_factors(a, x)
    perms = np.array(list(itertools.permutations(range(L))))
    best_perm = np.full(len(perms), np.inf)
    for lo in range(0, len(perms), 4096):
        seq = logs[:, perms[lo:lo + 4096]]  # (grid, perms, L)
        here = seq[..., 0]
        best = here.copy()
        for l in range(1, L):
            here = seq[..., l] + np.maximum(here, 0.0)
            np.maximum(best, here, out=best)
        best_perm[lo:lo + 4096] = best.max(axis=0)
    return float(np.exp(best_perm.min()))


def Q_lower_bound(a, beta_bar: float) -> float:
    """A bound no ordering can beat: every sequence contains each single factor and the full product."""
    a = np.asarray(a, dtype=complex)
    x = np.linspace(-beta_bar, 0.0, 4 * len(a) + 1)
    logs = _log_factors(a, x)
    return float(np.exp(max(logs.max(), logs.sum(axis=1).max())))
