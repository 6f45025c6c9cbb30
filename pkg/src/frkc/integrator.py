"""Adaptive FRKC2 time integration.

One step is a sequence of ``L`` forward Euler steps with complex step
fractions ``a_l``; the real part of the final stage is the second-order
solution. Accumulating only the real parts of ``a_l`` and of each stage
derivative gives a first-order solution from the same derivative
evaluations, and their difference drives the step-size controller.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .scheme import DEFAULT_NU0, MAX_INDEX, SchemeCoefficients, build_scheme


class StepFailure(ArithmeticError):
    """A stage produced a non-finite value."""


class IntegrationError(RuntimeError):
    pass


@dataclass
class SemiDiscreteSystem:
    """``w' = rhs(t, w)``.

    ``rhs`` receives complex ``t`` and ``w`` during FRKC stages and must
    handle them (plain numpy arithmetic does).
    """

    dimension: int
    rhs: Callable[[complex, np.ndarray], np.ndarray]
    spectral_radius: Optional[Callable[[float, np.ndarray], float]] = None


@dataclass
class ControllerState:
    T_prev: Optional[float] = None
    T_curr: Optional[float] = None
    err_prev: Optional[float] = None
    err_curr: Optional[float] = None

    def push(self, T: float, err: float) -> None:
        self.T_prev, self.err_prev = self.T_curr, self.err_curr
        self.T_curr, self.err_curr = T, err


@dataclass
class IntegrationConfig:
    tol: float = 1e-6
    safe: float = 0.8
    nu0: float = DEFAULT_NU0
    M_max: int = 64
    initial_T: float = 1e-4
    rho_refresh_interval: int = 25

    def __post_init__(self):
        if not 0 < self.safe < 1:
            raise ValueError("safe must lie in (0, 1)")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 1 <= self.M_max <= MAX_INDEX:
            raise ValueError(f"M_max must lie in [1, {MAX_INDEX}]")


@dataclass
class IntegrationStats:
    steps_accepted: int = 0
    steps_rejected: int = 0
    rhs_evaluations: int = 0
    final_T: float = math.nan
    # (t, T, err, M, accepted) per attempted step
    history: list = field(default_factory=list)


class SchemeTable:
    """Second-order schemes indexed by ``M``, generated on first use unless supplied."""

    def __init__(self, M_max: int = 64, nu0: float = DEFAULT_NU0, schemes: Sequence[SchemeCoefficients] = None):
        if schemes is not None:
            schemes = list(schemes)
            M_max = len(schemes)
            self._schemes = {s.index: s for s in schemes}
        else:
            self._schemes = {}
        self.M_max = M_max
        self.nu0 = nu0

    def __getitem__(self, M: int) -> SchemeCoefficients:
        if not 1 <= M <= self.M_max:
            raise KeyError(M)
        if M not in self._schemes:
            self._schemes[M] = build_scheme(2, M, self.nu0)
        return self._schemes[M]

    def beta_bar(self, M: int) -> float:
        return self[M].beta_bar

    def __len__(self) -> int:
        return self.M_max


def select_M(T: float, rho: float, table: SchemeTable) -> int:
    """Smallest ``M`` with ``beta_bar(M) >= T * rho``, or ``M_max`` when none suffices."""
    need = T * rho
    # beta_bar grows with M, so bisect over the index range
    keys = range(1, len(table) + 1)
    M = bisect.bisect_left(keys, need, key=table.beta_bar) + 1
    return min(M, len(table))


def frkc2_step(rhs, w, t: float, T: float, coeffs: SchemeCoefficients):
    """One FRKC2 step: returns the second- and embedded first-order solutions."""
    W = np.asarray(w, dtype=complex)
    W1 = np.array(w, dtype=float, copy=True)
    c = 0.0
    for a in coeffs.a:
        F = np.asarray(rhs(t + T * c, W))
        W1 += (T * a.real) * F.real
        W = W + (T * a) * F
        c += a
    if not (np.all(np.isfinite(W)) and np.all(np.isfinite(W1))):
        raise StepFailure("non-finite stage value")
    return W.real.copy(), W1


def error_norm(w2, w1, tol: float) -> float:
    """RMS of ``|w2 - w1| / (tol (1 + max(|w2|, |w1|)))``."""
    w2 = np.asarray(w2)
    w1 = np.asarray(w1)
    scaled = np.abs(w2 - w1) / (tol * (1.0 + np.maximum(np.abs(w2), np.abs(w1))))
    return float(np.sqrt(np.mean(scaled**2)))


def next_step_size(state: ControllerState, safe: float) -> float:
    """Predictive step-size controller, clamped to a factor of ten either way."""
    T, err = state.T_curr, state.err_curr
    if err == 0.0:
        return 10.0 * T
    if state.T_prev is None or not state.err_prev:
        proposal = T * safe / math.sqrt(err)
    else:
        proposal = T * (safe / math.sqrt(err)) * (T / state.T_prev) * math.sqrt(state.err_prev / err)
    return min(max(proposal, T / 10.0), 10.0 * T)


def reject_step(T: float, err: float, safe: float) -> float:
    return T * safe / math.sqrt(err)


def power_iteration(rhs, w, t: float, v0=None, maxiter: int = 20, rtol: float = 0.01):
    """Dominant Jacobian magnitude by power iteration on finite differences of ``rhs``.

    Returns ``(estimate, vector, converged)``; the estimate is ``||J v||`` for
    unit ``v``.
    """
    w = np.asarray(w, dtype=float)
    if v0 is None:
        v = np.random.default_rng(0).standard_normal(w.shape)
    else:
        v = np.array(v0, dtype=float, copy=True)
    v /= np.linalg.norm(v)
    f0 = np.asarray(rhs(t, w), dtype=float)
    delta = math.sqrt(np.finfo(float).eps) * (1.0 + np.linalg.norm(w))
    est, prev, largest = 0.0, None, 0.0
    for _ in range(maxiter):
        Jv = (np.asarray(rhs(t, w + delta * v), dtype=float) - f0) / delta
        est = float(np.linalg.norm(Jv))
        largest = max(largest, est)
        if est == 0.0:
            return 0.0, v, True
        v = Jv / est
        if prev is not None and abs(est - prev) <= rtol * est:
            return est, v, True
        prev = est
    return largest, v, False


def estimate_spectral_radius(system: SemiDiscreteSystem, w, t: float, safety: float = 1.05, v0=None) -> float:
    """Spectral radius with a safety margin: ``safety`` times the converged estimate.

    A supplied ``system.spectral_radius`` takes precedence; a power iteration
    that does not settle returns 1.5 times the largest iterate.
    """
    if system.spectral_radius is not None:
        return safety * float(system.spectral_radius(t, w))
    est, _, converged = power_iteration(system.rhs, w, t, v0=v0)
    return safety * est if converged else 1.5 * est


def integrate(
    system: SemiDiscreteSystem,
    t0: float,
    t_end: float,
    w0,
    config: IntegrationConfig = None,
    table: SchemeTable = None,
):
    """Adaptive FRKC2 integration from ``t0`` to ``t_end``; returns ``(w, stats)``."""
    if not t_end > t0:
        raise ValueError("t_end must exceed t0")
    config = config or IntegrationConfig()
    table = table or SchemeTable(config.M_max, config.nu0)
    stats = IntegrationStats()
    ctl = ControllerState()
    t = t0
    w = np.array(w0, dtype=float, copy=True)
    T = config.initial_T
    T_min = 1e-14 * (t_end - t0)
    rho, v_dom, since_rho = None, None, 0

    while t < t_end:
        if rho is None or since_rho >= config.rho_refresh_interval:
            if system.spectral_radius is not None:
                rho = estimate_spectral_radius(system, w, t)
            else:
                est, v_dom, converged = power_iteration(system.rhs, w, t, v0=v_dom)
                rho = 1.05 * est if converged else 1.5 * est
            since_rho = 0
        last = T >= t_end - t
        T_try = t_end - t if last else T
        beta_max = table.beta_bar(len(table))
        if rho > 0 and T_try * rho > beta_max:
            T_try, last = beta_max / rho, False
        M = select_M(T_try, rho, table) if rho > 0 else 1
        scheme = table[M]
        try:
            w2, w1 = frkc2_step(system.rhs, w, t, T_try, scheme)
            err = error_norm(w2, w1, config.tol)
        except StepFailure:
            err = math.inf
        stats.rhs_evaluations += scheme.degree
        accepted = err <= 1.0
        stats.history.append((t, T_try, err, M, accepted))
        if accepted:
            stats.steps_accepted += 1
            since_rho += 1
            t = t_end if last else t + T_try
            w = w2
            ctl.push(T_try, err)
            T = next_step_size(ctl, config.safe)
        else:
            stats.steps_rejected += 1
            T = T_try / 2.0 if not math.isfinite(err) else reject_step(T_try, err, config.safe)
        if T < T_min:
            raise IntegrationError(f"step size {T:.3e} underflowed at t={t:.6g}")
    stats.final_T = T
    return w, stats


def integrate_fixed(step, rhs, t0: float, t_end: float, w0, T: float):
    """March ``w0`` with a constant step ``T`` using ``step(rhs, w, t, T) -> w``."""
    n = int(round((t_end - t0) / T))
    if n < 1 or abs(n * T - (t_end - t0)) > 1e-9 * (t_end - t0):
        raise ValueError("T must divide the interval into a whole number of steps")
    w = np.array(w0, dtype=float, copy=True)
    for i in range(n):
        w = step(rhs, w, t0 + i * T, T)
    return w
