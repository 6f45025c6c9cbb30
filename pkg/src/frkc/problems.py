"""Semi-discrete test problems."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.fft import dct, idct

from .integrator import SemiDiscreteSystem

BRUSSELATOR_DIFFUSION = 0.02


@dataclass(frozen=True)
class MeshSpec:
    dimensions: int
    points: int
    extent: float = 1.0

    @property
    def h(self) -> float:
        return self.extent / self.points

    @property
    def unknowns(self) -> int:
        return self.points**self.dimensions


@dataclass
class ProblemInstance:
    name: str
    system: SemiDiscreteSystem
    w0: np.ndarray
    t_end: float
    mesh: Optional[MeshSpec] = None
    species: int = 1
    # dominant Jacobian magnitude of the linear part, when known in closed form
    rho_formula: Optional[float] = None
    # exact solution of the semi-discrete system, w(t)
    exact: Optional[Callable[[float], np.ndarray]] = None


def _laplacian_periodic_2d(u, h):
    return (
        np.roll(u, 1, axis=-1) + np.roll(u, -1, axis=-1) + np.roll(u, 1, axis=-2) + np.roll(u, -1, axis=-2) - 4.0 * u
    ) / (h * h)


def brusselator_2d(n: int = 50) -> ProblemInstance:
    """Two-species Brusselator on the periodic unit square.

    State layout is ``[v; w]``: all ``v`` values (row-major over ``x1, x2``)
    followed by all ``w`` values.
    """
    if n < 8:
        raise ValueError("n must be at least 8")
    mesh = MeshSpec(2, n)
    h = mesh.h
    x = np.arange(n) * h
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    v0 = 1.0 + np.sin(2.0 * np.pi * X1)
    w0 = 3.0 + np.cos(2.0 * np.pi * X2)

    def rhs(t, y):
        v, w = y.reshape(2, n, n)
        v2w = v * v * w
        dv = BRUSSELATOR_DIFFUSION * _laplacian_periodic_2d(v, h) + 1.0 - 4.0 * v + v2w
        dw = BRUSSELATOR_DIFFUSION * _laplacian_periodic_2d(w, h) + 3.0 * v - v2w
        return np.concatenate((dv.ravel(), dw.ravel()))

    return ProblemInstance(
        name="brusselator",
        system=SemiDiscreteSystem(dimension=2 * n * n, rhs=rhs),
        w0=np.concatenate((v0.ravel(), w0.ravel())),
        t_end=1.0,
        mesh=mesh,
        species=2,
        rho_formula=BRUSSELATOR_DIFFUSION * 8.0 / (h * h),
    )


def _flux_divergence(u, kappa_faces, h):
    """``d/dx (kappa du/dx)`` in flux form with zero flux through both ends."""
    flux = kappa_faces * np.diff(u) / h
    out = np.empty_like(u)
    out[0] = flux[0]
    out[1:-1] = flux[1:] - flux[:-1]
    out[-1] = -flux[-1]
    return out / h


def two_material_heat(n: int = 128, kappa_left: float = 1.0, kappa_right: float = 0.1,
                      T_left: float = 10.0, T_right: float = 0.1) -> ProblemInstance:
    """Two materials in contact at ``x = 1/2`` with a temperature jump.

    Cell-centred grid, conductivity piecewise constant with the harmonic mean
    on the interface face, insulated ends.
    """
    if n < 32 or n % 2:
        raise ValueError("n must be even and at least 32")
    mesh = MeshSpec(1, n)
    h = mesh.h
    kappa = np.where(np.arange(n) < n // 2, kappa_left, kappa_right)
    kappa_faces = 2.0 * kappa[:-1] * kappa[1:] / (kappa[:-1] + kappa[1:])
    u0 = np.where(np.arange(n) < n // 2, T_left, T_right).astype(float)

    def rhs(t, u):
        return _flux_divergence(u, kappa_faces, h)

    return ProblemInstance(
        name="two_material",
        system=SemiDiscreteSystem(dimension=n, rhs=rhs),
        w0=u0,
        t_end=0.01,
        mesh=mesh,
        rho_formula=4.0 * max(kappa_left, kappa_right) / (h * h),
    )


def heat_1d_eigenvalues(n: int) -> np.ndarray:
    """Eigenvalues of the insulated cell-centred Laplacian, ``-(4/h^2) sin^2(k pi h / 2)``."""
    h = 1.0 / n
    k = np.arange(n)
    return -(4.0 / h**2) * np.sin(k * np.pi * h / 2.0) ** 2


def heat_1d_analytic(n: int = 64) -> ProblemInstance:
    """Unit diffusion on ``[0, 1]`` with insulated ends, ``u(0, x) = cos(pi x)``.

    The discrete Laplacian is diagonalised by the DCT-II, which gives the
    exact semi-discrete solution at any time.
    """
    if n < 8:
        raise ValueError("n must be at least 8")
    mesh = MeshSpec(1, n)
    h = mesh.h
    x = (np.arange(n) + 0.5) * h
    u0 = np.cos(np.pi * x)
    lam = heat_1d_eigenvalues(n)
    ones = np.ones(n - 1)

    def rhs(t, u):
        return _flux_divergence(u, ones, h)

    modes0 = dct(u0, type=2, norm="ortho")

    def exact(t):
        return idct(modes0 * np.exp(lam * t), type=2, norm="ortho")

    return ProblemInstance(
        name="heat_1d",
        system=SemiDiscreteSystem(dimension=n, rhs=rhs),
        w0=u0,
        t_end=0.1,
        mesh=mesh,
        rho_formula=float(-lam.min()),
        exact=exact,
    )


def quadratic_decay(n: int = 1) -> ProblemInstance:
    """``w' = -w^2``, ``w(0) = 1``, exact ``1 / (1 + t)``; ``n`` copies of the scalar."""

    def rhs(t, w):
        return -w * w

    return ProblemInstance(
        name="quadratic_decay",
        system=SemiDiscreteSystem(dimension=n, rhs=rhs, spectral_radius=lambda t, w: 2.0 * float(np.max(np.abs(w)))),
        w0=np.ones(n),
        t_end=1.0,
        exact=lambda t: np.full(n, 1.0 / (1.0 + t)),
    )


PROBLEMS = {
    "brusselator": brusselator_2d,
    "heat_1d": heat_1d_analytic,
    "two_material": two_material_heat,
    "quadratic_decay": quadratic_decay,
}


def get_problem(name: str, n: Optional[int] = None) -> ProblemInstance:
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None
    return factory() if n is None else factory(n)
