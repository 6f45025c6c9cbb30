"""Damped, ordered FRKC schemes and their coefficient-table files.

Table layout, three lines per index ``M`` (1-based line numbers)::

    3M-2   beta_bar  Q
    3M-1   Re(a_1) ... Re(a_L)
    3M     Im(a_1) ... Im(a_L)
"""

from __future__ import annotations

import functools
import io
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import ordering
from .polynomial import (
    ComplexRootSet,
    ConstructionError,
    StabilityPolynomial,
    base_coefficients,
    elementary_symmetric,
    find_roots,
    maximize_alpha,
    product_form_abs,
    stability_extent,
)

DEFAULT_NU0 = 0.05
MAX_INDEX = 257


@dataclass(frozen=True)
class SchemeCoefficients:
    order: int
    index: int
    a: np.ndarray
    beta_bar: float
    Q_realized: float
    nu0: float = math.nan
    mu: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    beta: float = math.nan  # extent of the damped polynomial before reduction
    alpha: float = math.nan
    n_reduction: int = 0

    @property
    def degree(self) -> int:
        return len(self.a)

    @property
    def nu(self) -> float:
        return self.nu0 / self.order

    def __call__(self, z):
        """Stability function ``prod (1 + a_l z)``."""
        return np.prod(1.0 + np.multiply.outer(np.asarray(z), self.a), axis=-1)


def _conjugate_partners(u: np.ndarray) -> list[int]:
    return [int(np.argmin(np.abs(u - np.conj(u[k])))) for k in range(len(u))]


def _damped(mu_per_root, zeta, s):
    return (1.0 - mu_per_root) / (s * (1.0 - (1.0 - 2.0 * mu_per_root) * zeta))


def apply_damping(
    poly: StabilityPolynomial,
    roots: ComplexRootSet,
    nu0: float,
    maxiter: int = 50,
    tol: float = 1e-12,
) -> tuple[np.ndarray, np.ndarray]:
    """Damped step fractions and the per-group damping parameters ``mu``.

    Each root group (the ``M`` roots mapping onto one root of the reduced
    polynomial) shares one ``mu``. Groups whose reduced roots are complex
    conjugates carry conjugate ``mu`` so the step fractions stay closed under
    conjugation. Newton-Raphson from ``mu = 0`` restores
    ``e_n(a) = 1/n!`` for ``n = 1..N``.
    """
    if not 0.0 <= nu0 < 0.5:
        raise ValueError("nu0 must lie in [0, 0.5)")
    N = poly.order
    u = roots.reduced_roots
    # list groups by ascending |Im| of their root centroid
    centroid = np.array([roots.roots[roots.group == k].mean() for k in range(len(u))])
    rank = np.lexsort((centroid.real, np.abs(centroid.imag)))
    mu = np.zeros(len(u), dtype=complex)
    if nu0 == 0.0:
        return base_coefficients(poly, roots), mu[rank]

    s = (1.0 - nu0 / N) * poly.scale
    zeta, group = roots.roots, roots.group
    partner = _conjugate_partners(u)
    params = []  # (group, is_imaginary_part)
    for k in rank:
        if partner[k] == k:
            params.append((k, False))
        elif k < partner[k]:
            params += [(k, False), (k, True)]
    if len(params) != N:
        raise ConstructionError(f"damping has {len(params)} real parameters for {N} order conditions")

    target = np.array([1.0 / math.factorial(n) for n in range(1, N + 1)])
    resid = np.inf
    for _ in range(maxiter):
        m = mu[group]
        a = _damped(m, zeta, s)
        e = elementary_symmetric(a, N)
        resid_vec = e[1:].real - target
        resid = np.max(np.abs(resid_vec))
        if resid < tol:
            return a, mu[rank]
        da = -(1.0 + zeta) / (s * (1.0 - (1.0 - 2.0 * m) * zeta) ** 2)
        # e_{n-1} of a with a_l removed, for every l
        deflated = np.empty((N, len(a)), dtype=complex)
        deflated[0] = 1.0
        for n in range(1, N):
            deflated[n] = e[n] - a * deflated[n - 1]
        J = np.empty((N, N))
        for j, (k, imaginary) in enumerate(params):
            direction = np.zeros(len(a), dtype=complex)
            own = group == k
            twin = (group == partner[k]) & ~own
            direction[own] = 1j * da[own] if imaginary else da[own]
            direction[twin] = -1j * da[twin] if imaginary else da[twin]
            J[:, j] = (deflated * direction).sum(axis=1).real
        step = np.linalg.solve(J, -resid_vec)
        for j, (k, imaginary) in enumerate(params):
            mu[k] += 1j * step[j] if imaginary else step[j]
            if partner[k] != k:
                mu[partner[k]] = np.conj(mu[k])
    raise ConstructionError(f"damping Newton did not converge, residual {resid:.3e}")


def _stage(name, fn, *args):
    try:
        return fn(*args)
    except ConstructionError as exc:
        raise ConstructionError(f"{name}: {exc}") from exc


@functools.lru_cache(maxsize=None)
def build_scheme(N: int, M: int, nu0: float = DEFAULT_NU0) -> SchemeCoefficients:
    """Generate the damped, ordered scheme of order ``N`` with ``L = N*M`` stages."""
    if not 1 <= M <= MAX_INDEX:
        raise ValueError(f"M must lie in [1, {MAX_INDEX}]")
    poly = _stage("maximize_alpha", maximize_alpha, N, M)
    roots = _stage("find_roots", find_roots, poly)
    a, mu = _stage("apply_damping", apply_damping, poly, roots, nu0)
    L = poly.degree
    beta = stability_extent(lambda x: product_form_abs(a, x), 1.5 * poly.beta, 20 * L)
    if beta <= 0:
        raise ConstructionError("recompute_beta: damped polynomial has no stability interval")
    steps = _stage("stabilize", ordering.stabilize, a, beta)
    a_ord = steps.a_ordered.copy()
    a_ord.setflags(write=False)
    mu.setflags(write=False)
    return SchemeCoefficients(
        order=N,
        index=M,
        a=a_ord,
        beta_bar=steps.beta_bar,
        Q_realized=steps.Q_realized,
        nu0=nu0,
        mu=mu,
        beta=beta,
        alpha=poly.alpha,
        n_reduction=steps.n_reduction,
    )


def _fmt(values) -> str:
    return " ".join(f"{v:.17g}" for v in values)


def write_table(schemes, destination) -> None:
    """Write schemes for ``M = 1 .. M_max`` (in that order) to a path or text stream."""
    schemes = list(schemes)
    for m, sc in enumerate(schemes, start=1):
        if sc.index != m:
            raise ValueError(f"schemes must cover M = 1..M_max contiguously; got M={sc.index} at position {m}")
    lines = []
    for sc in schemes:
        lines.append(_fmt((sc.beta_bar, sc.Q_realized)))
        lines.append(_fmt(sc.a.real))
        lines.append(_fmt(sc.a.imag))
    text = "\n".join(lines) + "\n"
    if isinstance(destination, (str, os.PathLike)):
        with open(destination, "w") as fh:
            fh.write(text)
    else:
        destination.write(text)


class TableFormatError(ValueError):
    pass


def _read_lines(source) -> list[str]:
    if isinstance(source, (str, os.PathLike)):
        with open(source) as fh:
            return fh.read().splitlines()
    if isinstance(source, io.IOBase) or hasattr(source, "read"):
        return source.read().splitlines()
    return list(source)


def _parse(tokens_line: str, lineno: int) -> list[float]:
    try:
        return [float(t) for t in tokens_line.split()]
    except ValueError as exc:
        raise TableFormatError(f"line {lineno}: {exc}") from exc


def _scheme_from_lines(lines: list[str], M: int) -> SchemeCoefficients:
    base = 3 * M - 3
    header = _parse(lines[base], base + 1)
    if len(header) != 2:
        raise TableFormatError(f"line {base + 1}: expected 2 tokens (beta_bar, Q), got {len(header)}")
    re_part = _parse(lines[base + 1], base + 2)
    im_part = _parse(lines[base + 2], base + 3)
    if len(re_part) != len(im_part) or not re_part:
        raise TableFormatError(
            f"line {base + 3}: {len(im_part)} imaginary parts for {len(re_part)} real parts"
        )
    L = len(re_part)
    if L % M:
        raise TableFormatError(f"line {base + 2}: stage count {L} is not a multiple of M={M}")
    a = np.array(re_part) + 1j * np.array(im_part)
    a.setflags(write=False)
    return SchemeCoefficients(order=L // M, index=M, a=a, beta_bar=header[0], Q_realized=header[1])


def read_table(source, M: int) -> SchemeCoefficients:
    """Scheme with index ``M`` from a table written by :func:`write_table`."""
    lines = _read_lines(source)
    if len(lines) % 3:
        raise TableFormatError(f"line {len(lines)}: table length is not a multiple of 3")
    if not 1 <= M <= len(lines) // 3:
        raise TableFormatError(f"M={M} not present; table holds M = 1..{len(lines) // 3}")
    return _scheme_from_lines(lines, M)


def read_tables(source) -> list[SchemeCoefficients]:
    lines = _read_lines(source)
    if len(lines) % 3:
        raise TableFormatError(f"line {len(lines)}: table length is not a multiple of 3")
    return [_scheme_from_lines(lines, m) for m in range(1, len(lines) // 3 + 1)]
