import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frkc.ordering import (
    Q_lower_bound,
    conjugate_split,
    exhaustive_Q,
    order_steps,
    q_bound,
    realized_Q,
    stabilize,
)
from frkc.polynomial import ConstructionError, base_coefficients, find_roots, maximize_alpha


def _brute_Q(a, beta_bar):
    x = np.linspace(-beta_bar, 0.0, 4 * len(a) + 1)
    best = 0.0
    for j in range(len(a)):
        for k in range(j, len(a)):
            best = max(best, np.max(np.abs(np.prod(1.0 + np.multiply.outer(x, a[j:k + 1]), axis=1))))
    return best


def _base(N, M):
    poly = maximize_alpha(N, M)
    return base_coefficients(poly, find_roots(poly)), poly.beta


coef = st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False)


@settings(max_examples=40, deadline=None)
@given(st.lists(coef, min_size=1, max_size=7), st.floats(0.1, 20))
def test_realized_Q_matches_brute_force(a, beta_bar):
    a = np.asarray(a)
    assert realized_Q(a, beta_bar) == pytest.approx(_brute_Q(a, beta_bar), rel=1e-10)


def test_q_bound():
    assert q_bound(16) == 2560


def test_conjugate_split():
    a = np.array([0.1 + 0.2j, 0.5, 0.3 - 0.1j, 0.1 - 0.2j, 0.3 + 0.1j])
    upper, lower, real = conjugate_split(a)
    np.testing.assert_allclose(a[lower], np.conj(a[upper]))
    assert list(real) == [1]


def test_conjugate_split_rejects_unpaired():
    with pytest.raises(ConstructionError):
        conjugate_split(np.array([0.1 + 0.2j, 0.1 - 0.25j]))


@pytest.mark.parametrize("N,M", [(1, 6), (2, 5), (2, 12), (4, 3)])
def test_order_steps_is_permutation_with_conjugate_halves(N, M):
    a, beta = _base(N, M)
    ordered = order_steps(a, beta)
    np.testing.assert_allclose(np.sort_complex(ordered), np.sort_complex(a))
    if N > 1:
        half = len(a) // 2
        np.testing.assert_allclose(ordered[half:], np.conj(ordered[:half]), rtol=1e-9)


def test_ordering_beats_natural_order():
    a, beta = _base(2, 16)
    natural = a[np.argsort(np.angle(1.0 - 1.0 / a))]
    assert realized_Q(order_steps(a, beta), beta) < realized_Q(natural, beta)


@pytest.mark.parametrize("N,M", [(2, 1), (2, 3), (1, 7)])
def test_exhaustive_bounds(N, M):
    a, beta = _base(N, M)
    best = exhaustive_Q(a, beta)
    lower = Q_lower_bound(a, beta)
    greedy = realized_Q(order_steps(a, beta), beta)
    assert lower <= best * (1 + 1e-12)
    assert best <= greedy * (1 + 1e-12)
    perms = list(itertools.permutations(range(len(a))))
    sample = [realized_Q(a[list(p)], beta) for p in perms[:: max(1, len(perms) // 50)]]
    assert best <= min(sample) * (1 + 1e-12)


def test_exhaustive_refuses_long_sequences():
    with pytest.raises(ValueError):
        exhaustive_Q(np.ones(9), 1.0)


@pytest.mark.parametrize("N,M", [(1, 20), (2, 24), (4, 10)])
def test_stabilize_certifies(N, M):
    a, beta = _base(N, M)
    steps = stabilize(a, beta)
    L = len(a)
    assert steps.Q_realized <= q_bound(L)
    assert steps.beta_bar == pytest.approx((1 - steps.n_reduction * 1e-4) * beta)
    assert realized_Q(steps.a_ordered, steps.beta_bar) == pytest.approx(steps.Q_realized)
