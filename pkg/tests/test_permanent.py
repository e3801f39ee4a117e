import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from photonq.permanent import permanent


def brute_permanent(a):
    n = a.shape[0]
    return sum(math.prod(a[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n)))


def test_empty_matrix_is_one():
    assert permanent(np.zeros((0, 0))) == 1


def test_known_values():
    assert permanent(np.ones((3, 3))) == 6
    assert permanent(np.eye(4)) == 1
    assert permanent(np.array([[1, 2], [3, 4]])) == 10


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 6), seed=st.integers(0, 2**32 - 1))
def test_ryser_matches_brute_force(n, seed):
    r = np.random.default_rng(seed)
    a = r.normal(size=(n, n)) + 1j * r.normal(size=(n, n))
    assert abs(permanent(a) - brute_permanent(a)) < 1e-9 * max(1.0, abs(brute_permanent(a)))


def test_invariant_under_row_and_column_permutation(rng):
    a = rng.normal(size=(5, 5))
    p, q = rng.permutation(5), rng.permutation(5)
    assert abs(permanent(a[p][:, q]) - permanent(a)) < 1e-10
    assert abs(permanent(a.T) - permanent(a)) < 1e-10


def test_rejects_non_square():
    with pytest.raises(ValueError):
        permanent(np.ones((2, 3)))
