from fractions import Fraction
from itertools import product
from math import comb

import numpy as np
import pytest

from src.graphs import Permutation, graph_to_fwl_tensor, permute_array, random_gnp
from src.multiset import (
    as_exact,
    enumerate_multi_indices,
    fwl_multiset_direct,
    fwl_multiset_via_matmul,
    multiset_equal_oracle,
    pmp,
    pmp_to_json,
    split_multi_indices,
    u_vector,
)


def test_enumerate_multi_indices_graded_lex():
    assert enumerate_multi_indices(2, 2) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    assert enumerate_multi_indices(3, 0) == [(0, 0, 0)]
    assert len(enumerate_multi_indices(1, 5)) == 6


@pytest.mark.parametrize("a, d", [(1, 4), (2, 3), (3, 4), (4, 2)])
def test_enumerate_multi_indices_count(a, d):
    indices = enumerate_multi_indices(a, d)
    assert len(indices) == comb(d + a, a)
    assert len(set(indices)) == len(indices)


def test_enumerate_multi_indices_bounds():
    with pytest.raises(ValueError):
        enumerate_multi_indices(0, 2)
    with pytest.raises(ValueError, match="exceed"):
        enumerate_multi_indices(12, 12)


def test_pmp_values():
    X = [[1, 2], [3, 4]]
    assert pmp(X, (1, 1)) == 14
    assert pmp(X, (0, 0)) == 2
    assert pmp([[0, 5], [2, 1]], (1, 2)) == 2


def test_pmp_width_mismatch():
    with pytest.raises(ValueError):
        pmp([[1, 2]], (1, 0, 0))


def test_u_vector_hand_values():
    assert u_vector([[1, 2], [3, 4]]) == [2, 4, 6, 10, 14, 20]


def test_u_vector_single_row_contains_entries():
    u = u_vector([[Fraction(3, 2), Fraction(-1, 3)]])
    assert u[1] == Fraction(3, 2) and u[2] == Fraction(-1, 3)


def test_u_vector_is_row_permutation_invariant(rng):
    X = rng.integers(-3, 4, size=(5, 3))
    assert u_vector(X) == u_vector(X[rng.permutation(5)])


def test_u_vector_desk_bounds():
    with pytest.raises(ValueError, match="limited"):
        u_vector(np.zeros((9, 1), dtype=int))


def test_multiset_equal_oracle():
    assert multiset_equal_oracle([[1, 2], [3, 4]], [[3, 4], [1, 2]])
    assert not multiset_equal_oracle([[1, 1], [2, 2]], [[1, 2], [2, 1]])
    assert multiset_equal_oracle([[1, 2]], [[1, 2]])


def _sorted_rows(X):
    return tuple(sorted(map(tuple, X)))


@pytest.mark.parametrize("n, a", [(1, 1), (2, 1), (3, 1), (1, 2), (2, 2), (3, 2)])
def test_u_vector_separates_multisets_exhaustively(n, a):
    groups = {}
    for entries in product(range(3), repeat=n * a):
        X = np.array(entries).reshape(n, a)
        groups.setdefault(tuple(u_vector(X)), set()).add(_sorted_rows(X.tolist()))
    # every u value belongs to exactly one multiset of rows
    assert all(len(multisets) == 1 for multisets in groups.values())


def _random_rational_matrix(rng, n, a):
    numerators = rng.integers(-4, 5, size=(n, a))
    denominators = rng.integers(1, 4, size=(n, a))
    return as_exact([[Fraction(int(p), int(q)) for p, q in zip(r, s)] for r, s in zip(numerators, denominators)])


def test_u_vector_matches_oracle_on_random_rationals(rng):
    for trial in range(1000):
        n, a = int(rng.integers(1, 6)), int(rng.integers(1, 4))
        X = _random_rational_matrix(rng, n, a)
        if trial % 3 == 0:
            Y = X[rng.permutation(n)]
        elif trial % 3 == 1:
            Y = X.copy()
            Y[rng.integers(n), rng.integers(a)] += Fraction(1, 2)
        else:
            Y = _random_rational_matrix(rng, n, a)
        assert (u_vector(X) == u_vector(Y)) == multiset_equal_oracle(X, Y)


def test_split_multi_indices():
    assert split_multi_indices(1, 2) == [((0,), (0,)), ((1,), (0,)), ((0,), (1,)), ((2,), (0,)), ((1,), (1,)), ((0,), (2,))]
    for a in range(1, 4):
        for n in range(1, 7):
            assert len(split_multi_indices(a, n)) == len(enumerate_multi_indices(2 * a, n))


def test_fwl_multiset_single_edge():
    B = graph_to_fwl_tensor(random_gnp(2, 1.0, 0)).data[:, :, :1]
    W = fwl_multiset_via_matmul(B)
    assert W.shape == (2, 2, 6)
    for i1, i2 in product(range(2), repeat=2):
        X = np.concatenate([as_exact(B[:, i2, :]), as_exact(B[i1, :, :])], axis=1)
        assert list(W[i1, i2]) == u_vector(X)


def test_fwl_multiset_constant_tensor():
    n, c = 3, Fraction(2, 3)
    W = fwl_multiset_via_matmul(np.full((n, n, 1), c, dtype=object))
    for l, (beta, gamma) in enumerate(split_multi_indices(1, n)):
        assert (W[:, :, l] == n * c ** (beta[0] + gamma[0])).all()


def test_fwl_multiset_matches_direct_encoding(rng):
    for trial in range(20):
        n = int(rng.integers(2, 6))
        B = graph_to_fwl_tensor(random_gnp(n, 0.5, int(rng.integers(10_000)))).data
        assert (fwl_multiset_via_matmul(B) == fwl_multiset_direct(B)).all()


def test_fwl_multiset_is_equivariant(rng):
    B = graph_to_fwl_tensor(random_gnp(4, 0.5, 9)).data
    g = Permutation.random(4, rng)
    lhs = fwl_multiset_via_matmul(permute_array(B, g, 2))
    rhs = permute_array(fwl_multiset_via_matmul(B), g, 2)
    assert (lhs == rhs).all()


def test_pmp_to_json_uses_exact_strings():
    assert pmp_to_json([Fraction(14), Fraction(3, 2)]) == '["14", "3/2"]'
