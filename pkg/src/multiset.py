"""
Power-sum multi-symmetric polynomial (PMP) encoding of multisets of vectors,
in exact rational arithmetic.

Matrices are numpy object arrays of fractions.Fraction; rows are the elements
of the multiset.
"""

import json
from fractions import Fraction
from math import comb

import numpy as np

MAX_MULTI_INDICES = 100_000
MAX_WIDTH = 4
MAX_ROWS = 8


def as_exact(X) -> np.ndarray:
    """Converts ints, floats (exactly), strings like "3/2" or Fractions to an object array of Fractions."""
    X = np.asarray(X, dtype=object)
    return np.vectorize(Fraction, otypes=[object])(X) if X.size else X.astype(object)


def enumerate_multi_indices(a: int, max_degree: int) -> list:
    """
    All exponent tuples of width a with total degree <= max_degree, in graded-lexicographic order:
    by degree, then lexicographically descending within a degree, e.g. (2,0), (1,1), (0,2).
    """
    if a < 1 or max_degree < 0:
        raise ValueError(f"need a >= 1 and max_degree >= 0, got a={a}, max_degree={max_degree}")
    count = comb(max_degree + a, a)
    if count > MAX_MULTI_INDICES:
        raise ValueError(f"{count} multi-indices exceed the limit of {MAX_MULTI_INDICES}")

    def compositions(total, parts):
        if parts == 1:
            yield (total,)
            return
        for first in range(total, -1, -1):
            for rest in compositions(total - first, parts - 1):
                yield (first,) + rest

    return [alpha for degree in range(max_degree + 1) for alpha in compositions(degree, a)]


def pmp(X, alpha) -> Fraction:
    """p_alpha(X) = sum over rows x of prod_j x_j ** alpha_j."""
    X = as_exact(X)
    if X.ndim != 2 or X.shape[1] != len(alpha):
        raise ValueError(f"multi-index of width {len(alpha)} does not fit matrix of shape {X.shape}")
    total = Fraction(0)
    for row in X:
        term = Fraction(1)
        for x, power in zip(row, alpha):
            term *= x**power
        total += term
    return total


def u_vector(X) -> list:
    """
    The PMP vector (p_alpha(X) for |alpha| <= n), graded-lexicographic order; n is the number of rows.
    """
    X = as_exact(X)
    if X.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {X.shape}")
    n, a = X.shape
    if a > MAX_WIDTH or n > MAX_ROWS:
        raise ValueError(f"u_vector is limited to a <= {MAX_WIDTH}, n <= {MAX_ROWS}; got a={a}, n={n}")
    return [pmp(X, alpha) for alpha in enumerate_multi_indices(a, n)]


def multiset_equal_oracle(X, Y) -> bool:
    """Brute-force multiset equality: sorted row lists coincide."""
    X, Y = as_exact(X), as_exact(Y)
    if X.shape != Y.shape:
        raise ValueError(f"shape mismatch: {X.shape} vs {Y.shape}")
    return sorted(map(tuple, X.tolist())) == sorted(map(tuple, Y.tolist()))


def split_multi_indices(a: int, n: int) -> list:
    """Every alpha of width 2a with |alpha| <= n, split into (first a exponents, last a exponents)."""
    return [(alpha[:a], alpha[a:]) for alpha in enumerate_multi_indices(2 * a, n)]


def _entrywise_power(B: np.ndarray, exponents) -> np.ndarray:
    out = np.full(B.shape[:2], Fraction(1), dtype=object)
    for j, power in enumerate(exponents):
        if power:
            out = out * B[:, :, j] ** power
    return out


def fwl_multiset_via_matmul(B) -> np.ndarray:
    """
    Encodes, for every position (i1, i2), the multiset {(B[j, i2, :], B[i1, j, :]) : j} with
    matrix products: W[:, :, l] = Z_l @ Y_l where Y_l = B ** beta_l and Z_l = B ** gamma_l entrywise.

    Args:
        B: n x n x a tensor (converted to exact rationals).

    Returns:
        np.ndarray: n x n x b object array of Fractions, b = C(n + 2a, 2a).
    """
    B = as_exact(B)
    n, _, a = B.shape
    layers = []
    for beta, gamma in split_multi_indices(a, n):
        Y = _entrywise_power(B, beta)
        Z = _entrywise_power(B, gamma)
        layers.append(Z.dot(Y))
    return np.stack(layers, axis=2)


def fwl_multiset_direct(B) -> np.ndarray:
    """Position-wise u_vector of X with rows X[j] = (B[j, i2, :], B[i1, j, :])."""
    B = as_exact(B)
    n = B.shape[0]
    out = np.empty((n, n, len(split_multi_indices(B.shape[2], n))), dtype=object)
    for i1 in range(n):
        for i2 in range(n):
            X = np.concatenate([B[:, i2, :], B[i1, :, :]], axis=1)
            out[i1, i2, :] = u_vector(X)
    return out


def pmp_to_json(vector) -> str:
    return json.dumps([str(Fraction(v)) for v in vector])
