from fractions import Fraction
from math import factorial

import numpy as np
import pytest
import sympy
from sympy.polys.domains import GF
from sympy.polys.matrices import DomainMatrix
from hypothesis import given, settings
from hypothesis import strategies as st

from exmono.modarith import (
    OverflowRisk,
    checked_matmul,
    crt_pair,
    factorial_valuation,
    matmul_mod,
    matpow_mod,
    nullspace_mod_p,
    nullspace_q,
    rank_mod_p,
    rational_valuation,
    valuation,
)

primes = st.sampled_from([2, 3, 5, 7, 29, 127])


@given(st.integers(1, 10**12), primes)
def test_valuation_against_sympy(n, p):
    assert valuation(n, p) == sympy.multiplicity(p, n)
    assert valuation(-n, p) == valuation(n, p)


@given(st.integers(-10**6, 10**6).filter(bool), st.integers(1, 10**6), primes)
def test_rational_valuation(a, b, p):
    assert rational_valuation(Fraction(a, b), p) == sympy.multiplicity(p, a) - sympy.multiplicity(p, b)


@given(st.integers(0, 300), primes)
def test_factorial_valuation(k, p):
    assert factorial_valuation(k, p) == sympy.multiplicity(p, factorial(k))


def test_valuation_of_zero_refused():
    with pytest.raises(ValueError):
        valuation(0, 3)


@settings(max_examples=40)
@given(st.integers(0, 2**32), st.sampled_from([7, 127, 127**2, 71**3]))
def test_matmul_matches_python_ints(seed, m):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, m, size=(9, 9))
    b = rng.integers(0, m, size=(9, 9))
    exact = (np.array(a, dtype=object) @ np.array(b, dtype=object)) % m
    assert (matmul_mod(a, b, m) == exact.astype(np.int64)).all()


def test_matpow():
    m = 29**2
    a = np.array([[1, 1], [0, 1]])
    assert (matpow_mod(a, 29, m) == np.array([[1, 29], [0, 1]])).all()
    assert (matpow_mod(a, 29 * 29, m) == np.eye(2, dtype=np.int64)).all()


def test_checked_matmul_guard():
    big = np.full((4, 4), 2**40, dtype=np.int64)
    with pytest.raises(OverflowRisk):
        checked_matmul(big, big)
    assert (checked_matmul(np.eye(3, dtype=np.int64), np.ones((3, 3), dtype=np.int64)) == 1).all()


@settings(max_examples=60)
@given(st.integers(0, 2**32), st.sampled_from([2, 3, 5, 29]), st.integers(1, 6), st.integers(1, 6))
def test_rank_and_kernel_against_sympy(seed, p, r, c):
    rng = np.random.default_rng(seed)
    mat = rng.integers(0, p, size=(r, c))
    dm = DomainMatrix([[GF(p)(int(x)) for x in row] for row in mat.tolist()], (r, c), GF(p))
    expected_rank = dm.rank()
    assert rank_mod_p(mat, p) == expected_rank
    ker = nullspace_mod_p(mat, p)
    assert ker.shape[0] == c - expected_rank
    if ker.size:
        assert not ((mat @ ker.T) % p).any()
        assert rank_mod_p(ker, p) == ker.shape[0]


def test_nullspace_q():
    rows = [[1, 2, 3], [2, 4, 6]]
    ker = nullspace_q(rows, 3)
    assert len(ker) == 2
    for v in ker:
        assert all(sum(Fraction(a) * x for a, x in zip(r, v)) == 0 for r in rows)


@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_crt(x, y):
    m1, m2 = 29, 25
    r, m = crt_pair(x % m1, m1, y % m2, m2)
    assert m == m1 * m2 and 0 <= r < m
    assert r % m1 == x % m1 and r % m2 == y % m2
