"""Exact integer and modular arithmetic shared by the Lie and curve modules.

Dense matrices are numpy int64 arrays.  Products modulo ``m`` go through
float64 BLAS whenever every partial sum is provably below 2**53, which keeps
248x248 products exact and fast; otherwise int64 (or Python ints) is used.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

_FLOAT_EXACT = 2**53
_INT64_SAFE = 2**62


class OverflowRisk(ArithmeticError):
    """Raised when an int64 computation could exceed machine range."""


def valuation(n: int, p: int) -> int:
    """p-adic valuation of a nonzero integer."""
    if n == 0:
        raise ValueError("valuation of 0 is infinite")
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def rational_valuation(x: Fraction, p: int) -> int:
    return valuation(x.numerator, p) - valuation(x.denominator, p)


def factorial_valuation(k: int, p: int) -> int:
    # Legendre's formula
    v, q = 0, p
    while q <= k:
        v += k // q
        q *= p
    return v


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=np.int64)


def matmul_mod(a: np.ndarray, b: np.ndarray, m: int) -> np.ndarray:
    """Exact ``a @ b mod m`` for matrices already reduced mod m."""
    inner = a.shape[-1]
    bound = inner * (m - 1) ** 2
    if bound < _FLOAT_EXACT:
        prod = np.rint(a.astype(np.float64) @ b.astype(np.float64)).astype(np.int64)
        return prod % m
    if bound < _INT64_SAFE:
        return (a @ b) % m
    prod = a.astype(object) @ b.astype(object)
    return (prod % m).astype(np.int64)


def matpow_mod(a: np.ndarray, e: int, m: int) -> np.ndarray:
    if e < 0:
        raise ValueError("negative exponent")
    result = identity(a.shape[0]) % m
    base = a % m
    while e:
        if e & 1:
            result = matmul_mod(result, base, m)
        e >>= 1
        if e:
            base = matmul_mod(base, base, m)
    return result


def checked_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Integer product with an explicit overflow guard."""
    bound = int(np.abs(a).max(initial=0)) * int(np.abs(b).max(initial=0)) * a.shape[-1]
    if bound >= _INT64_SAFE:
        raise OverflowRisk(f"product bound {bound} exceeds int64 range")
    return a @ b


# -- row reduction over F_p ---------------------------------------------------


def rref_mod_p(mat: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over F_p; returns (matrix, pivot columns)."""
    m = np.array(mat, dtype=np.int64) % p
    rows, cols = m.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(m[r:, c])[0]
        if nz.size == 0:
            continue
        k = r + int(nz[0])
        if k != r:
            m[[r, k]] = m[[k, r]]
        m[r] = (m[r] * pow(int(m[r, c]), -1, p)) % p
        col = m[:, c].copy()
        col[r] = 0
        if col.any():
            m = (m - np.outer(col, m[r])) % p
        pivots.append(c)
        r += 1
    return m, pivots


def rank_mod_p(mat: np.ndarray, p: int) -> int:
    if mat.size == 0:
        return 0
    return len(rref_mod_p(mat, p)[1])


def nullspace_mod_p(mat: np.ndarray, p: int) -> np.ndarray:
    """Basis (as rows) of the right kernel {x : mat @ x = 0} over F_p."""
    mat = np.asarray(mat, dtype=np.int64)
    cols = mat.shape[1]
    if mat.shape[0] == 0:
        return np.eye(cols, dtype=np.int64)
    r, pivots = rref_mod_p(mat, p)
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((len(free), cols), dtype=np.int64)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for row, pc in enumerate(pivots):
            basis[i, pc] = (-r[row, f]) % p
    return basis


# -- rational kernels (small matrices only) -----------------------------------


def nullspace_q(rows: Sequence[Sequence[int]], ncols: int) -> list[list[Fraction]]:
    """Right kernel over Q by fraction-exact Gauss-Jordan elimination."""
    m = [[Fraction(x) for x in row] for row in rows]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    basis = []
    for f in (c for c in range(ncols) if c not in pivots):
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, pc in enumerate(pivots):
            v[pc] = -m[row][f]
        basis.append(v)
    return basis


def crt_pair(r1: int, m1: int, r2: int, m2: int) -> tuple[int, int]:
    """Combine x = r1 (mod m1), x = r2 (mod m2) for coprime moduli."""
    t = ((r2 - r1) * pow(m1, -1, m2)) % m2
    return (r1 + m1 * t) % (m1 * m2), m1 * m2
