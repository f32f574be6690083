"""The principal sl2 triple and the string decomposition of the adjoint representation."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm

import numpy as np

from .chevalley import AdElement, ChevalleyAlgebra
from .modarith import nullspace_mod_p, nullspace_q
from .root_data import RootSystem


class DegenerateModulus(ValueError):
    """The requested prime is too small for the decomposition to hold mod ell."""


@dataclass(frozen=True)
class PrincipalTriple:
    algebra: ChevalleyAlgebra
    r: tuple[int, ...]
    X: AdElement
    H: AdElement
    Y: AdElement

    def relations_hold(self) -> bool:
        br = self.algebra.bracket
        return (
            br(self.H, self.X) == 2 * self.X
            and br(self.H, self.Y) == -2 * self.Y
            and br(self.X, self.Y) == self.H
        )


@dataclass(frozen=True)
class StringDecomposition:
    exponents: tuple[int, ...]  # sorted, with multiplicity
    string_lengths: tuple[int, ...]
    # top vector of each string, in the same order as exponents
    highest_weight_vectors: tuple[tuple, ...] = field(repr=False)
    modulus: int | None = None
    # each summand is Sym^{2m}(std) twisted by det^{-m}; the twist is a character
    # and carries no information at the level of the Lie algebra
    twists: tuple[str, ...] = ()

    @property
    def total_dimension(self) -> int:
        return sum(self.string_lengths)


def principal_coefficients(system: RootSystem) -> tuple[int, ...]:
    """Integers r_i with 2 rho^vee = sum r_i alpha_i^vee, i.e. A r = (2, ..., 2)."""
    n = system.rank
    rows = [list(system.cartan_matrix[i]) + [-2] for i in range(n)]
    sol = nullspace_q(rows, n + 1)
    if len(sol) != 1 or sol[0][n] == 0:
        raise ArithmeticError("Cartan matrix is singular")
    v = [x / sol[0][n] for x in sol[0][:n]]
    if any(x.denominator != 1 or x <= 0 for x in v):
        raise ArithmeticError(f"2 rho^vee has non-integral or non-positive coefficients {v}")
    return tuple(int(x) for x in v)


def build_principal_triple(algebra: ChevalleyAlgebra) -> PrincipalTriple:
    s = algebra.system
    r = principal_coefficients(s)
    X = algebra.element({alpha: 1 for alpha in s.simple_roots})
    H = algebra.element({i: ri for i, ri in enumerate(r)})
    Y = algebra.element({tuple(-x for x in alpha): ri for alpha, ri in zip(s.simple_roots, r)})
    triple = PrincipalTriple(algebra, r, X, H, Y)
    if not triple.relations_hold():
        raise ArithmeticError("principal triple relations fail; structure constants are inconsistent")
    return triple


def _height_blocks(algebra: ChevalleyAlgebra) -> dict[int, list[int]]:
    blocks: dict[int, list[int]] = {}
    for i, ht in enumerate(algebra.heights):
        blocks.setdefault(int(ht), []).append(i)
    return blocks


def _integral(v: list[Fraction]) -> list[int]:
    den = lcm(*(x.denominator for x in v))
    return [int(x * den) for x in v]


def _apply(mat: np.ndarray, v: list[int], modulus: int | None) -> list[int]:
    out = [0] * mat.shape[0]
    for j, c in enumerate(v):
        if c:
            for i in np.nonzero(mat[:, j])[0]:
                out[i] += c * int(mat[i, j])
    if modulus is not None:
        out = [x % modulus for x in out]
    return out


def decompose_adjoint(
    triple: PrincipalTriple, ell: int | None = None, mode: str = "lowest"
) -> StringDecomposition:
    """Split g into sl2-strings, over Q (ell=None) or over F_ell.

    ``mode="lowest"`` takes the kernel of ad(Y) in each height block (lowest
    weight 2k at height k <= 0); ``mode="highest"`` uses ad(X) instead.  Each
    extremal vector is then pushed through the string to measure its length.
    """
    alg = triple.algebra
    h = alg.system.coxeter_number
    if ell is not None and ell < 2 * h - 1:
        raise DegenerateModulus(f"ell={ell} is below 2h-1={2 * h - 1}")
    if mode not in ("lowest", "highest"):
        raise ValueError(f"unknown mode {mode!r}")
    kill, raise_ = (triple.Y, triple.X) if mode == "lowest" else (triple.X, triple.Y)
    step = -1 if mode == "lowest" else 1
    ad_kill = alg.ad_matrix(kill)
    ad_walk = alg.ad_matrix(raise_)
    blocks = _height_blocks(alg)

    exponents, lengths, tops = [], [], []
    for k in sorted(blocks):
        if step * k < 0:
            continue
        src = blocks[k]
        dst = blocks.get(k + step, [])
        sub = ad_kill[np.ix_(dst, src)] if dst else np.zeros((0, len(src)), dtype=np.int64)
        if ell is None:
            kernel = [_integral(v) for v in nullspace_q(sub.tolist(), len(src))]
        else:
            kernel = nullspace_mod_p(sub, ell).tolist()
        for kv in kernel:
            v = [0] * alg.dim
            for idx, c in zip(src, kv):
                v[idx] = int(c)
            length = 1
            top = v
            while True:
                nxt = _apply(ad_walk, top, ell)
                if not any(nxt):
                    break
                top = nxt
                length += 1
            m = abs(k)
            if length != 2 * m + 1:
                raise ArithmeticError(f"string from height {k} has length {length}, expected {2 * m + 1}")
            exponents.append(m)
            lengths.append(length)
            tops.append(tuple(top))
    order = sorted(range(len(exponents)), key=lambda i: exponents[i])
    return StringDecomposition(
        exponents=tuple(exponents[i] for i in order),
        string_lengths=tuple(lengths[i] for i in order),
        highest_weight_vectors=tuple(tops[i] for i in order),
        modulus=ell,
        twists=tuple(f"det^-{exponents[i]}" for i in order),
    )


# -- minimal fields of definition ------------------------------------------------


def _frobenius_moves(exps: list[int], ell: int, f: int) -> bool:
    n = ell**f - 1
    base = Counter(e % n for e in exps)
    twisted = Counter((e * ell ** (f - 1)) % n for e in exps)
    return base != twisted


def sym_minimal_field_check(r: int, ell: int, f: int) -> bool:
    """True iff x -> x^(ell^(f-1)) moves the eigenvalues {b^r, b^(r-2), ..., b^-r}.

    b generates F_{ell^f}^x, so b^e is tracked by its exponent mod ell^f - 1.
    """
    if f == 1:
        return True
    return _frobenius_moves([r - 2 * k for k in range(r + 1)], ell, f)


def adjoint_eigenvalue_field_check(system: RootSystem, ell: int, f: int) -> bool:
    """True iff some coroot alpha^vee(b) has eigenvalues on g moved by Frobenius."""
    if f == 1:
        return True
    for alpha in system.positive_roots:
        cochar = system.coroot(alpha)
        exps = [system.coroot_pairing(beta, cochar) for beta in system.roots]
        exps += [0] * system.rank
        if _frobenius_moves(exps, ell, f):
            return True
    return False


def eigenvalue_bound_holds(ell: int, f: int) -> bool:
    """The inequality ell^f - 1 <= 2 ell^(f-1) + 3 forced by a fixed eigenvalue set."""
    return ell**f - 1 <= 2 * ell ** (f - 1) + 3
