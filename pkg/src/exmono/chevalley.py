"""Integral Chevalley basis, brackets and adjoint matrices.

Basis order: ``H_1..H_r`` (simple coroots) followed by ``X_beta`` for beta in
``RootSystem.roots`` order (positive roots by height, then their negatives).

Structure constants are fixed by the extraspecial-pair algorithm: for each
positive non-simple root xi, the pair (gamma, delta) with gamma earliest in the
positive-root order gets ``N = +(p+1)``; every other constant follows from
the three- and four-root relations of a Chevalley basis with
``[X_a, X_-a] = H_a`` and ``N_{-a,-b} = -N_{a,b}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import factorial

import numpy as np
import scipy.sparse as sp

from .modarith import OverflowRisk, identity, matmul_mod
from .root_data import Root, RootSystem, build_root_system


class ModulusMismatch(ValueError):
    pass


class PrimeTooSmall(ValueError):
    """ell does not exceed the nilpotency index, so divided powers fail."""


def _neg(r: Root) -> Root:
    return tuple(-x for x in r)


def _add(a: Root, b: Root) -> Root:
    return tuple(x + y for x, y in zip(a, b))


def _structure_constants(system: RootSystem) -> dict[tuple[Root, Root], int]:
    pos = system.positive_roots
    order = {r: i for i, r in enumerate(pos)}
    is_root = system.root_index.__contains__
    norm = {r: system.inner(r, r) for r in system.roots}
    table: dict[tuple[Root, Root], Fraction] = {}

    def positive(r: Root) -> bool:
        return r in order

    def n_any(x: Root, y: Root) -> Fraction:
        c = _add(x, y)
        if not any(c) or not is_root(c):
            return Fraction(0)
        px, py = positive(x), positive(y)
        if px and py:
            return table[(x, y)]
        if not px and not py:
            return -n_any(_neg(x), _neg(y))
        mc = _neg(c)
        # x + y + (-c) = 0:  N_{x,y}/(c,c) = N_{y,-c}/(x,x) = N_{-c,x}/(y,y)
        if positive(y) == positive(mc):
            return Fraction(norm[c], norm[x]) * n_any(y, mc)
        return Fraction(norm[c], norm[y]) * n_any(mc, x)

    def chain_below(a: Root, b: Root) -> int:
        p = 0
        while is_root(tuple(y - (p + 1) * x for x, y in zip(a, b))):
            p += 1
        return p

    for xi in pos:
        if sum(xi) < 2:
            continue
        pairs = []
        for a in pos:
            b = tuple(x - y for x, y in zip(xi, a))
            if b in order and order[a] < order[b]:
                pairs.append((a, b))
        g, d = min(pairs, key=lambda ab: order[ab[0]])
        val = Fraction(chain_below(g, d) + 1)
        table[(g, d)], table[(d, g)] = val, -val
        for a, b in pairs:
            if (a, b) == (g, d):
                continue
            # four-root relation applied to (a, b, -g, -d)
            t1 = n_any(b, _neg(g)) * n_any(a, _neg(d))
            t1 = t1 / norm[_add(b, _neg(g))] if t1 else t1
            t2 = n_any(_neg(g), a) * n_any(b, _neg(d))
            t2 = t2 / norm[_add(a, _neg(g))] if t2 else t2
            v = Fraction(norm[xi]) / val * (t1 + t2)
            table[(a, b)], table[(b, a)] = v, -v

    out: dict[tuple[Root, Root], int] = {}
    for x in system.roots:
        for y in system.roots:
            v = n_any(x, y)
            if v:
                if v.denominator != 1:
                    raise ArithmeticError(f"non-integral N for {x}, {y}: {v}")
                out[(x, y)] = int(v)
    return out


@dataclass(frozen=True, eq=False)
class AdElement:
    """Coordinates in the Chevalley basis, optionally reduced mod ``modulus``."""

    algebra: "ChevalleyAlgebra"
    coords: np.ndarray
    modulus: int | None = None

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=np.int64)
        if c.shape != (self.algebra.dim,):
            raise ValueError(f"expected {self.algebra.dim} coordinates, got {c.shape}")
        if self.modulus is not None:
            c = c % self.modulus
        object.__setattr__(self, "coords", c)

    def _check(self, other: "AdElement") -> None:
        if other.algebra is not self.algebra:
            raise ValueError("elements of different algebras")
        if other.modulus != self.modulus:
            raise ModulusMismatch(f"modulus {self.modulus} vs {other.modulus}")

    def __add__(self, other: "AdElement") -> "AdElement":
        self._check(other)
        return AdElement(self.algebra, self.coords + other.coords, self.modulus)

    def __sub__(self, other: "AdElement") -> "AdElement":
        self._check(other)
        return AdElement(self.algebra, self.coords - other.coords, self.modulus)

    def __neg__(self) -> "AdElement":
        return AdElement(self.algebra, -self.coords, self.modulus)

    def __rmul__(self, k: int) -> "AdElement":
        return AdElement(self.algebra, int(k) * self.coords, self.modulus)

    def __eq__(self, other) -> bool:
        if not isinstance(other, AdElement):
            return NotImplemented
        return (
            other.algebra is self.algebra
            and other.modulus == self.modulus
            and bool((self.coords == other.coords).all())
        )

    def __hash__(self):
        return hash((id(self.algebra), self.modulus, self.coords.tobytes()))

    def reduce(self, modulus: int) -> "AdElement":
        return AdElement(self.algebra, self.coords, modulus)

    def is_zero(self) -> bool:
        return not self.coords.any()

    def support(self) -> dict[str, int]:
        labels = self.algebra.labels
        return {labels[i]: int(v) for i, v in enumerate(self.coords) if v}

    def __repr__(self):
        mod = f" mod {self.modulus}" if self.modulus else ""
        return f"AdElement({self.support()}{mod})"


class ChevalleyAlgebra:
    """The Lie algebra of the adjoint group with its pinned integral basis."""

    def __init__(self, system: RootSystem):
        self.system = system
        self.rank = system.rank
        self.dim = len(system.roots) + system.rank
        self.structure_constants = _structure_constants(system)
        self._tensor = self._build_tensor()

    @classmethod
    def of_type(cls, type_label: str) -> "ChevalleyAlgebra":
        return cls(build_root_system(type_label))

    # -- indexing ---------------------------------------------------------

    def root_basis_index(self, beta: Root) -> int:
        return self.rank + self.system.root_index[tuple(beta)]

    @cached_property
    def labels(self) -> tuple[str, ...]:
        hs = [f"H{i + 1}" for i in range(self.rank)]
        xs = ["X[" + ",".join(str(c) for c in r) + "]" for r in self.system.roots]
        return tuple(hs + xs)

    @cached_property
    def weights(self) -> tuple[Root, ...]:
        """Root (or zero) weight of every basis vector."""
        zero = tuple([0] * self.rank)
        return tuple([zero] * self.rank + list(self.system.roots))

    @cached_property
    def heights(self) -> np.ndarray:
        return np.array([sum(w) for w in self.weights], dtype=np.int64)

    def borel_indices(self) -> list[int]:
        return [i for i, h in enumerate(self.heights) if h >= 0]

    def nilradical_indices(self) -> list[int]:
        return [i for i, h in enumerate(self.heights) if h >= 1]

    # -- construction -----------------------------------------------------

    def _build_tensor(self) -> np.ndarray:
        s = self.system
        r, dim = self.rank, self.dim
        c = np.zeros((dim, dim, dim), dtype=np.int8)
        for k, beta in enumerate(s.roots):
            xb = r + k
            for i in range(r):
                w = s.pairing(beta, i)
                c[i, xb, xb] = w
                c[xb, i, xb] = -w
            co = s.coroot(beta)
            xm = self.root_basis_index(_neg(beta))
            for i, v in enumerate(co):
                c[xb, xm, i] = v
        for (a, b), n in self.structure_constants.items():
            c[self.root_basis_index(a), self.root_basis_index(b), self.root_basis_index(_add(a, b))] = n
        return c

    @property
    def tensor(self) -> np.ndarray:
        """``tensor[a, b, c]`` is the coefficient of basis c in [e_a, e_b]."""
        return self._tensor

    # -- elements ---------------------------------------------------------

    def element(self, terms: dict, modulus: int | None = None) -> AdElement:
        """Build from ``{basis label, basis index, or root tuple: coefficient}``."""
        v = np.zeros(self.dim, dtype=np.int64)
        for key, coef in terms.items():
            if isinstance(key, str):
                idx = self.labels.index(key)
            elif isinstance(key, tuple):
                idx = self.root_basis_index(key)
            else:
                idx = int(key)
            v[idx] += coef
        return AdElement(self, v, modulus)

    def basis_element(self, idx: int, modulus: int | None = None) -> AdElement:
        return self.element({idx: 1}, modulus)

    def zero(self, modulus: int | None = None) -> AdElement:
        return AdElement(self, np.zeros(self.dim, dtype=np.int64), modulus)

    def h(self, i: int, modulus: int | None = None) -> AdElement:
        return self.basis_element(i, modulus)

    def x(self, beta: Root, modulus: int | None = None) -> AdElement:
        return self.basis_element(self.root_basis_index(beta), modulus)

    def coroot_element(self, beta: Root, modulus: int | None = None) -> AdElement:
        return AdElement(self, np.array(self.system.coroot(beta) + (0,) * (self.dim - self.rank)), modulus)

    def highest_root_vector(self, modulus: int | None = None) -> AdElement:
        return self.x(self.system.highest_root, modulus)

    # -- bracket and ad -----------------------------------------------------

    def bracket(self, a: AdElement, b: AdElement) -> AdElement:
        a._check(b)
        t = self._tensor.reshape(self.dim, self.dim * self.dim)
        if a.modulus is None:
            bound = int(np.abs(a.coords).sum()) * int(np.abs(b.coords).sum()) * 8
            if bound >= 2**62:
                raise OverflowRisk("bracket of large integral elements")
            left = (a.coords @ t.astype(np.int64)).reshape(self.dim, self.dim)
            return AdElement(self, b.coords @ left)
        m = a.modulus
        left = matmul_mod(a.coords[None, :], t.astype(np.int64) % m, m).reshape(self.dim, self.dim)
        return AdElement(self, matmul_mod(b.coords[None, :], left, m)[0], m)

    def ad_basis(self, idx: int) -> np.ndarray:
        return self._tensor[idx].T.astype(np.int64)

    def ad_matrix(self, a: AdElement) -> np.ndarray:
        """Matrix of ad(a): column b holds the coordinates of [a, e_b]."""
        flat = self._tensor.reshape(self.dim, self.dim * self.dim).astype(np.int64)
        if a.modulus is None:
            if int(np.abs(a.coords).sum()) * 8 >= 2**62:
                raise OverflowRisk("ad of a large integral element")
            m = (a.coords @ flat).reshape(self.dim, self.dim)
        else:
            m = matmul_mod(a.coords[None, :], flat % a.modulus, a.modulus).reshape(self.dim, self.dim)
        return np.ascontiguousarray(m.T)

    @cached_property
    def _ad_sparse(self) -> list[sp.csr_matrix]:
        return [sp.csr_matrix(self.ad_basis(i)) for i in range(self.dim)]

    # -- verification ---------------------------------------------------------

    def is_antisymmetric(self) -> bool:
        t = self._tensor
        return bool((t == -t.transpose(1, 0, 2)).all())

    def jacobi_failures(self, limit: int = 10) -> list[tuple[int, int]]:
        """Pairs (a, b) with ad([e_a, e_b]) != [ad e_a, ad e_b]; empty iff Jacobi holds.

        Equivalent to the Jacobi identity on all basis triples.  For fixed a,
        the identity for every b is checked in one sparse product using
        row-major vectorisation of the ad matrices.
        """
        dim = self.dim
        stack = sp.vstack([m.reshape(1, dim * dim) for m in self._ad_sparse]).tocsr()
        eye = sp.identity(dim, dtype=np.int64, format="csr")
        failures = []
        for a in range(dim):
            d = self._ad_sparse[a]
            left = stack @ sp.kron(d.T, eye, format="csr")  # rows: vec(D ad(b))
            right = stack @ sp.kron(eye, d, format="csr")  # rows: vec(ad(b) D)
            derived = d.T @ stack  # rows: vec(ad([a, b]))
            diff = (left - right - derived).tocsr()
            diff.eliminate_zeros()
            if diff.nnz:
                bad = np.unique(diff.nonzero()[0])
                failures.extend((a, int(b)) for b in bad[: limit - len(failures)])
                if len(failures) >= limit:
                    break
        return failures

    def chain_length_mismatches(self) -> list[tuple[Root, Root]]:
        """Root pairs where |N_{a,b}| differs from p+1 (p = length of the a-string below b)."""
        bad = []
        for (a, b), n in self.structure_constants.items():
            p = 0
            while self.system.is_root(tuple(y - (p + 1) * x for x, y in zip(a, b))):
                p += 1
            if abs(n) != p + 1:
                bad.append((a, b))
        return bad

    def preserves_bracket(self, mat: np.ndarray, modulus: int, chunk: int = 32) -> bool:
        """True iff M[a, b] = [Ma, Mb] mod modulus for every basis pair.

        Uses M ad(e_a) = ad(M e_a) M for each a.
        """
        dim, m = self.dim, modulus
        mat = np.asarray(mat, dtype=np.int64) % m
        ads = self._tensor.transpose(0, 2, 1).astype(np.float64)  # ads[c] = ad(e_c)
        for start in range(0, dim, chunk):
            cols = mat[:, start : start + chunk]  # images M e_a
            # ad(M e_a) = sum_c M[c, a] ad(e_c); entries < dim * m * 6, exact in float64
            ad_img = np.tensordot(cols.T.astype(np.float64), ads, axes=(1, 0))
            ad_img = np.rint(ad_img).astype(np.int64) % m
            lhs = np.stack([matmul_mod(mat, self.ad_basis(a) % m, m) for a in range(start, min(dim, start + chunk))])
            rhs = np.stack([matmul_mod(ad_img[k], mat, m) for k in range(ad_img.shape[0])])
            if not (lhs == rhs).all():
                return False
        return True

    def dump_bracket_table(self) -> str:
        """Deterministic text listing of all nonzero basis brackets [e_a, e_b], a < b."""
        lines = [f"# Chevalley bracket table, type {self.system.type_label}, dim {self.dim}"]
        labels = self.labels
        for a in range(self.dim):
            for b in range(a + 1, self.dim):
                v = self._tensor[a, b]
                nz = np.nonzero(v)[0]
                if nz.size:
                    rhs = " + ".join(f"{int(v[c])}*{labels[c]}" for c in nz)
                    lines.append(f"[{labels[a]}, {labels[b]}] = {rhs}")
        return "\n".join(lines) + "\n"


# -- exact nilpotency and the exponential --------------------------------------


def nilpotency_index(mat: np.ndarray, cap: int | None = None) -> int | None:
    """Smallest k with mat**k == 0 over Z, or None if not nilpotent.

    Powers are applied to each basis vector as sparse Python-int dictionaries,
    so the computation is exact however large the entries of mat**k grow.
    """
    n = mat.shape[0]
    cap = n + 1 if cap is None else cap
    cols = []
    for j in range(n):
        nz = np.nonzero(mat[:, j])[0]
        cols.append([(int(i), int(mat[i, j])) for i in nz])
    vecs = [{j: 1} for j in range(n)]
    for k in range(1, cap + 1):
        nxt = []
        for v in vecs:
            w: dict[int, int] = {}
            for j, cj in v.items():
                for i, mij in cols[j]:
                    w[i] = w.get(i, 0) + cj * mij
            w = {i: x for i, x in w.items() if x}
            if w:
                nxt.append(w)
        if not nxt:
            return k
        vecs = nxt
    return None


def ad_power_is_zero(algebra: ChevalleyAlgebra, a: AdElement, k: int) -> bool:
    idx = nilpotency_index(algebra.ad_matrix(a), cap=k)
    return idx is not None and idx <= k


def exp_nilpotent_ad(a: AdElement, ell: int, n: int = 1, verify: bool = True) -> np.ndarray:
    """exp(ad a) = sum_k ad(a)^k / k! as a matrix over Z/ell^n.

    Requires ad(a) nilpotent with index strictly below ell, so every divided
    power is ell-integral; smaller ell is refused rather than truncated.
    """
    alg = a.algebra
    integral = AdElement(alg, a.coords) if a.modulus is None else a
    ad = alg.ad_matrix(AdElement(alg, integral.coords))
    index = nilpotency_index(ad)
    if index is None:
        raise ValueError("ad(a) is not nilpotent")
    if ell <= index:
        raise PrimeTooSmall(f"ell={ell} must exceed the nilpotency index {index}")
    m = ell**n
    if a.modulus is not None and a.modulus % m != 0:
        raise ModulusMismatch(f"element known mod {a.modulus}, cannot lift to mod {m}")
    ad_m = ad % m
    result = identity(alg.dim) % m
    power = identity(alg.dim) % m
    for k in range(1, index):
        power = matmul_mod(power, ad_m, m)
        result = (result + power * pow(factorial(k), -1, m)) % m
    if verify and not alg.preserves_bracket(result, m):
        raise ArithmeticError("exp(ad a) failed to preserve the bracket")
    return result
