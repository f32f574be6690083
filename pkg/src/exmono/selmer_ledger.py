"""Finite linear-algebra model of the Selmer bookkeeping behind forced ramification.

A ``SelmerInstance`` is a list of places, each with a local space F_p^(2 h0)
carrying a nondegenerate pairing and distinguished subspaces (``un``, ``Ram``
and, at the base place, ``P``).  Global classes are modelled by a subspace A
of the sum of local spaces (the image of restriction, taken injective) and
dual classes by its annihilator A^perp under the sum of the pairings, which
builds global duality in.  For a choice of local conditions L = (L_v), the
Selmer group is A /\ L and the dual Selmer group is A^perp /\ L^perp; with
dim A = D/2 their dimensions differ by sum_v (dim L_v - h0_v).

Local condition labels: ``P``, ``un``, ``Ram``, ``join`` (un + Ram),
``meet`` (un /\ Ram), ``full`` and ``zero``.  Places not named in a problem
default to ``un`` (classes unramified there).
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

Vector = tuple[int, ...]
Basis = tuple[Vector, ...]

LABELS = ("P", "un", "Ram", "join", "meet", "full", "zero")


class PreconditionError(ValueError):
    pass


class MalformedInstance(ValueError):
    pass


# -- linear algebra over F_p (small dense matrices, pure Python) -----------------


def _rank_f2(rows: Sequence[Sequence[int]]) -> int:
    basis: list[int] = []
    for row in rows:
        v = 0
        for bit in row:
            v = (v << 1) | (bit & 1)
        for b in basis:
            v = min(v, v ^ b)
        if v:
            basis.append(v)
    return len(basis)


def _rref_f2(m: list[list[int]]) -> tuple[list[list[int]], list[int]]:
    n = len(m[0])
    ints = []
    for r in m:
        v = 0
        for x in r:
            v = (v << 1) | (x & 1)
        ints.append(v)
    pivots: list[int] = []
    out: list[int] = []
    for c in range(n):
        bit = 1 << (n - 1 - c)
        k = next((i for i, v in enumerate(ints) if v & bit), None)
        if k is None:
            continue
        piv = ints.pop(k)
        ints = [v ^ piv if v & bit else v for v in ints]
        out = [v ^ piv if v & bit else v for v in out]
        out.append(piv)
        pivots.append(c)
    return [[(v >> (n - 1 - c)) & 1 for c in range(n)] for v in out], pivots


def rref(rows: Iterable[Sequence[int]], p: int) -> tuple[list[list[int]], list[int]]:
    m = [[x % p for x in r] for r in rows]
    if not m:
        return [], []
    if p == 2:
        return _rref_f2(m)
    ncols = len(m[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = pow(m[r][c], -1, p)
        m[r] = [(x * inv) % p for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [(x - f * y) % p for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def rank(rows: Sequence[Sequence[int]], p: int) -> int:
    if not rows:
        return 0
    if p == 2:
        return _rank_f2(rows)
    return len(rref(rows, p)[1])


def span(rows: Iterable[Sequence[int]], p: int) -> Basis:
    """Canonical basis (reduced echelon form) of the span."""
    return tuple(tuple(r) for r in rref(rows, p)[0])


def kernel(rows: Sequence[Sequence[int]], ncols: int, p: int) -> Basis:
    """Basis of {x : row . x = 0 for every row}."""
    red, pivots = rref(rows, p)
    free = [c for c in range(ncols) if c not in pivots]
    out = []
    for f in free:
        v = [0] * ncols
        v[f] = 1
        for row, pc in zip(red, pivots):
            v[pc] = (-row[f]) % p
        out.append(tuple(v))
    return tuple(out)


def in_span(v: Sequence[int], rows: Sequence[Sequence[int]], p: int) -> bool:
    return rank(list(rows) + [v], p) == rank(rows, p)


def intersect(u: Sequence[Vector], w: Sequence[Vector], n: int, p: int) -> Basis:
    # U /\ W = annihilator of (ann U + ann W)
    ann = list(kernel(u, n, p)) + list(kernel(w, n, p))
    return span(kernel(ann, n, p), p) if ann else span(_identity(n), p)


def _identity(n: int) -> list[Vector]:
    return [tuple(1 if i == j else 0 for j in range(n)) for i in range(n)]


def _matvec_t(vec: Sequence[int], mat: Sequence[Sequence[int]], p: int) -> Vector:
    """vec^T mat."""
    return tuple(sum(vec[i] * mat[i][j] for i in range(len(vec))) % p for j in range(len(mat[0])))


def _combine(coeffs: Sequence[int], basis: Sequence[Vector], p: int, n: int) -> Vector:
    out = [0] * n
    for c, b in zip(coeffs, basis):
        if c:
            for i, x in enumerate(b):
                out[i] += c * x
    return tuple(x % p for x in out)


# -- local data -----------------------------------------------------------------


@dataclass(frozen=True)
class LocalPair:
    """A local space F_p^(2 h0) with a pairing against its dual and local conditions.

    ``pairing[i][j]`` is <e_i, f_j> for e the primal and f the dual basis.
    """

    name: str
    p: int
    h0: int
    pairing: tuple[tuple[int, ...], ...]
    un: Basis
    ram: Basis
    base: Basis | None = None  # the condition P, at the base place only

    @property
    def d(self) -> int:
        return 2 * self.h0

    def condition(self, label: str) -> Basis:
        return _condition(self, label)

    def _compute_condition(self, label: str) -> Basis:
        p, d = self.p, self.d
        if label == "un":
            return span(self.un, p)
        if label == "Ram":
            return span(self.ram, p)
        if label == "join":
            return span(list(self.un) + list(self.ram), p)
        if label == "meet":
            return intersect(self.un, self.ram, d, p)
        if label == "full":
            return span(_identity(d), p)
        if label == "zero":
            return ()
        if label == "P":
            if self.base is None:
                raise MalformedInstance(f"place {self.name} has no condition P")
            return span(self.base, p)
        raise MalformedInstance(f"unknown local condition {label!r}")

    def annihilator(self, primal_basis: Sequence[Vector]) -> Basis:
        """{y in the dual space : <x, y> = 0 for all x in the span}."""
        rows = [_matvec_t(x, self.pairing, self.p) for x in primal_basis]
        return span(kernel(rows, self.d, self.p), self.p) if rows else span(_identity(self.d), self.p)

    def primal_annihilator(self, dual_basis: Sequence[Vector]) -> Basis:
        """{x : <x, y> = 0 for all y in the span}."""
        rows = [tuple(sum(self.pairing[i][j] * y[j] for j in range(self.d)) % self.p for i in range(self.d)) for y in dual_basis]
        return span(kernel(rows, self.d, self.p), self.p) if rows else span(_identity(self.d), self.p)

    def dual_condition(self, label: str) -> Basis:
        return _dual_condition(self, label)

    def is_ramakrishna_pair(self) -> bool:
        p = self.p
        return (
            rank(self.un, p) == self.h0
            and rank(self.ram, p) == self.h0
            and rank(list(self.un) + list(self.ram), p) - rank(self.un, p) == 1
        )

    def is_nondegenerate(self) -> bool:
        return rank(self.pairing, self.p) == self.d

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "h0": self.h0,
            "pairing": [list(r) for r in self.pairing],
            "un": [list(v) for v in self.un],
            "Ram": [list(v) for v in self.ram],
            "P": None if self.base is None else [list(v) for v in self.base],
        }


@lru_cache(maxsize=16384)
def _condition(place: LocalPair, label: str) -> Basis:
    return place._compute_condition(label)


@lru_cache(maxsize=16384)
def _dual_condition(place: LocalPair, label: str) -> Basis:
    return place.annihilator(place.condition(label))


def canonical_place(name: str, p: int, base: bool = False) -> LocalPair:
    """h0 = 1: hyperbolic pairing, un = <e1>, Ram = <e2>, P = <e1>."""
    return LocalPair(
        name, p, 1, ((0, 1), (1, 0)), ((1, 0),), ((0, 1),), ((1, 0),) if base else None
    )


def _random_subspace(rng: random.Random, p: int, d: int, k: int) -> Basis:
    while True:
        rows = [tuple(rng.randrange(p) for _ in range(d)) for _ in range(k)]
        if rank(rows, p) == k:
            return span(rows, p)


def random_place(name: str, p: int, h0: int, rng: random.Random, base: bool = False) -> LocalPair:
    d = 2 * h0
    while True:
        pairing = tuple(tuple(rng.randrange(p) for _ in range(d)) for _ in range(d))
        if rank(pairing, p) == d:
            break
    un = _random_subspace(rng, p, d, h0)
    while True:
        # Ram shares an (h0-1)-dimensional subspace with un and leaves it in one direction
        shared = list(_random_subspace(rng, p, h0, h0 - 1)) if h0 > 1 else []
        common = [_combine(c, un, p, d) for c in shared]
        extra = tuple(rng.randrange(p) for _ in range(d))
        ram = common + [extra]
        if rank(ram, p) == h0 and rank(list(un) + ram, p) == h0 + 1:
            break
    return LocalPair(name, p, h0, pairing, un, span(ram, p), _random_subspace(rng, p, d, h0) if base else None)


# -- global data ----------------------------------------------------------------


@dataclass(frozen=True)
class SelmerInstance:
    p: int
    places: tuple[LocalPair, ...]
    primal: Basis  # basis of A inside the sum of local spaces
    dual: Basis  # basis of A^perp inside the sum of dual local spaces
    base: str = "sigma"
    q_unr: tuple[str, ...] = ()
    q_ram: tuple[str, ...] = ()

    @cached_property
    def total_dim(self) -> int:
        return sum(v.d for v in self.places)

    @property
    def g(self) -> int:
        return len(self.primal)

    @property
    def Q(self) -> tuple[str, ...]:
        return self.q_ram + self.q_unr

    @cached_property
    def _offsets(self) -> dict[str, slice]:
        out, off = {}, 0
        for v in self.places:
            out[v.name] = slice(off, off + v.d)
            off += v.d
        return out

    @cached_property
    def _primal_blocks(self) -> list[np.ndarray]:
        # per place: d x g matrix of local components of the global basis
        a = np.array(self.primal, dtype=np.int64).reshape(len(self.primal), self.total_dim)
        return [a[:, self._offsets[v.name]].T for v in self.places]

    @cached_property
    def _dual_blocks(self) -> list[np.ndarray]:
        a = np.array(self.dual, dtype=np.int64).reshape(len(self.dual), self.total_dim)
        return [a[:, self._offsets[v.name]].T for v in self.places]

    def place(self, name: str) -> LocalPair:
        for v in self.places:
            if v.name == name:
                return v
        raise KeyError(name)

    def _slice(self, name: str) -> slice:
        return self._offsets[name]

    def restrict(self, vec: Sequence[int], name: str) -> Vector:
        return tuple(vec[self._slice(name)])

    def to_local(self, x: Sequence[int]) -> Vector:
        """Image of a global class (coordinates in the primal basis)."""
        return _combine(x, self.primal, self.p, self.total_dim)

    def to_local_dual(self, y: Sequence[int]) -> Vector:
        return _combine(y, self.dual, self.p, self.total_dim)

    def problem(self, aux: Iterable[str] = (), **overrides: str) -> dict[str, str]:
        """P at the base place, Ram on ``aux``, un elsewhere, then overrides."""
        prob = {v.name: "un" for v in self.places}
        prob[self.base] = "P"
        for q in aux:
            prob[q] = "Ram"
        prob.update(overrides)
        return prob

    def check(self) -> None:
        p, D = self.p, self.total_dim
        if D % 2:
            raise MalformedInstance("odd total local dimension")
        if rank(self.primal, p) != D // 2 or rank(self.dual, p) != D // 2:
            raise MalformedInstance("global images must have dimension D/2")
        for x in self.primal:
            for y in self.dual:
                if self._pair(x, y):
                    raise MalformedInstance("dual image is not orthogonal to the primal image")
        for v in self.places:
            if not v.is_nondegenerate() or not v.is_ramakrishna_pair():
                raise MalformedInstance(f"bad local data at {v.name}")

    def _pair(self, x: Sequence[int], y: Sequence[int]) -> int:
        total = 0
        for v in self.places:
            s = self._slice(v.name)
            xs, ys = x[s], y[s]
            total += sum(xs[i] * v.pairing[i][j] * ys[j] for i in range(v.d) for j in range(v.d))
        return total % self.p

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "places": [v.to_dict() for v in self.places],
            "primal": [list(v) for v in self.primal],
            "dual": [list(v) for v in self.dual],
            "base": self.base,
            "q_unr": list(self.q_unr),
            "q_ram": list(self.q_ram),
        }


def _pairing_matrix(places: Sequence[LocalPair]) -> np.ndarray:
    D = sum(v.d for v in places)
    m = np.zeros((D, D), dtype=np.int64)
    off = 0
    for v in places:
        m[off : off + v.d, off : off + v.d] = v.pairing
        off += v.d
    return m


def dual_image(p: int, places: Sequence[LocalPair], primal: Sequence[Vector]) -> Basis:
    """Annihilator of the primal image under the sum of local pairings."""
    rows = (np.array(primal, dtype=np.int64) @ _pairing_matrix(places)) % p
    return span(kernel(rows.tolist(), sum(v.d for v in places), p), p)


def build_instance(
    p: int, places: Sequence[LocalPair], primal: Sequence[Vector], validate: bool = True, **kw
) -> SelmerInstance:
    primal = span(primal, p)
    inst = SelmerInstance(p, tuple(places), primal, dual_image(p, places, primal), **kw)
    if validate:
        inst.check()
    return inst


def random_instance(p: int, places: Sequence[LocalPair], rng: random.Random, **kw) -> SelmerInstance:
    D = sum(v.d for v in places)
    return build_instance(p, places, _random_subspace(rng, p, D, D // 2), **kw)


# -- Selmer groups --------------------------------------------------------------


@lru_cache(maxsize=4096)
def _local_constraint(place: LocalPair, label: str, dual: bool) -> np.ndarray:
    """Rows c with c . v = 0 exactly for v in the (dual) local condition."""
    cond = place.dual_condition(label) if dual else place.condition(label)
    rows = kernel(cond, place.d, place.p) if cond else tuple(_identity(place.d))
    return np.array(rows, dtype=np.int64).reshape(len(rows), place.d)


def _constraints(inst: SelmerInstance, problem: dict[str, str], dual: bool) -> list[list[int]]:
    """Rows c with c . (global coordinates) = 0 cutting out the Selmer group."""
    blocks = inst._dual_blocks if dual else inst._primal_blocks
    parts = [
        _local_constraint(v, problem.get(v.name, "un"), dual) @ block
        for v, block in zip(inst.places, blocks)
    ]
    return (np.concatenate(parts) % inst.p).tolist()


def selmer(inst: SelmerInstance, problem: dict[str, str]) -> Basis:
    """Basis (global coordinates) of the Selmer group for the given local conditions."""
    return kernel(_constraints(inst, problem, False), inst.g, inst.p)


def dual_selmer(inst: SelmerInstance, problem: dict[str, str]) -> Basis:
    return kernel(_constraints(inst, problem, True), len(inst.dual), inst.p)


@lru_cache(maxsize=16384)
def _embedded(place: LocalPair, label: str, dual: bool, offset: int, total: int) -> Basis:
    cond = place.dual_condition(label) if dual else place.condition(label)
    pad_l, pad_r = (0,) * offset, (0,) * (total - offset - place.d)
    return tuple(pad_l + tuple(c) + pad_r for c in cond)


def _intersection_dim(inst: SelmerInstance, problem: dict[str, str], dual: bool) -> int:
    # dim(A /\ L) = dim A + dim L - dim(A + L), with A the global image
    image = inst.dual if dual else inst.primal
    D = inst.total_dim
    local: list[Vector] = []
    for v in inst.places:
        local.extend(_embedded(v, problem.get(v.name, "un"), dual, inst._offsets[v.name].start, D))
    return len(image) + len(local) - rank(list(image) + local, inst.p)


def h1(inst: SelmerInstance, problem: dict[str, str]) -> int:
    return _intersection_dim(inst, problem, False)


def h1_dual(inst: SelmerInstance, problem: dict[str, str]) -> int:
    return _intersection_dim(inst, problem, True)


def wiles_delta(inst: SelmerInstance, problem: dict[str, str]) -> int:
    """sum_v (dim L_v - h0_v), from the local data alone."""
    return sum(rank(v.condition(problem.get(v.name, "un")), inst.p) - v.h0 for v in inst.places)


def wiles_ledger(inst: SelmerInstance, problem: dict[str, str]) -> dict:
    a, b, delta = h1(inst, problem), h1_dual(inst, problem), wiles_delta(inst, problem)
    return {"h1": a, "h1_dual": b, "delta": delta, "balanced": a - b == delta}


def is_auxiliary(inst: SelmerInstance, aux: Iterable[str], **overrides: str) -> bool:
    prob = inst.problem(aux, **overrides)
    return h1(inst, prob) == 0 and h1_dual(inst, prob) == 0


# -- the removal chase ----------------------------------------------------------


def chase_removal(inst: SelmerInstance, q: str | None = None) -> tuple[int, int]:
    """Selmer and dual Selmer dimensions after dropping q from the auxiliary set Q."""
    q = q or inst.q_unr[0]
    if q not in inst.Q:
        raise PreconditionError(f"{q} is not in Q")
    if not is_auxiliary(inst, inst.Q):
        raise PreconditionError("Q is not auxiliary")
    q0 = [x for x in inst.Q if x != q]
    prob = inst.problem(q0)
    b = h1_dual(inst, prob)
    if b == 0:
        raise PreconditionError(f"dual Selmer group vanishes after removing {q}")
    return h1(inst, prob), b


@dataclass(frozen=True)
class ForcingSetup:
    q: str
    q0: tuple[str, ...]
    psi: Vector  # global coordinates
    phi: Vector  # dual global coordinates


def forcing_setup(inst: SelmerInstance, q: str | None = None) -> ForcingSetup:
    q = q or inst.q_unr[0]
    dims = chase_removal(inst, q)
    if dims != (1, 1):
        raise ArithmeticError(f"removal chase gave {dims}, expected (1, 1)")
    q0 = tuple(x for x in inst.Q if x != q)
    prob = inst.problem(q0)
    return ForcingSetup(q, q0, selmer(inst, prob)[0], dual_selmer(inst, prob)[0])


# -- candidates and hypotheses ------------------------------------------------------


@dataclass(frozen=True)
class Candidate:
    local: LocalPair
    psi_res: Vector
    phi_res: Vector
    phi_tilde_res: Vector | None = None
    ram_type_prev: bool = True  # Ramakrishna type at level n-1
    ram_type_n: bool = False  # Ramakrishna type at level n


def make_candidate(
    inst: SelmerInstance,
    setup: ForcingSetup,
    name: str,
    phi_tilde: Vector | None = None,
    ram_type_prev: bool = True,
    ram_type_n: bool = False,
) -> Candidate:
    return Candidate(
        inst.place(name),
        inst.restrict(inst.to_local(setup.psi), name),
        inst.restrict(inst.to_local_dual(setup.phi), name),
        None if phi_tilde is None else inst.restrict(inst.to_local_dual(phi_tilde), name),
        ram_type_prev,
        ram_type_n,
    )


def check_hyp1(c: Candidate) -> bool:
    p = c.local.p
    return (
        in_span(c.psi_res, c.local.condition("meet"), p)
        and not in_span(c.phi_res, c.local.dual_condition("Ram"), p)
        and c.ram_type_prev
        and not c.ram_type_n
    )


def check_hyp2(c: Candidate) -> bool:
    if c.phi_tilde_res is None:
        raise PreconditionError("the second candidate needs the restriction of phi-tilde")
    p = c.local.p
    both_perp = c.local.dual_condition("join")  # un^perp /\ Ram^perp
    return (
        not in_span(c.psi_res, c.local.condition("meet"), p)
        and not in_span(c.phi_res, both_perp, p)
        and not in_span(c.phi_tilde_res, both_perp, p)
        and c.ram_type_prev
    )


@dataclass
class LemmaReport:
    dims: dict[str, int]
    equal_to_psi: bool
    phi_tilde: Vector | None
    independent: bool

    @property
    def passed(self) -> bool:
        return self.equal_to_psi and self.independent


def lemma_consequences(inst: SelmerInstance, setup: ForcingSetup, q1: str) -> LemmaReport:
    """The three Selmer groups at q1 (join, Ram, meet) and the new dual generator."""
    p = inst.p
    line = span([setup.psi], p)
    spaces = {label: span(selmer(inst, inst.problem(setup.q0, **{q1: label})), p) for label in ("join", "Ram", "meet")}
    dims = {k: len(v) for k, v in spaces.items()}
    equal = all(v == line for v in spaces.values())
    gen = dual_selmer(inst, inst.problem(setup.q0 + (q1,)))
    dims["dual"] = len(gen)
    phi_tilde = gen[0] if len(gen) == 1 else None
    independent = phi_tilde is not None and rank([setup.phi, phi_tilde], p) == 2
    return LemmaReport(dims, equal, phi_tilde, independent)


# -- forcing ------------------------------------------------------------------------


@dataclass
class ForcingVerdict:
    forced: bool
    reason: str
    escape: dict | None = None

    def to_dict(self) -> dict:
        return {"forced": self.forced, "reason": self.reason, "escape": self.escape}


def _escape_problems(inst: SelmerInstance, setup: ForcingSetup, q1: str, q2: str):
    """For i = 1, 2: h unramified at q, P-type on Q0, un at q_i, join at q_j."""
    for qi, qj in ((q1, q2), (q2, q1)):
        yield qi, inst.problem(setup.q0, **{qi: "un", qj: "join"})


def simulate_forcing(
    inst: SelmerInstance, setup: ForcingSetup, q1: str, q2: str, strict: bool = True
) -> ForcingVerdict:
    """Replay the two-prime argument: can the new lift be unramified at q1 or q2?

    If it were unramified at q_i, the difference class h lies in the Selmer
    group S_i (un at q_i, un + Ram at the other candidate).  The contradiction
    needs every nonzero h in S_i to restrict into Ram at q1; any h violating
    that is an escape and the verdict is "not forced".
    """
    if strict:
        c1 = make_candidate(inst, setup, q1)
        if not check_hyp1(c1):
            raise PreconditionError(f"{q1} fails the first hypothesis")
        lemma = lemma_consequences(inst, setup, q1)
        if lemma.phi_tilde is None:
            raise PreconditionError("no one-dimensional dual generator after adding q1")
        if not check_hyp2(make_candidate(inst, setup, q2, lemma.phi_tilde)):
            raise PreconditionError(f"{q2} fails the second hypothesis")
    new_set = setup.q0 + (q1, q2)
    if not is_auxiliary(inst, new_set):
        return ForcingVerdict(False, "new set not auxiliary", {"set": list(new_set)})
    p = inst.p
    ram = inst.place(q1).condition("Ram")
    for qi, prob in _escape_problems(inst, setup, q1, q2):
        # S_i restricts into Ram at q1 iff each basis vector does
        for h in selmer(inst, prob):
            if not in_span(inst.restrict(inst.to_local(h), q1), ram, p):
                return ForcingVerdict(False, f"unramified at {qi} is consistent", {"q": qi, "h": list(h)})
    return ForcingVerdict(True, f"ramification forced at {q1} and {q2}")


# -- brute-force oracle -------------------------------------------------------------


def _enumerate_span(basis: Sequence[Vector], p: int, n: int) -> set[Vector]:
    out = set()
    for coeffs in itertools.product(range(p), repeat=len(basis)):
        out.add(_combine(coeffs, basis, p, n))
    return out


@lru_cache(maxsize=4096)
def _oracle_members(place: LocalPair, label: str) -> frozenset[Vector]:
    p, d = place.p, place.d
    if label == "join":
        return frozenset(
            tuple((a + b) % p for a, b in zip(x, y))
            for x in _oracle_members(place, "un")
            for y in _oracle_members(place, "Ram")
        )
    if label == "meet":
        return _oracle_members(place, "un") & _oracle_members(place, "Ram")
    if label == "full":
        return frozenset(itertools.product(range(p), repeat=d))
    if label == "zero":
        return frozenset({tuple([0] * d)})
    return frozenset(_enumerate_span({"un": place.un, "Ram": place.ram, "P": place.base}[label], p, d))


@lru_cache(maxsize=4096)
def _oracle_dual_members(place: LocalPair, label: str) -> frozenset[Vector]:
    """Dual vectors pairing to zero with every member, found by trying them all."""
    p, d, m = place.p, place.d, place.pairing
    members = _oracle_members(place, label)
    return frozenset(
        y for y in itertools.product(range(p), repeat=d)
        if all(sum(x[i] * m[i][j] * y[j] for i in range(d) for j in range(d)) % p == 0 for x in members)
    )


class Oracle:
    """Answers by enumerating every vector; shares no code with the rank routines."""

    def __init__(self, inst: SelmerInstance):
        self.inst = inst

    @cached_property
    def classes(self) -> list[tuple[Vector, Vector]]:
        inst = self.inst
        return [(x, inst.to_local(x)) for x in itertools.product(range(inst.p), repeat=inst.g)]

    @cached_property
    def dual_classes(self) -> list[tuple[Vector, Vector]]:
        inst = self.inst
        return [(y, inst.to_local_dual(y)) for y in itertools.product(range(inst.p), repeat=len(inst.dual))]

    def members(self, place: str, label: str) -> frozenset[Vector]:
        return _oracle_members(self.inst.place(place), label)

    def _filter(self, classes, problem: dict[str, str], table) -> list[Vector]:
        inst = self.inst
        checks = [(inst._slice(v.name), table(v, problem.get(v.name, "un"))) for v in inst.places]
        return [x for x, loc in classes if all(loc[s] in mem for s, mem in checks)]

    def selmer(self, problem: dict[str, str]) -> list[Vector]:
        return self._filter(self.classes, problem, _oracle_members)

    def dual_selmer(self, problem: dict[str, str]) -> list[Vector]:
        return self._filter(self.dual_classes, problem, _oracle_dual_members)

    def dims(self, problem: dict[str, str]) -> tuple[int, int]:
        p = self.inst.p
        return _log(len(self.selmer(problem)), p), _log(len(self.dual_selmer(problem)), p)

    def forcing(self, setup: ForcingSetup, q1: str, q2: str) -> tuple[bool, Vector | None]:
        inst = self.inst
        if self.dims(inst.problem(setup.q0 + (q1, q2))) != (0, 0):
            return False, None
        ram = self.members(q1, "Ram")
        for qi, qj in ((q1, q2), (q2, q1)):
            for h in self.selmer(inst.problem(setup.q0, **{qi: "un", qj: "join"})):
                if inst.restrict(inst.to_local(h), q1) not in ram:
                    return False, h
        return True, None


def _log(n: int, p: int) -> int:
    k = 0
    while n > 1:
        if n % p:
            raise ArithmeticError("size is not a power of p")
        n //= p
        k += 1
    return k


# -- the unobstructed case -------------------------------------------------------------


VERDICTS = ("selmer_nonzero", "ramified", "contradiction", "bad_candidate")


def unobstructed_step(inst: SelmerInstance, q: str, ramified: bool, ram_type_level2: bool) -> dict:
    """Two-case argument when the base Selmer group vanishes.

    ``ramified``: whether the lift with Ram at q is ramified there.
    ``ram_type_level2``: whether the old lift mod ell^2 is of Ramakrishna type at q.
    """
    base = inst.problem()
    if h1(inst, base) != 0:
        raise PreconditionError("base Selmer group is nonzero")
    flags = dict.fromkeys(VERDICTS, False)
    if h1(inst, inst.problem([q])) != 0:
        flags["selmer_nonzero"] = True
    elif ramified:
        flags["ramified"] = True
    elif not ram_type_level2:
        # both deformation rings are O, so the lifts agree; but they differ mod ell^2
        flags["contradiction"] = True
    else:
        flags["bad_candidate"] = True
    verdict = next(k for k, v in flags.items() if v)
    return {"verdict": verdict, "flags": flags}


# -- campaigns ------------------------------------------------------------------------


def place_names(D: int) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Base place, auxiliary places and candidates for total local dimension D (h0 = 1)."""
    n = D // 2
    cands = ("q1", "q2")[: max(0, n - 2)]
    aux = tuple(f"t{i}" for i in range(1, n - len(cands)))
    return aux, cands


def subspaces_f2(D: int, k: int) -> Iterator[Basis]:
    """Every k-dimensional subspace of F_2^D, once, as a reduced echelon basis."""
    for pivots in itertools.combinations(range(D), k):
        slots = [(r, c) for r in range(k) for c in range(pivots[r] + 1, D) if c not in pivots]
        for bits in itertools.product((0, 1), repeat=len(slots)):
            rows = [[0] * D for _ in range(k)]
            for r, c in enumerate(pivots):
                rows[r][c] = 1
            for (r, c), b in zip(slots, bits):
                rows[r][c] = b
            yield tuple(tuple(r) for r in rows)


@dataclass
class CampaignReport:
    p: int
    total_dim: int
    mode: str
    instances: int = 0
    wiles_checked: int = 0
    chase_applicable: int = 0
    chase_ok: int = 0
    hyp1_holds: int = 0
    lemma_ok: int = 0
    forcing_compared: int = 0
    forcing_agree: int = 0
    forcing_strict_forced: int = 0
    unobstructed_checked: int = 0
    counterexamples: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.counterexamples

    def to_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "counterexamples"}
        d["counterexamples"] = self.counterexamples
        d["passed"] = self.passed
        return d


def examine(inst: SelmerInstance, report: CampaignReport, rng: random.Random, deep: bool = True) -> None:
    """Run every applicable check on one instance, recording failures.

    With ``deep=False`` the brute-force cross-check of the Wiles ledger is
    limited to instances where the removal chase applies.
    """
    report.instances += 1
    oracle = Oracle(inst)

    def fail(kind: str, **info):
        report.counterexamples.append({"kind": kind, "instance": inst.to_dict(), **info})

    prob = inst.problem(inst.Q)
    led = wiles_ledger(inst, prob)
    report.wiles_checked += 1
    if not led["balanced"]:
        fail("wiles", ledger=led)
    auxiliary = led["h1"] == 0 and led["h1_dual"] == 0

    if inst.Q and h1(inst, inst.problem()) == 0:
        out = unobstructed_step(inst, inst.Q[0], rng.random() < 0.5, rng.random() < 0.5)
        report.unobstructed_checked += 1
        if sum(out["flags"].values()) != 1:
            fail("unobstructed", report=out)

    applicable = False
    if inst.q_unr and auxiliary:
        q = inst.q_unr[0]
        q0 = tuple(x for x in inst.Q if x != q)
        applicable = h1_dual(inst, inst.problem(q0)) > 0
    if (deep or applicable) and oracle.dims(prob) != (led["h1"], led["h1_dual"]):
        fail("wiles_oracle", ledger=led)
    if not applicable:
        return
    report.chase_applicable += 1
    dims = chase_removal(inst, q)
    if dims != (1, 1) or oracle.dims(inst.problem(q0)) != dims:
        fail("chase", dims=list(dims))
        return
    report.chase_ok += 1
    setup = forcing_setup(inst, q)
    cands = [v.name for v in inst.places if v.name not in inst.Q and v.name != inst.base]
    if not cands:
        return
    q1 = cands[0]
    if check_hyp1(make_candidate(inst, setup, q1)):
        report.hyp1_holds += 1
        lemma = lemma_consequences(inst, setup, q1)
        if not lemma.passed:
            fail("lemma", dims=lemma.dims)
        else:
            report.lemma_ok += 1
    if len(cands) < 2:
        return
    q2 = cands[1]
    verdict = simulate_forcing(inst, setup, q1, q2, strict=False)
    forced, _ = oracle.forcing(setup, q1, q2)
    report.forcing_compared += 1
    if verdict.forced == forced:
        report.forcing_agree += 1
    else:
        fail("forcing_oracle", verdict=verdict.to_dict(), oracle_forced=forced)
    try:
        strict = simulate_forcing(inst, setup, q1, q2, strict=True)
    except PreconditionError:
        return
    if strict.forced:
        report.forcing_strict_forced += 1
    else:
        fail("forcing", verdict=strict.to_dict())


MAX_TOTAL_DIM = 12


def _check_budget(p: int, D: int) -> None:
    if p not in (2, 3, 5):
        raise ValueError(f"field size {p} not in (2, 3, 5)")
    if D % 2 or not 4 <= D <= MAX_TOTAL_DIM:
        raise ValueError(f"total local dimension {D} must be even and between 4 and {MAX_TOTAL_DIM}")


def run_exhaustive_f2(D: int) -> CampaignReport:
    _check_budget(2, D)
    if D > 8:
        raise ValueError("exhaustive enumeration is limited to D <= 8")
    aux, cands = place_names(D)
    places = [canonical_place("sigma", 2, base=True)] + [canonical_place(n, 2) for n in aux + cands]
    report = CampaignReport(2, D, "exhaustive")
    rng = random.Random(0)
    for primal in subspaces_f2(D, D // 2):
        inst = build_instance(2, places, primal, validate=False, q_unr=aux[:1], q_ram=aux[1:])
        examine(inst, report, rng, deep=False)
    return report


def run_random(p: int, D: int, trials: int, seed: int) -> CampaignReport:
    _check_budget(p, D)
    rng = random.Random(seed)
    aux, cands = place_names(D)
    report = CampaignReport(p, D, "random")
    for _ in range(trials):
        places = [random_place("sigma", p, 1, rng, base=True)] + [random_place(n, p, 1, rng) for n in aux + cands]
        inst = random_instance(p, places, rng, q_unr=aux[:1], q_ram=aux[1:])
        examine(inst, report, rng)
    return report
