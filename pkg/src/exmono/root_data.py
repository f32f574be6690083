"""Root systems of the exceptional types (plus A1, A2 for brute-force tests).

Conventions
-----------
Simple roots follow Bourbaki numbering.  The Cartan matrix is
``A[i][j] = <alpha_i, alpha_j^vee> = 2 (alpha_i, alpha_j) / (alpha_j, alpha_j)``
so that ``<beta, alpha_j^vee> = sum_i beta_i A[i][j]`` for a root ``beta``
written in simple-root coordinates.  In G2, ``alpha_1`` is short; in F4,
``alpha_1, alpha_2`` are long.  E6/E7/E8 use the chain 1-3-4-5-... with
``alpha_2`` attached to ``alpha_4``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np
import sympy

SUPPORTED = ("A1", "A2", "G2", "F4", "E6", "E7", "E8")
EXCEPTIONAL = ("G2", "F4", "E6", "E7", "E8")

# Excluded from the admissible range for E8 in addition to the 4h-1 bound.
E8_EXCLUDED_PRIMES = frozenset({229, 269, 367})

Root = tuple[int, ...]


def _e_series(n: int) -> list[list[int]]:
    a = [[2 if i == j else 0 for j in range(n)] for i in range(n)]
    edges = [(0, 2), (1, 3), (2, 3)] + [(k, k + 1) for k in range(3, n - 1)]
    for i, j in edges:
        a[i][j] = a[j][i] = -1
    return a


_CARTAN = {
    "A1": [[2]],
    "A2": [[2, -1], [-1, 2]],
    "G2": [[2, -1], [-3, 2]],
    "F4": [[2, -1, 0, 0], [-1, 2, -2, 0], [0, -1, 2, -1], [0, 0, -1, 2]],
    "E6": _e_series(6),
    "E7": _e_series(7),
    "E8": _e_series(8),
}


class UnsupportedType(ValueError):
    pass


@dataclass(frozen=True)
class RootSystem:
    type_label: str
    rank: int
    cartan_matrix: tuple[tuple[int, ...], ...]
    roots: tuple[Root, ...]
    positive_roots: tuple[Root, ...]
    simple_roots: tuple[Root, ...]
    highest_root: Root
    coxeter_number: int
    sc_center_order: int
    minus_one_in_weyl: bool
    # (alpha_i, alpha_i) / 2, normalised so short roots have squared length 2
    half_norms: tuple[int, ...] = field(repr=False)

    @property
    def h(self) -> int:
        return self.coxeter_number

    @cached_property
    def root_index(self) -> dict[Root, int]:
        return {r: i for i, r in enumerate(self.roots)}

    @property
    def is_exceptional(self) -> bool:
        return self.type_label in EXCEPTIONAL

    def pairing(self, beta: Root, j: int) -> int:
        """<beta, alpha_j^vee>."""
        return sum(b * self.cartan_matrix[i][j] for i, b in enumerate(beta))

    def coroot_pairing(self, beta: Root, cochar: tuple[int, ...]) -> int:
        """<beta, sum_j c_j alpha_j^vee> for a cocharacter in coroot coordinates."""
        return sum(c * self.pairing(beta, j) for j, c in enumerate(cochar) if c)

    def inner(self, a: Root, b: Root) -> int:
        """Invariant form with short roots of squared length 2."""
        total = 0
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    if bj:
                        total += ai * bj * self.cartan_matrix[i][j] * self.half_norms[j]
        return total

    def coroot(self, beta: Root) -> tuple[int, ...]:
        """Coordinates of beta^vee in the basis of simple coroots."""
        norm = self.inner(beta, beta)
        coords = []
        for i, b in enumerate(beta):
            c = Fraction(b * 2 * self.half_norms[i], norm)
            if c.denominator != 1:
                raise ArithmeticError(f"non-integral coroot for {beta}")
            coords.append(int(c))
        return tuple(coords)

    def height(self, beta: Root) -> int:
        return sum(beta)

    def reflect(self, beta: Root, j: int) -> Root:
        k = self.pairing(beta, j)
        return tuple(b - (k if i == j else 0) for i, b in enumerate(beta))

    def is_root(self, beta: Root) -> bool:
        return beta in self.root_index


def _half_norms(cartan: list[list[int]]) -> tuple[int, ...]:
    # d_i A[i][j] ... symmetrise: (alpha_i, alpha_j) = A[i][j] * d_j with d = |alpha|^2 / 2
    n = len(cartan)
    d: list[Fraction | None] = [None] * n
    d[0] = Fraction(1)
    stack = [0]
    while stack:
        i = stack.pop()
        for j in range(n):
            if i != j and cartan[i][j] != 0 and d[j] is None:
                # A[i][j] d_j = A[j][i] d_i
                d[j] = d[i] * cartan[j][i] / cartan[i][j]
                stack.append(j)
    smallest = min(d)
    return tuple(int(x / smallest) for x in d)


def _positive_roots(cartan: list[list[int]]) -> list[Root]:
    n = len(cartan)
    simple = [tuple(1 if k == i else 0 for k in range(n)) for i in range(n)]
    found = set(simple)
    layer = list(simple)
    ordered = list(simple)
    while layer:
        nxt: list[Root] = []
        for beta in layer:
            for i in range(n):
                # alpha_i-string through beta: beta - q alpha_i, ..., beta + p alpha_i
                q = 0
                while True:
                    cand = tuple(b - (q + 1 if k == i else 0) for k, b in enumerate(beta))
                    if cand in found:
                        q += 1
                    else:
                        break
                pair = sum(b * cartan[k][i] for k, b in enumerate(beta))
                if q - pair > 0:
                    up = tuple(b + (1 if k == i else 0) for k, b in enumerate(beta))
                    if up not in found:
                        found.add(up)
                        nxt.append(up)
        nxt.sort(reverse=True)
        ordered.extend(nxt)
        layer = nxt
    return ordered


def _minus_one_in_weyl(cartan: list[list[int]], positive: set[Root]) -> bool:
    # Build the longest element by right-multiplying simple reflections while
    # some simple root is still sent to a positive root; w0 = -1 iff it negates
    # every simple root.
    n = len(cartan)
    w = np.eye(n, dtype=np.int64)  # columns are images of simple roots
    refl = []
    for j in range(n):
        s = np.eye(n, dtype=np.int64)
        for i in range(n):
            s[j, i] -= cartan[i][j]
        refl.append(s)
    while True:
        for j in range(n):
            if tuple(int(x) for x in w[:, j]) in positive:
                w = w @ refl[j]
                break
        else:
            return bool((w == -np.eye(n, dtype=np.int64)).all())


def build_root_system(type_label: str) -> RootSystem:
    if type_label not in _CARTAN:
        raise UnsupportedType(f"unsupported type {type_label!r}; expected one of {SUPPORTED}")
    cartan = _CARTAN[type_label]
    n = len(cartan)
    positive = _positive_roots(cartan)
    roots = positive + [tuple(-x for x in r) for r in positive]
    if len(roots) % n:
        raise ArithmeticError("root count not divisible by rank")
    top = max(positive, key=sum)
    return RootSystem(
        type_label=type_label,
        rank=n,
        cartan_matrix=tuple(tuple(row) for row in cartan),
        roots=tuple(roots),
        positive_roots=tuple(positive),
        simple_roots=tuple(positive[:n]),
        highest_root=top,
        coxeter_number=len(roots) // n,
        sc_center_order=int(round(np.linalg.det(np.array(cartan, dtype=float)))),
        minus_one_in_weyl=_minus_one_in_weyl(cartan, set(positive)),
        half_norms=_half_norms(cartan),
    )


# -- admissible primes ---------------------------------------------------------


def hypothesis3_bound(system: RootSystem) -> int:
    """The quantity that ell - 1 must strictly exceed."""
    z, h = system.sc_center_order, system.coxeter_number
    parity_term = (h - 1) * z if z % 2 == 0 else (2 * h - 2) * z
    return max(8 * z, parity_term)


def admissible_prime_floor(system: RootSystem) -> int:
    """Smallest prime strictly above 4h - 1."""
    if not system.is_exceptional:
        raise UnsupportedType(f"{system.type_label} is not exceptional")
    return sympy.nextprime(4 * system.coxeter_number - 1)


def admissibility_report(system: RootSystem, ell: int) -> dict[str, bool]:
    return {
        "prime": bool(sympy.isprime(ell)),
        "above_4h_minus_1": ell > 4 * system.coxeter_number - 1,
        "not_excluded": not (system.type_label == "E8" and ell in E8_EXCLUDED_PRIMES),
        "hypothesis3": ell - 1 > hypothesis3_bound(system),
    }


def inadmissibility_reasons(system: RootSystem, ell: int) -> list[str]:
    """Human-readable list of the admissibility conditions that ell fails."""
    rep = admissibility_report(system, ell)
    h = system.coxeter_number
    why = []
    if not rep["prime"]:
        why.append(f"{ell} is not prime")
    if not rep["above_4h_minus_1"]:
        why.append(f"ell must exceed 4h-1 = {4 * h - 1}")
    if not rep["not_excluded"]:
        why.append(f"ell={ell} is excluded for E8 ({', '.join(map(str, sorted(E8_EXCLUDED_PRIMES)))})")
    if not rep["hypothesis3"]:
        why.append(f"ell-1 must exceed {hypothesis3_bound(system)}")
    return why


def is_admissible(system: RootSystem, ell: int) -> bool:
    return all(admissibility_report(system, ell).values())


def first_admissible_prime(system: RootSystem) -> int:
    ell = admissible_prime_floor(system)
    while not is_admissible(system, ell):
        ell = sympy.nextprime(ell)
    return ell
