"""Adjoint-group elements over Z/ell^n: torus elements, unipotent lifts and their orders."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import sympy

from .chevalley import AdElement, ChevalleyAlgebra, PrimeTooSmall, exp_nilpotent_ad
from .modarith import factorial_valuation, identity, matmul_mod, matpow_mod, nullspace_mod_p, rank_mod_p
from .principal_sl2 import build_principal_triple


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GroupElementModLn:
    """An element of the adjoint group, held as its matrix on g over Z/ell^n."""

    matrix: np.ndarray
    ell: int
    n: int
    provenance: tuple[str, ...] = ()

    @property
    def modulus(self) -> int:
        return self.ell**self.n

    def __matmul__(self, other: "GroupElementModLn") -> "GroupElementModLn":
        if (self.ell, self.n) != (other.ell, other.n):
            raise ValueError("elements over different rings")
        return GroupElementModLn(
            matmul_mod(self.matrix, other.matrix, self.modulus), self.ell, self.n, self.provenance + other.provenance
        )

    def __pow__(self, e: int) -> "GroupElementModLn":
        return GroupElementModLn(matpow_mod(self.matrix, e, self.modulus), self.ell, self.n, self.provenance + (f"^{e}",))

    def __eq__(self, other) -> bool:
        if not isinstance(other, GroupElementModLn):
            return NotImplemented
        return (self.ell, self.n) == (other.ell, other.n) and bool((self.matrix == other.matrix).all())

    __hash__ = None

    def is_identity(self) -> bool:
        return bool((self.matrix == identity(self.matrix.shape[0])).all())

    def is_invertible(self) -> bool:
        return rank_mod_p(self.matrix, self.ell) == self.matrix.shape[0]

    def preserves_bracket(self, algebra: ChevalleyAlgebra) -> bool:
        return algebra.preserves_bracket(self.matrix, self.modulus)


def torus_element(algebra: ChevalleyAlgebra, cochar, t: int, ell: int, n: int = 1) -> GroupElementModLn:
    """cochar(t): scales X_beta by t^<beta, cochar>, fixes the Cartan subalgebra.

    ``cochar`` is given in simple-coroot coordinates.
    """
    m = ell**n
    if t % ell == 0:
        raise ValueError(f"t={t} is not a unit mod {m}")
    s = algebra.system
    diag = [1] * algebra.rank + [pow(t, s.coroot_pairing(beta, tuple(cochar)), m) for beta in s.roots]
    mat = np.diag(np.array(diag, dtype=np.int64)) % m
    return GroupElementModLn(mat, ell, n, (f"cochar{tuple(cochar)}({t})",))


def exp_element(a: AdElement, ell: int, n: int = 1, verify: bool = False) -> GroupElementModLn:
    return GroupElementModLn(exp_nilpotent_ad(a, ell, n, verify=verify), ell, n, (f"exp({a.support()})",))


def exp_ell_adic(algebra: ChevalleyAlgebra, z: AdElement, ell: int, n: int, prec: int) -> GroupElementModLn:
    """exp(ell^n ad z) mod ell^prec, for any z (nilpotency not needed once n >= 1)."""
    if n < 1:
        raise ValueError("n must be positive")
    m = ell**prec
    ad = algebra.ad_matrix(AdElement(algebra, z.coords)) % m
    result = identity(algebra.dim) % m
    power = identity(algebra.dim) % m
    k = 1
    # n k - v(k!) > k (n - 1/(ell-1)), so terms vanish once k (n(ell-1) - 1) >= prec (ell-1)
    while k * (n * (ell - 1) - 1) < prec * (ell - 1):
        power = matmul_mod(power, ad, m)
        v = factorial_valuation(k, ell)
        shift = n * k - v
        if shift < prec:
            unit = 1
            for j in range(1, k + 1):
                while j % ell == 0:
                    j //= ell
                unit *= j
            coef = (ell**shift * pow(unit, -1, m)) % m
            result = (result + coef * power) % m
        k += 1
    return GroupElementModLn(result, ell, prec, (f"exp({ell}^{n} ad z)",))


def element_order(g: GroupElementModLn, cap: int, multiple: int | None = None) -> int | None:
    """Multiplicative order of g, or None if it exceeds ``cap``.

    With ``multiple`` (a known multiple of the order) the order is found by
    stripping prime factors; otherwise by a linear scan of powers.
    """
    if multiple is not None:
        if not (g**multiple).is_identity():
            raise ValueError(f"{multiple} is not a multiple of the order")
        order = multiple
        for p in sympy.factorint(multiple):
            while order % p == 0 and (g ** (order // p)).is_identity():
                order //= p
        return order if order <= cap else None
    power = g
    for k in range(1, cap + 1):
        if power.is_identity():
            return k
        power = power @ g
    return None


# -- the no-section congruences ------------------------------------------------


@dataclass
class NoSectionReport:
    variant: str
    ell: int
    n: int
    trials: int
    passed: bool
    orders: list[int] = field(default_factory=list)
    witness: dict | None = None

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "ell": self.ell,
            "n": self.n,
            "trials": self.trials,
            "passed": self.passed,
            "orders": sorted(set(self.orders)),
            "witness": self.witness,
        }


def random_element(algebra: ChevalleyAlgebra, rng: np.random.Generator, modulus: int) -> AdElement:
    return AdElement(algebra, rng.integers(0, modulus, size=algebra.dim))


def verify_no_section_expansion(
    algebra: ChevalleyAlgebra,
    ell: int,
    n: int = 1,
    trials: int = 100,
    variant: str = "theta",
    seed: int = 0,
    check_orders: bool = True,
) -> NoSectionReport:
    """Sample lifts u = exp(ell^n ad z) exp(ad X) mod ell^(n+1) and test Ad(u)^(ell^n).

    variant "theta": X = X_theta and Ad(u)^(ell^n) must equal 1 + ell^n ad(X_theta),
    so u never has order ell^n.  variant "principal": X is the principal
    nilpotent, n = 1, and Ad(u)^ell must equal exp(ad(ell X)), which is not 1.
    """
    h = algebra.system.coxeter_number
    if variant == "theta":
        if ell <= 5:
            raise PreconditionError(f"ell={ell}: the theta congruence needs ell > 5")
        X = algebra.highest_root_vector()
    elif variant == "principal":
        if n != 1:
            raise PreconditionError("the principal variant is stated for n = 1")
        if ell <= 4 * h - 3:
            raise PreconditionError(f"ell={ell}: the principal variant needs ell > 4h-3 = {4 * h - 3}")
        X = build_principal_triple(algebra).X
    else:
        raise ValueError(f"unknown variant {variant!r}")
    if not sympy.isprime(ell):
        raise PreconditionError(f"{ell} is not prime")

    prec = n + 1
    m = ell**prec
    base = exp_element(X, ell, prec)
    if variant == "theta":
        target = (identity(algebra.dim) + ell**n * algebra.ad_matrix(X)) % m
    else:
        target = exp_nilpotent_ad(AdElement(algebra, ell * X.coords), ell, prec, verify=False)
        if (target == identity(algebra.dim)).all():
            return NoSectionReport(variant, ell, n, 0, False, witness={"reason": "exp(ad(ell X)) is the identity"})

    rng = np.random.default_rng(seed)
    report = NoSectionReport(variant, ell, n, trials, True)
    for trial in range(trials):
        z = random_element(algebra, rng, ell)
        u = exp_ell_adic(algebra, z, ell, n, prec) @ base
        power = u ** (ell**n)
        ok = bool((power.matrix == target).all())
        if ok and check_orders and variant == "theta":
            order = element_order(u, cap=ell**prec, multiple=ell**prec)
            report.orders.append(order)
            ok = order != ell**n
        if not ok:
            report.passed = False
            report.witness = {"trial": trial, "z": [int(x) for x in z.coords]}
            break
    return report


# -- (REG) --------------------------------------------------------------------


@dataclass
class RegReport:
    ell: int
    image_dim: int
    expected_image_dim: int
    image_in_nilradical: bool
    kernel_dim: int
    expected_kernel_dim: int
    kernel_in_nilradical: bool

    @property
    def passed(self) -> bool:
        return (
            self.image_dim == self.expected_image_dim
            and self.image_in_nilradical
            and self.kernel_dim == self.expected_kernel_dim
            and self.kernel_in_nilradical
        )

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["passed"] = self.passed
        return d


def verify_reg_surjectivity(algebra: ChevalleyAlgebra, ell: int) -> RegReport:
    """For gamma = exp(ad X), X principal: 1 - Ad(gamma) maps b onto n, kernel on g inside n."""
    h = algebra.system.coxeter_number
    if not sympy.isprime(ell) or ell <= h:
        raise PreconditionError(f"ell={ell} must be a prime above h={h}")
    X = build_principal_triple(algebra).X
    try:
        gamma = exp_nilpotent_ad(X, ell, 1, verify=False)
    except PrimeTooSmall as exc:
        raise PreconditionError(str(exc)) from exc
    m = (identity(algebra.dim) - gamma) % ell
    borel = algebra.borel_indices()
    nil = set(algebra.nilradical_indices())
    outside = [i for i in range(algebra.dim) if i not in nil]
    restricted = m[:, borel]
    kernel = nullspace_mod_p(m, ell)
    return RegReport(
        ell=ell,
        image_dim=rank_mod_p(restricted, ell),
        expected_image_dim=len(nil),
        image_in_nilradical=not restricted[outside].any(),
        kernel_dim=kernel.shape[0],
        expected_kernel_dim=algebra.rank,
        kernel_in_nilradical=not kernel[:, outside].any(),
    )
