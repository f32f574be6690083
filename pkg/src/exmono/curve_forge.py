"""Build an elliptic curve over Q with prescribed behaviour at ell, p0 and p1.

The curve is glued by CRT from three local Weierstrass models:

* mod ell: a short Weierstrass curve with trace a (found by point counting),
* mod p0^2: ``y^2 + xy = x^3 - 5 p0 x - p0`` (split multiplicative, v(Delta) = 1),
* mod p1^2: ``y^2 = x^3 - 3 p1 x - 2 p1`` (additive, v(Delta) = 2, v(j) = 1).

``verify_certificate`` recomputes every local condition from the global
equation alone.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

import numpy as np
import sympy

from .modarith import crt_pair, rational_valuation, valuation
from .root_data import RootSystem, build_root_system, inadmissibility_reasons, is_admissible


class BadReduction(ValueError):
    pass


class SearchExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class WeierstrassEquation:
    a1: int
    a2: int
    a3: int
    a4: int
    a6: int

    @property
    def coefficients(self) -> tuple[int, int, int, int, int]:
        return (self.a1, self.a2, self.a3, self.a4, self.a6)

    @property
    def b2(self) -> int:
        return self.a1**2 + 4 * self.a2

    @property
    def b4(self) -> int:
        return 2 * self.a4 + self.a1 * self.a3

    @property
    def b6(self) -> int:
        return self.a3**2 + 4 * self.a6

    @property
    def b8(self) -> int:
        a1, a2, a3, a4, a6 = self.coefficients
        return a1**2 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3**2 - a4**2

    @property
    def c4(self) -> int:
        return self.b2**2 - 24 * self.b4

    @property
    def c6(self) -> int:
        return -self.b2**3 + 36 * self.b2 * self.b4 - 216 * self.b6

    @property
    def discriminant(self) -> int:
        b2, b4, b6, b8 = self.b2, self.b4, self.b6, self.b8
        return -(b2**2) * b8 - 8 * b4**3 - 27 * b6**2 + 9 * b2 * b4 * b6

    @property
    def j(self) -> Fraction:
        return Fraction(self.c4**3, self.discriminant)

    def reduce(self, m: int) -> tuple[int, ...]:
        return tuple(c % m for c in self.coefficients)

    def to_dict(self) -> dict:
        return {
            "a1": self.a1, "a2": self.a2, "a3": self.a3, "a4": self.a4, "a6": self.a6,
            "c4": self.c4, "c6": self.c6, "discriminant": self.discriminant,
            "j_numerator": self.j.numerator, "j_denominator": self.j.denominator,
        }


# -- point counting -----------------------------------------------------------


def _squares_table(p: int) -> np.ndarray:
    chi = -np.ones(p, dtype=np.int64)
    chi[(np.arange(1, p, dtype=np.int64) ** 2) % p] = 1
    chi[0] = 0
    return chi


def count_points_naive(eq: WeierstrassEquation, p: int) -> int:
    a1, a2, a3, a4, a6 = eq.reduce(p)
    total = 1
    for x in range(p):
        rhs = (x**3 + a2 * x**2 + a4 * x + a6) % p
        for y in range(p):
            if (y * y + a1 * x * y + a3 * y - rhs) % p == 0:
                total += 1
    return total


def count_points_fp(eq: WeierstrassEquation, p: int) -> int:
    """|E(F_p)| including infinity.

    For odd p, completing the square gives (2y + a1 x + a3)^2 = 4x^3 + b2 x^2 + 2 b4 x + b6,
    so the count is 1 + sum_x (1 + chi(rhs(x))).
    """
    if eq.discriminant % p == 0:
        raise BadReduction(f"bad reduction at {p}")
    if p == 2:
        return count_points_naive(eq, p)
    x = np.arange(p, dtype=np.int64)
    b2, b4, b6 = eq.b2 % p, eq.b4 % p, eq.b6 % p
    rhs = (((4 * x + b2) % p * x % p + 2 * b4) % p * x + b6) % p
    n = 1 + p + int(_squares_table(p)[rhs].sum())
    a = p + 1 - n
    if a * a > 4 * p:
        raise ArithmeticError(f"Hasse bound violated at {p}: a={a}")
    return n


def trace_of_frobenius(eq: WeierstrassEquation, p: int) -> int:
    return p + 1 - count_points_fp(eq, p)


def find_trace_curve(ell: int, a: int, seed: int = 0, budget: int = 200_000) -> WeierstrassEquation:
    """Random search for y^2 = x^3 + A x + B over F_ell with ell + 1 - a points."""
    if ell <= 3 or not sympy.isprime(ell):
        raise ValueError(f"ell={ell} must be a prime above 3")
    if gcd(a, ell) != 1:
        raise ValueError(f"trace {a} is not prime to {ell}")
    if a * a >= 4 * ell:
        raise ValueError(f"trace {a} violates |a| < 2 sqrt({ell})")
    rng = random.Random(seed)
    for _ in range(budget):
        A, B = rng.randrange(ell), rng.randrange(ell)
        eq = WeierstrassEquation(0, 0, 0, A, B)
        if eq.discriminant % ell == 0:
            continue
        if count_points_fp(eq, ell) == ell + 1 - a:
            return eq
    raise SearchExhausted(f"no curve with trace {a} mod {ell} after {budget} tries")


def default_trace(ell: int) -> int:
    """Smallest a >= 2 with a, a^2 - 1 prime to ell and |a| < 2 sqrt(ell)."""
    a = 2
    while (a * a - 1) % ell == 0 or a % ell == 0:
        a += 1
    if a * a >= 4 * ell:
        raise ValueError(f"no admissible trace for ell={ell}")
    return a


# -- auxiliary primes and local models ----------------------------------------------


def choose_auxiliaries(ell: int, h: int) -> tuple[int, int]:
    p0 = 3
    while p0 == ell or sympy.n_order(p0, ell) < h:
        p0 = sympy.nextprime(p0)
    p1 = 5
    while p1 % 3 != 2 or p1 in (ell, p0):
        p1 = sympy.nextprime(p1)
    return p0, p1


@dataclass(frozen=True)
class LocalModel:
    equation: WeierstrassEquation  # exact integral model
    modulus: int

    def residues(self) -> tuple[int, ...]:
        return self.equation.reduce(self.modulus)


def multiplicative_model(p0: int) -> WeierstrassEquation:
    return WeierstrassEquation(1, 0, 0, -5 * p0, -p0)


def additive_model(p1: int) -> WeierstrassEquation:
    return WeierstrassEquation(0, 0, 0, -3 * p1, -2 * p1)


def local_models(p0: int, p1: int) -> tuple[LocalModel, LocalModel]:
    return LocalModel(multiplicative_model(p0), p0 * p0), LocalModel(additive_model(p1), p1 * p1)


def crt_lift(trace_curve: WeierstrassEquation, ell: int, m0: LocalModel, m1: LocalModel) -> WeierstrassEquation:
    """Least nonnegative coefficients congruent to all three models."""
    coeffs = []
    for c_ell, c0, c1 in zip(trace_curve.reduce(ell), m0.residues(), m1.residues()):
        r, m = crt_pair(c_ell, ell, c0, m0.modulus)
        r, m = crt_pair(r, m, c1, m1.modulus)
        coeffs.append(r)
    eq = WeierstrassEquation(*coeffs)
    if eq.discriminant == 0:
        eq = WeierstrassEquation(*coeffs[:4], coeffs[4] + m)
    if eq.discriminant == 0:
        raise ArithmeticError("degenerate lift")
    return eq


def reductions_match(eq: WeierstrassEquation, trace_curve: WeierstrassEquation, ell: int, m0: LocalModel, m1: LocalModel) -> bool:
    return (
        eq.reduce(ell) == trace_curve.reduce(ell)
        and eq.reduce(m0.modulus) == m0.residues()
        and eq.reduce(m1.modulus) == m1.residues()
    )


# -- certificate ----------------------------------------------------------------


@dataclass
class Check:
    ok: bool
    value: object

    def to_dict(self) -> dict:
        return {"ok": self.ok, "value": self.value}


def _val(n: int, p: int) -> int | None:
    return None if n == 0 else valuation(n, p)


def _rval(x: Fraction, p: int) -> int | None:
    return None if x == 0 else rational_valuation(x, p)


@dataclass
class SeedCertificate:
    type_label: str | None
    ell: int
    h: int
    a_ell: int
    p0: int
    p1: int
    equation: WeierstrassEquation
    checks: dict[str, Check]
    surjectivity_samples: list[tuple[int, int]] = field(default_factory=list)
    borel_test: dict | None = None

    @property
    def accepted(self) -> bool:
        return all(c.ok for c in self.checks.values())

    def failures(self) -> list[str]:
        return [name for name, c in self.checks.items() if not c.ok]

    def to_dict(self) -> dict:
        return {
            "type_label": self.type_label,
            "ell": self.ell,
            "h": self.h,
            "a_ell": self.a_ell,
            "p0": self.p0,
            "p1": self.p1,
            "equation": self.equation.to_dict(),
            "checks": {k: v.to_dict() for k, v in self.checks.items()},
            "accepted": self.accepted,
            "surjectivity_samples": [list(s) for s in self.surjectivity_samples],
            "borel_test": self.borel_test,
        }


def verify_certificate(
    equation: WeierstrassEquation,
    ell: int,
    p0: int,
    p1: int,
    a: int,
    type_label: str | None = None,
    h: int | None = None,
) -> SeedCertificate:
    """Recompute every local condition from the global equation.

    Either ``type_label`` or ``h`` must be given (h enters the order condition on p0).
    """
    system: RootSystem | None = build_root_system(type_label) if type_label else None
    if h is None:
        if system is None:
            raise ValueError("need type_label or h")
        h = system.coxeter_number
    disc, c4, c6 = equation.discriminant, equation.c4, equation.c6
    checks: dict[str, Check] = {}
    if system is not None:
        checks["admissible"] = Check(is_admissible(system, ell), ell)
    checks["trace_pm1"] = Check(a % ell not in (1, ell - 1), a % ell)
    checks["ordinary"] = Check(a % ell != 0, a % ell)
    checks["trace_sq"] = Check((a * a - 1) % ell != 0, (a * a) % ell)
    checks["hasse"] = Check(a * a < 4 * ell, a)
    good_ell = disc % ell != 0
    checks["good_reduction_ell"] = Check(good_ell, _val(disc, ell))
    npts = count_points_fp(equation, ell) if good_ell else None
    checks["point_count"] = Check(npts == ell + 1 - a, npts)
    order = int(sympy.n_order(p0, ell)) if p0 % ell else 0
    checks["p0_order"] = Check(order >= h, order)
    checks["p0_disc_val"] = Check(_val(disc, p0) == 1, _val(disc, p0))
    checks["p0_c4_val"] = Check(_val(c4, p0) == 0, _val(c4, p0))
    neg_c6 = (-c6) % p0
    split = neg_c6 != 0 and sympy.is_quad_residue(neg_c6, p0)
    checks["p0_split"] = Check(bool(split), neg_c6)
    checks["p1_mod3"] = Check(p1 % 3 == 2 and p1 >= 5, p1 % 3)
    v4 = _val(c4, p1)
    checks["p1_c4_val"] = Check(v4 is None or v4 >= 1, v4)
    checks["p1_disc_val"] = Check(_val(disc, p1) == 2, _val(disc, p1))
    j = equation.j
    checks["p1_j_val"] = Check(_rval(j, p1) == 1, _rval(j, p1))
    checks["p1_j1728_val"] = Check(_rval(j - 1728, p1) == 0, _rval(j - 1728, p1))
    return SeedCertificate(type_label, ell, h, a, p0, p1, equation, checks)


def validate_hodge_cocharacter(system: RootSystem, ell: int, r_values) -> bool:
    r = list(r_values)
    if len(r) != system.rank:
        return False
    ok = all(x > 0 and (x - 1) % (ell - 1) == 0 for x in r)
    if system.type_label == "E6":
        ok = ok and len(set(r)) == len(r)
    return ok


# -- image evidence -------------------------------------------------------------


def sample_image_evidence(equation: WeierstrassEquation, ell: int, bound: int) -> list[tuple[int, int]]:
    """(p, a_p mod ell) for every good prime p <= bound."""
    disc = equation.discriminant
    out = []
    for p in sympy.primerange(2, bound + 1):
        if disc % p:
            out.append((int(p), trace_of_frobenius(equation, int(p)) % ell))
    return out


def _character_values(q: int, ell: int) -> list[dict[int, int]]:
    """All characters (Z/q)^x -> F_ell^x, as tables residue -> value."""
    g = sympy.primitive_root(q)
    zeta = sympy.primitive_root(ell)
    d = gcd(q - 1, ell - 1)
    log = {}
    x = 1
    for k in range(q - 1):
        log[x] = k
        x = x * g % q
    chars = []
    for k in range(d):
        c = k * (ell - 1) // d
        chars.append({r: pow(zeta, c * lg, ell) for r, lg in log.items()})
    return chars


def borel_compatibility_test(samples: list[tuple[int, int]], ell: int, p0: int, p1: int) -> dict:
    """Look for eps1 = omega^i eta with a_p = eps1(p) + p / eps1(p) mod ell on all samples.

    eta ranges over characters of (Z/p0)^x x (Z/p1)^x valued in F_ell^x and
    omega is the mod-ell cyclotomic character.  Also records the first sampled
    prime whose Frobenius polynomial x^2 - a_p x + p has no root mod ell, which
    alone rules out every reducible semisimplification.
    """
    usable = [(p, ap) for p, ap in samples if p not in (ell, p0, p1)]
    witness = None
    for p, ap in usable:
        if not any((x * x - ap * x + p) % ell == 0 for x in range(1, ell)):
            witness = p
            break
    found = None
    tried = 0
    chars0, chars1 = _character_values(p0, ell), _character_values(p1, ell)
    for i in range(ell - 1):
        for k0, e0 in enumerate(chars0):
            for k1, e1 in enumerate(chars1):
                tried += 1
                good = True
                for p, ap in usable:
                    eps1 = pow(p, i, ell) * e0[p % p0] * e1[p % p1] % ell
                    eps2 = p * pow(eps1, -1, ell) % ell
                    if (eps1 + eps2 - ap) % ell:
                        good = False
                        break
                if good:
                    found = {"omega_power": i, "eta_p0": k0, "eta_p1": k1}
                    break
            if found:
                break
        if found:
            break
    return {
        "pairs_tested": tried,
        "primes_used": len(usable),
        "no_borel_pair": found is None,
        "borel_pair": found,
        "irreducible_charpoly_prime": witness,
    }


# -- end-to-end -------------------------------------------------------------------


@dataclass
class ForgeResult:
    certificate: SeedCertificate
    trace_curve: WeierstrassEquation
    models: tuple[LocalModel, LocalModel]

    @property
    def reductions_ok(self) -> bool:
        c = self.certificate
        return reductions_match(c.equation, self.trace_curve, c.ell, *self.models)


def forge_seed_curve(
    type_label: str, ell: int, seed: int = 0, trace: int | None = None, sample_bound: int = 1000
) -> ForgeResult:
    system = build_root_system(type_label)
    if not is_admissible(system, ell):
        reasons = "; ".join(inadmissibility_reasons(system, ell))
        raise ValueError(f"ell={ell} is not admissible for {type_label}: {reasons}")
    h = system.coxeter_number
    a = default_trace(ell) if trace is None else trace
    trace_curve = find_trace_curve(ell, a, seed=seed)
    p0, p1 = choose_auxiliaries(ell, h)
    m0, m1 = local_models(p0, p1)
    eq = crt_lift(trace_curve, ell, m0, m1)
    cert = verify_certificate(eq, ell, p0, p1, a, type_label=type_label)
    cert.surjectivity_samples = sample_image_evidence(eq, ell, sample_bound)
    cert.borel_test = borel_compatibility_test(cert.surjectivity_samples, ell, p0, p1)
    return ForgeResult(cert, trace_curve, (m0, m1))

