from fractions import Fraction
from math import factorial

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import algebra
from exmono.adjoint_modl import (
    GroupElementModLn,
    PreconditionError,
    element_order,
    exp_element,
    exp_ell_adic,
    random_element,
    torus_element,
    verify_no_section_expansion,
    verify_reg_surjectivity,
)
from exmono.chevalley import AdElement, exp_nilpotent_ad
from exmono.modarith import identity
from exmono.principal_sl2 import build_principal_triple
from exmono.root_data import EXCEPTIONAL, first_admissible_prime


def exp_series_oracle(ad, scale, prec_mod, terms=60):
    """sum_k (scale ad)^k / k! with exact rationals, then reduced mod prec_mod."""
    n = ad.shape[0]
    a = [[Fraction(int(ad[i, j]) * scale) for j in range(n)] for i in range(n)]
    total = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    power = [row[:] for row in total]
    for k in range(1, terms):
        power = [[sum(power[i][m] * a[m][j] for m in range(n)) for j in range(n)] for i in range(n)]
        for i in range(n):
            for j in range(n):
                total[i][j] += power[i][j] / factorial(k)
    out = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(n):
            x = total[i][j]
            out[i, j] = x.numerator * pow(x.denominator, -1, prec_mod) % prec_mod
    return out


@settings(max_examples=10, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=3, max_size=3))
def test_ell_adic_exp_matches_series(coords):
    alg = algebra("A1")
    z = AdElement(alg, np.array(coords))
    ell, n, prec = 5, 1, 3
    got = exp_ell_adic(alg, z, ell, n, prec)
    assert np.array_equal(got.matrix, exp_series_oracle(alg.ad_matrix(z), ell**n, ell**prec))


def test_ell_adic_exp_preserves_bracket():
    alg = algebra("G2")
    rng = np.random.default_rng(3)
    z = random_element(alg, rng, 29)
    g = exp_ell_adic(alg, z, 29, 1, 2)
    assert g.preserves_bracket(alg)
    assert g.is_invertible()


@given(st.integers(1, 6), st.integers(1, 6))
def test_torus_is_a_homomorphism(s, t):
    alg = algebra("G2")
    ell = 7
    cochar = (1, 2)
    a = torus_element(alg, cochar, s, ell)
    b = torus_element(alg, cochar, t, ell)
    assert a @ b == torus_element(alg, cochar, s * t % ell, ell)
    assert a.preserves_bracket(alg)


def test_torus_element_order():
    alg = algebra("G2")
    ell = 29
    g = torus_element(alg, (1, 0), 2, ell)
    # X_beta scales by 2^<beta, alpha_1^vee>; the pairings are coprime overall
    pairings = {alg.system.pairing(b, 0) for b in alg.system.roots}
    expected = int(sympy.n_order(2, ell)) // sympy.gcd(int(sympy.n_order(2, ell)), sympy.gcd(list(pairings)))
    assert element_order(g, cap=ell) == expected
    assert element_order(g, cap=ell, multiple=ell - 1) == expected
    with pytest.raises(ValueError):
        torus_element(alg, (1, 0), 29, ell)


def test_element_order_hint_validation():
    alg = algebra("G2")
    g = torus_element(alg, (1, 1), 3, 7)
    with pytest.raises(ValueError):
        element_order(g, cap=100, multiple=5)
    assert element_order(g, cap=1) in (None, 1)


@pytest.mark.parametrize("ell", [7, 11])
def test_unipotent_order_is_ell(ell):
    alg = algebra("G2")
    u = exp_element(alg.highest_root_vector(), ell, 1)
    assert element_order(u, cap=ell * ell) == ell


def test_theta_congruence_small():
    alg = algebra("G2")
    rep = verify_no_section_expansion(alg, 7, trials=10)
    assert rep.passed
    assert set(rep.orders) == {49}


def test_theta_congruence_higher_n():
    alg = algebra("G2")
    rep = verify_no_section_expansion(alg, 7, n=2, trials=5)
    assert rep.passed and set(rep.orders) == {7**3}


def test_no_section_preconditions():
    alg = algebra("G2")
    with pytest.raises(PreconditionError):
        verify_no_section_expansion(alg, 5, trials=1)
    with pytest.raises(PreconditionError):
        verify_no_section_expansion(alg, 19, trials=1, variant="principal")
    with pytest.raises(PreconditionError):
        verify_no_section_expansion(alg, 29, n=2, trials=1, variant="principal")
    with pytest.raises(ValueError):
        verify_no_section_expansion(alg, 29, trials=1, variant="other")


def test_principal_variant_g2_at_23():
    rep = verify_no_section_expansion(algebra("G2"), 23, trials=5, variant="principal")
    assert rep.passed


def test_group_element_arithmetic():
    alg = algebra("A1")
    g = GroupElementModLn(identity(3), 5, 2)
    assert g.is_identity() and g.modulus == 25
    with pytest.raises(ValueError):
        g @ GroupElementModLn(identity(3), 5, 1)
    assert (g ** 7).is_identity()


@pytest.mark.parametrize("label", EXCEPTIONAL)
def test_reg_at_floor_prime(label):
    alg = algebra(label)
    s = alg.system
    rep = verify_reg_surjectivity(alg, first_admissible_prime(s))
    assert rep.passed
    assert rep.image_dim == len(s.positive_roots)
    assert rep.kernel_dim == s.rank


def test_reg_preconditions():
    alg = algebra("G2")
    with pytest.raises(PreconditionError):
        verify_reg_surjectivity(alg, 5)  # not above h
    with pytest.raises(PreconditionError):
        verify_reg_surjectivity(alg, 7)  # exp(ad X) undefined: nilpotency index 11
    assert verify_reg_surjectivity(alg, 13).passed


def test_reg_a1_direct():
    # sl2 with gamma = exp(ad e): 1 - Ad(gamma) kills e and maps h to a multiple of e
    alg = algebra("A1")
    rep = verify_reg_surjectivity(alg, 7)
    assert rep.passed and rep.image_dim == 1 and rep.kernel_dim == 1


def test_principal_exponential_reduces_mod_ell():
    # exp(ad(ell X)) is the identity mod ell but not mod ell^2
    alg = algebra("G2")
    X = build_principal_triple(alg).X
    m = exp_nilpotent_ad(AdElement(alg, 23 * X.coords), 23, 2, verify=False)
    assert not np.array_equal(m, identity(14))
    assert np.array_equal(m % 23, identity(14))
