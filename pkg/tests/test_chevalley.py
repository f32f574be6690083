import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import algebra
from exmono.chevalley import (
    AdElement,
    ModulusMismatch,
    PrimeTooSmall,
    ad_power_is_zero,
    exp_nilpotent_ad,
    nilpotency_index,
)
from exmono.modarith import matmul_mod
from exmono.root_data import EXCEPTIONAL

DIMS = {"A1": 3, "A2": 8, "G2": 14, "F4": 52, "E6": 78, "E7": 133, "E8": 248}
COXETER = {"G2": 6, "F4": 12, "E6": 12, "E7": 18, "E8": 30}


def unit(n, i, j):
    m = np.zeros((n, n), dtype=np.int64)
    m[i, j] = 1
    return m


def sl3_images(alg, s, t):
    """Candidate isomorphism onto 3x3 trace-zero matrices, signs s, t on the non-simple root vectors."""
    imgs = {"H1": unit(3, 0, 0) - unit(3, 1, 1), "H2": unit(3, 1, 1) - unit(3, 2, 2)}
    imgs["X[1,0]"], imgs["X[0,1]"], imgs["X[1,1]"] = unit(3, 0, 1), unit(3, 1, 2), s * unit(3, 0, 2)
    imgs["X[-1,0]"], imgs["X[0,-1]"], imgs["X[-1,-1]"] = unit(3, 1, 0), unit(3, 2, 1), t * unit(3, 2, 0)
    return [imgs[label] for label in alg.labels]


def test_a2_matches_matrix_commutators():
    alg = algebra("A2")
    found = False
    for s, t in itertools.product((1, -1), repeat=2):
        imgs = sl3_images(alg, s, t)
        ok = True
        for a, b in itertools.product(range(8), repeat=2):
            lhs = sum(int(c) * imgs[k] for k, c in enumerate(alg.tensor[a, b]))
            rhs = imgs[a] @ imgs[b] - imgs[b] @ imgs[a]
            if not np.array_equal(lhs, rhs):
                ok = False
                break
        found |= ok
    assert found


@pytest.mark.parametrize("label", ["A1", "A2", "G2", "F4", "E6", "E7", "E8"])
def test_jacobi_and_antisymmetry(label):
    alg = algebra(label)
    assert alg.dim == DIMS[label]
    assert alg.is_antisymmetric()
    assert alg.jacobi_failures() == []
    assert alg.chain_length_mismatches() == []


@pytest.mark.parametrize("label", ["G2", "F4"])
def test_killing_form_invariant_and_nondegenerate(label):
    alg = algebra(label)
    ads = [alg.ad_basis(i) for i in range(alg.dim)]
    kill = np.array([[np.trace(a @ b) for b in ads] for a in ads])
    assert np.linalg.matrix_rank(kill.astype(float)) == alg.dim
    t = alg.tensor.astype(np.int64)
    # K([a, b], c) = K(a, [b, c])
    lhs = np.einsum("abk,kc->abc", t, kill)
    rhs = np.einsum("ak,bck->abc", kill, t)
    assert np.array_equal(lhs, rhs)


@pytest.mark.parametrize("label", EXCEPTIONAL)
def test_chevalley_relations(label):
    alg = algebra(label)
    s = alg.system
    t = alg.tensor
    for beta in s.roots:
        b = alg.root_basis_index(beta)
        mb = alg.root_basis_index(tuple(-x for x in beta))
        assert np.array_equal(t[b, mb], alg.coroot_element(beta).coords)
        for i in range(s.rank):
            expected = np.zeros(alg.dim, dtype=np.int64)
            expected[b] = s.pairing(beta, i)
            assert np.array_equal(t[i, b], expected)
    for (a, b), n in alg.structure_constants.items():
        na, nb = tuple(-x for x in a), tuple(-x for x in b)
        assert alg.structure_constants[(na, nb)] == -n
    theta = s.highest_root
    assert alg.bracket(alg.x(theta), alg.x(tuple(-x for x in theta))) == alg.coroot_element(theta)


@pytest.mark.parametrize("label", EXCEPTIONAL)
def test_nilpotency_indices(label):
    alg = algebra(label)
    theta = alg.highest_root_vector()
    assert nilpotency_index(alg.ad_matrix(theta)) == 3
    assert ad_power_is_zero(alg, theta, 3) and not ad_power_is_zero(alg, theta, 2)
    x = alg.element({a: 1 for a in alg.system.simple_roots})
    assert nilpotency_index(alg.ad_matrix(x)) == 2 * COXETER[label] - 1


def test_nilpotency_index_non_nilpotent(alg_g2):
    assert nilpotency_index(alg_g2.ad_matrix(alg_g2.h(0))) is None


def g2_elements(bound=5):
    return st.lists(st.integers(-bound, bound), min_size=14, max_size=14).map(
        lambda c: AdElement(algebra("G2"), np.array(c))
    )


@settings(max_examples=50, deadline=None)
@given(g2_elements(), g2_elements(), g2_elements())
def test_bracket_properties(a, b, c):
    alg = a.algebra
    br = alg.bracket
    assert br(a, b) == -br(b, a)
    assert (br(a, br(b, c)) + br(b, br(c, a)) + br(c, br(a, b))).is_zero()
    assert br(a + b, c) == br(a, c) + br(b, c)
    assert np.array_equal(alg.ad_matrix(a) @ b.coords, br(a, b).coords)


@settings(max_examples=30, deadline=None)
@given(g2_elements(50), g2_elements(50))
def test_modular_bracket_is_reduction(a, b):
    m = 29 * 29
    alg = a.algebra
    assert alg.bracket(a.reduce(m), b.reduce(m)) == alg.bracket(a, b).reduce(m)


def test_modulus_mismatch(alg_g2):
    with pytest.raises(ModulusMismatch):
        alg_g2.bracket(alg_g2.h(0, 7), alg_g2.h(1, 11))


def test_element_keys(alg_g2):
    theta = alg_g2.system.highest_root
    by_root = alg_g2.element({theta: 2})
    by_label = alg_g2.element({"X[" + ",".join(map(str, theta)) + "]": 2})
    assert by_root == by_label == 2 * alg_g2.highest_root_vector()


@pytest.mark.parametrize("label", ["G2", "F4"])
def test_exp_is_automorphism(label):
    alg = algebra(label)
    ell = 29 if label == "G2" else 53
    x = alg.element({a: 1 for a in alg.system.simple_roots})
    g = exp_nilpotent_ad(x, ell)  # verifies the bracket internally
    ginv = exp_nilpotent_ad(-x, ell, verify=False)
    assert np.array_equal(matmul_mod(g, ginv, ell), np.eye(alg.dim, dtype=np.int64))
    assert alg.preserves_bracket(g, ell)
    bad = g.copy()
    bad[0, 0] = (bad[0, 0] + 1) % ell
    assert not alg.preserves_bracket(bad, ell)


def test_exp_refuses_small_prime(alg_g2):
    x = alg_g2.element({a: 1 for a in alg_g2.system.simple_roots})
    with pytest.raises(PrimeTooSmall):
        exp_nilpotent_ad(x, 11)  # nilpotency index is 11
    exp_nilpotent_ad(x, 13)


def test_exp_of_theta_truncates(alg_g2):
    theta = alg_g2.highest_root_vector()
    ad = alg_g2.ad_matrix(theta)
    m = 7**2
    expected = (np.eye(14, dtype=np.int64) + ad + (ad @ ad) * pow(2, -1, m)) % m
    assert np.array_equal(exp_nilpotent_ad(theta, 7, 2), expected)


def test_bracket_dump_deterministic(alg_g2):
    text = alg_g2.dump_bracket_table()
    assert text == algebra("G2").dump_bracket_table()
    assert text.startswith("# Chevalley bracket table, type G2")
    nonzero = sum(1 for a in range(14) for b in range(a + 1, 14) if alg_g2.tensor[a, b].any())
    assert len(text.strip().splitlines()) == nonzero + 1
