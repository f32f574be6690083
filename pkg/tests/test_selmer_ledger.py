import functools
import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy.polys.domains import GF
from sympy.polys.matrices import DomainMatrix

from exmono.selmer_ledger import (
    MalformedInstance,
    Oracle,
    PreconditionError,
    VERDICTS,
    build_instance,
    canonical_place,
    chase_removal,
    check_hyp1,
    check_hyp2,
    dual_selmer,
    forcing_setup,
    h1,
    h1_dual,
    in_span,
    intersect,
    is_auxiliary,
    kernel,
    lemma_consequences,
    make_candidate,
    place_names,
    random_instance,
    random_place,
    rank,
    run_exhaustive_f2,
    run_random,
    selmer,
    simulate_forcing,
    span,
    subspaces_f2,
    unobstructed_step,
    wiles_delta,
    wiles_ledger,
)

fields = st.sampled_from([2, 3, 5])


def gf_rank(rows, p, ncols):
    if not rows:
        return 0
    return DomainMatrix([[GF(p)(x) for x in r] for r in rows], (len(rows), ncols), GF(p)).rank()


@st.composite
def matrices(draw, max_rows=6, max_cols=6):
    p = draw(fields)
    r, c = draw(st.integers(1, max_rows)), draw(st.integers(1, max_cols))
    rows = [tuple(draw(st.integers(0, p - 1)) for _ in range(c)) for _ in range(r)]
    return p, rows, c


@given(matrices())
def test_rank_span_kernel(data):
    p, rows, c = data
    r = gf_rank(rows, p, c)
    assert rank(rows, p) == r
    assert len(span(rows, p)) == r
    ker = kernel(rows, c, p)
    assert len(ker) == c - r
    for v in ker:
        assert all(sum(a * b for a, b in zip(row, v)) % p == 0 for row in rows)
    for row in rows:
        assert in_span(row, span(rows, p), p)


def enumerate_span(basis, p, n):
    out = set()
    for coeffs in itertools.product(range(p), repeat=len(basis)):
        out.add(tuple(sum(c * b[i] for c, b in zip(coeffs, basis)) % p for i in range(n)))
    return out


@settings(max_examples=60)
@given(matrices(4, 4), st.integers(0, 2**32))
def test_intersection_matches_enumeration(data, seed):
    p, rows, n = data
    rng = random.Random(seed)
    other = [tuple(rng.randrange(p) for _ in range(n)) for _ in range(rng.randint(1, 3))]
    got = intersect(span(rows, p), span(other, p), n, p)
    assert enumerate_span(got, p, n) == enumerate_span(rows, p, n) & enumerate_span(other, p, n)


def test_canonical_place():
    v = canonical_place("q", 3)
    assert v.is_ramakrishna_pair() and v.is_nondegenerate()
    assert v.condition("un") == ((1, 0),) and v.condition("Ram") == ((0, 1),)
    assert len(v.condition("join")) == 2 and v.condition("meet") == ()
    assert v.dual_condition("un") == ((1, 0),)  # hyperbolic pairing: <e1>^perp = <f1>
    with pytest.raises(MalformedInstance):
        v.condition("P")
    with pytest.raises(MalformedInstance):
        v.condition("nonsense")


@settings(max_examples=30, deadline=None)
@given(fields, st.integers(1, 3), st.integers(0, 2**32))
def test_random_place_properties(p, h0, seed):
    rng = random.Random(seed)
    v = random_place("v", p, h0, rng, base=True)
    assert v.is_ramakrishna_pair() and v.is_nondegenerate()
    for label in ("un", "Ram", "join", "meet", "full", "zero", "P"):
        cond = v.condition(label)
        dual = v.dual_condition(label)
        assert len(cond) + len(dual) == v.d
        # annihilators are mutual
        assert rank(v.primal_annihilator(dual), p) == len(cond)
        for x in cond:
            assert in_span(x, v.primal_annihilator(dual), p)


def places_for(p, D, rng=None):
    aux, cands = place_names(D)
    if rng is None:
        return aux, cands, [canonical_place("sigma", p, base=True)] + [canonical_place(n, p) for n in aux + cands]
    return aux, cands, [random_place("sigma", p, 1, rng, base=True)] + [random_place(n, p, 1, rng) for n in aux + cands]


@settings(max_examples=40, deadline=None)
@given(fields, st.sampled_from([4, 6]), st.integers(0, 2**32))
def test_wiles_formula_and_oracle(p, D, seed):
    rng = random.Random(seed)
    aux, cands, places = places_for(p, D, rng)
    inst = random_instance(p, places, rng, q_unr=aux[:1], q_ram=aux[1:])
    oracle = Oracle(inst)
    labels = ("P", "un", "Ram", "join", "meet", "full", "zero")
    for _ in range(4):
        prob = {v.name: rng.choice(labels if v.base else labels[1:]) for v in inst.places}
        led = wiles_ledger(inst, prob)
        assert led["balanced"]
        assert oracle.dims(prob) == (led["h1"], led["h1_dual"])
        assert len(selmer(inst, prob)) == led["h1"] and len(dual_selmer(inst, prob)) == led["h1_dual"]


def test_instance_check_rejects():
    aux, cands, places = places_for(2, 4)
    inst = build_instance(2, places, [(1, 0, 0, 0), (0, 0, 1, 0)], q_unr=aux)
    assert inst.g == 2 and len(inst.dual) == 2
    with pytest.raises(MalformedInstance):
        build_instance(2, places, [(1, 0, 0, 0)])
    assert inst.to_dict()["p"] == 2


def test_absent_places_default_to_un():
    aux, cands, places = places_for(3, 6)
    inst = random_instance(3, places, random.Random(1), q_unr=aux[:1], q_ram=aux[1:])
    full = inst.problem()
    partial = {inst.base: "P"}
    assert h1(inst, full) == h1(inst, partial) and h1_dual(inst, full) == h1_dual(inst, partial)
    assert wiles_delta(inst, full) == wiles_delta(inst, partial)


@functools.lru_cache(maxsize=None)
def find_chase_instance(D=8):
    """First F_2 instance (in enumeration order) where both candidate hypotheses hold."""
    aux, cands, places = places_for(2, D)
    for primal in subspaces_f2(D, D // 2):
        inst = build_instance(2, places, primal, validate=False, q_unr=aux[:1], q_ram=aux[1:])
        if not is_auxiliary(inst, inst.Q):
            continue
        q0 = tuple(x for x in inst.Q if x != inst.q_unr[0])
        if h1_dual(inst, inst.problem(q0)) == 0:
            continue
        setup = forcing_setup(inst)
        if check_hyp1(make_candidate(inst, setup, cands[0])):
            lemma = lemma_consequences(inst, setup, cands[0])
            if check_hyp2(make_candidate(inst, setup, cands[1], lemma.phi_tilde)):
                return inst, setup, cands
    raise AssertionError("no instance satisfying both hypotheses")


def test_forcing_end_to_end():
    inst, setup, (q1, q2) = find_chase_instance()
    assert chase_removal(inst) == (1, 1)
    lemma = lemma_consequences(inst, setup, q1)
    assert lemma.passed and lemma.dims == {"join": 1, "Ram": 1, "meet": 1, "dual": 1}
    verdict = simulate_forcing(inst, setup, q1, q2)
    assert verdict.forced
    assert Oracle(inst).forcing(setup, q1, q2) == (True, None)


def test_forcing_preconditions():
    inst, setup, (q1, q2) = find_chase_instance()
    with pytest.raises(PreconditionError):
        check_hyp2(make_candidate(inst, setup, q2))
    bad = make_candidate(inst, setup, q1, ram_type_n=True)
    assert not check_hyp1(bad)
    with pytest.raises(PreconditionError):
        chase_removal(inst, "q1")


def test_unobstructed_step_flags():
    aux, cands, places = places_for(3, 6)
    rng = random.Random(5)
    seen = set()
    for _ in range(200):
        inst = random_instance(3, places, rng, q_unr=aux[:1], q_ram=aux[1:])
        if h1(inst, inst.problem()) != 0:
            with pytest.raises(PreconditionError):
                unobstructed_step(inst, aux[0], True, True)
            continue
        for ramified, level2 in itertools.product((True, False), repeat=2):
            out = unobstructed_step(inst, aux[0], ramified, level2)
            assert sum(out["flags"].values()) == 1
            assert out["verdict"] in VERDICTS
            seen.add(out["verdict"])
    assert {"ramified", "contradiction", "bad_candidate"} <= seen


def test_subspace_enumeration_counts():
    # Gaussian binomials over F_2
    assert sum(1 for _ in subspaces_f2(4, 2)) == 35
    assert sum(1 for _ in subspaces_f2(6, 3)) == 1395
    subs = list(subspaces_f2(4, 2))
    assert len({frozenset(enumerate_span(b, 2, 4)) for b in subs}) == 35


@pytest.mark.parametrize("D", [4, 6])
def test_exhaustive_small(D):
    rep = run_exhaustive_f2(D)
    assert rep.passed
    assert rep.chase_ok == rep.chase_applicable
    assert rep.forcing_agree == rep.forcing_compared


@pytest.mark.parametrize("p,D", [(3, 8), (5, 8), (3, 10)])
def test_random_campaigns(p, D):
    rep = run_random(p, D, 60, seed=11)
    assert rep.passed, rep.counterexamples[:1]
    assert rep.wiles_checked == 60


def test_budget_guard():
    with pytest.raises(ValueError):
        run_random(2, 20, 1, 0)
    with pytest.raises(ValueError):
        run_random(7, 8, 1, 0)
    with pytest.raises(ValueError):
        run_exhaustive_f2(10)



@settings(max_examples=40, deadline=None)
@given(fields, st.integers(0, 2**32))
def test_enlarging_a_condition_never_lowers_h1(p, seed):
    rng = random.Random(seed)
    aux, cands, places = places_for(p, 8, rng)
    inst = random_instance(p, places, rng, q_unr=aux[:1], q_ram=aux[1:])
    name = rng.choice([v.name for v in inst.places if not v.base])
    chain = [("zero", "meet"), ("meet", "un"), ("meet", "Ram"), ("un", "join"), ("Ram", "join"), ("join", "full")]
    for small, big in chain:
        lo = h1(inst, inst.problem(**{name: small}))
        hi = h1(inst, inst.problem(**{name: big}))
        assert lo <= hi
        # and dually the dual Selmer group can only shrink
        assert h1_dual(inst, inst.problem(**{name: small})) >= h1_dual(inst, inst.problem(**{name: big}))
