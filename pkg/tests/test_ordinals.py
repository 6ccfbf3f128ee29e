import pytest
from hypothesis import assume, given, settings

from ordproof import ordinals as O
from ordproof.cnf import CNF
from ordproof.ordinals import EQ, LT

import oracle
from strategies import eps0_terms, full_terms, mu_terms

P = O.parse
W1, R0 = O.OMEGA1, O.RHO0


# normal form

def test_zero_summand_dropped():
    assert O.normalize(O.Sum((O.ZERO, O.ONE))) == O.ONE


def test_epsilon_atom_absorbs_wpow():
    assert O.wpow(W1) == W1
    assert O.wpow(O.D(1, O.ZERO)) == O.D(1, O.ZERO)
    assert P("(w^ (F 0))") == O.F(O.ZERO)


def test_sum_sorted_non_increasing():
    assert O.normalize(O.Sum((O.ONE, R0))) == O.Sum((R0, O.ONE))


def test_nested_sum_flattened():
    t = P("(+ 1 (+ w1 1))")
    assert isinstance(t, O.Sum) and not any(isinstance(p, O.Sum) for p in t.parts)


@given(full_terms)
def test_round_trip(t):
    assert P(O.to_str(t)) == t


# compare

def test_compare_examples():
    assert O.compare(O.ZERO, O.ONE) is LT
    assert O.compare(W1, R0) is LT
    assert O.compare(O.D(0, P("(+ r0 w1)")), W1) is LT


def test_d0_below_omega1_d1_between():
    for a in ("0", "w1", "r0", "(+ r0 r0)", "(D1 (w^ r0))"):
        assert O.region(O.D(0, P(a))).tag == "Countable"
        assert O.region(O.D(1, P(a))).tag == "Middle"


@given(eps0_terms, eps0_terms, eps0_terms)
def test_sum_monotone_in_exponent(c, b1, b2):
    assume(O.compare(b1, b2) is LT)
    assert O.compare(O.nsum(c, O.wpow(b1)), O.nsum(c, O.wpow(b2))) is LT


@given(full_terms, full_terms)
def test_trichotomy_antisymmetry(a, b):
    c = O.compare(a, b)
    assert O.compare(b, a) is c.flip()
    assert (c is EQ) == (a == b)


@given(full_terms)
def test_irreflexive(a):
    assert O.compare(a, a) is EQ
    assert not O.lt(a, a)


@settings(max_examples=300)
@given(full_terms, full_terms, full_terms)
def test_transitive(a, b, c):
    if O.lt(a, b) and O.lt(b, c):
        assert O.lt(a, c)


@given(mu_terms, mu_terms)
def test_mu_comparisons_either_decide_or_raise(a, b):
    try:
        c = O.compare(a, b)
    except O.Undecidable:
        assert O.contains_mu(a) or O.contains_mu(b)
        return
    assert O.compare(b, a) is c.flip()


# arithmetic

def test_nsum_examples():
    assert O.nsum(O.ONE, O.ZERO) == O.ONE
    assert O.nsum(O.ONE, O.ONE) == O.numeral(2)
    assert O.nsum(O.OMEGA, P("(+ (w^ 1) 1)")) == P("(+ (w^ 1) (w^ 1) 1)")


def test_nprod_examples():
    a = P("(+ w1 (w^ 3) 2)")
    assert O.nprod(a, O.ONE) == a
    assert O.nprod(O.numeral(2), O.OMEGA) == P("(+ (w^ 1) (w^ 1))")
    assert O.nprod(O.numeral(2), R0) == P("(+ r0 r0)")


@given(full_terms, full_terms)
def test_nsum_commutative(a, b):
    assert O.nsum(a, b) == O.nsum(b, a)


@given(full_terms, full_terms, full_terms)
def test_nsum_associative(a, b, c):
    assert O.nsum(O.nsum(a, b), c) == O.nsum(a, O.nsum(b, c))


@given(eps0_terms, eps0_terms)
def test_nprod_commutative(a, b):
    assert O.nprod(a, b) == O.nprod(b, a)


@given(full_terms, full_terms)
def test_nsum_strictly_increases(a, b):
    assume(b != O.ZERO)
    assert O.lt(a, O.nsum(a, b))


def test_ordinary_sum_absorbs():
    assert O.osum(O.ONE, W1) == W1
    assert O.osum(W1, O.ONE) == P("(+ w1 1)")


# G-sets

def test_gset_examples():
    assert O.gset(O.ONE, O.ZERO) == frozenset()
    assert O.gset(O.D(1, O.ZERO), O.ONE) == frozenset()
    assert O.gset(O.ONE, O.D(1, W1)) == frozenset({W1})


@given(full_terms, full_terms)
def test_gset_empty_below(a, b):
    if O.lt(b, a):
        assert O.gset(a, b) == frozenset()


def test_gset_below_examples():
    assert O.gset_below(O.ONE, O.ZERO, O.ZERO)
    assert O.gset_below(O.ONE, O.D(1, W1), R0)
    assert not O.gset_below(O.ONE, O.D(1, R0), R0)


# regions and CNF bridge

@pytest.mark.parametrize("text,tag", [
    ("2", "Finite"),
    ("(F (+ r0 1))", "Countable"),
    ("(D0 0)", "Countable"),
    ("w1", "EqOmega1"),
    ("(D1 0)", "Middle"),
    ("r0", "EqRho0"),
    ("(w^ (+ r0 1))", "Above"),
])
def test_region(text, tag):
    assert O.region(P(text)).tag == tag


def test_region_finite_value():
    assert O.region(O.numeral(2)) == O.Region("Finite", 2)


def test_cnf_bridge_examples():
    assert O.to_cnf_small(O.ZERO) == CNF()
    assert O.to_cnf_small(P("(w^ (w^ 0))")) == CNF.omega_pow(CNF.nat(1))


def test_cnf_bridge_rejects_collapse():
    with pytest.raises(O.OutsideFragment):
        O.to_cnf_small(W1)


@given(eps0_terms, eps0_terms)
def test_package_cnf_matches_test_oracle(a, b):
    ca, cb = O.to_cnf_small(a), O.to_cnf_small(b)
    c = (ca > cb) - (ca < cb)
    assert c == oracle.ocmp(oracle.value(a), oracle.value(b))
    assert O.to_cnf_small(O.nsum(a, b)) == ca.nat_add(cb)


def test_exhaustive_small_terms():
    ts = oracle.normal_terms(8)
    for a in ts:
        va = oracle.value(a)
        for b in ts:
            vb = oracle.value(b)
            assert O.compare(a, b).value == oracle.ocmp(va, vb)
            assert oracle.value(O.nsum(a, b)) == oracle.osum(va, vb)
            assert oracle.value(O.nprod(a, b)) == oracle.oprod(va, vb)
