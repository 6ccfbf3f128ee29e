import pytest
from hypothesis import given

from ordproof import language as L
from ordproof import ordinals as O
from ordproof.sexpr import ParseError

from strategies import closed_delta0, delta0

P, T = L.parse, L.parse_term


def nat_eval(f, env=None):
    """Reference truth for Delta0 formulas over numerals, by plain recursion."""
    env = env or {}

    def term(t):
        if isinstance(t, L.Var):
            return env[t.name]
        if isinstance(t, L.Plus):
            return term(t.left) + term(t.right)
        return O.finite_value(t.val)

    if isinstance(f, L.Less):
        return (term(f.s) < term(f.t)) == f.pos
    if isinstance(f, L.Or):
        return nat_eval(f.left, env) or nat_eval(f.right, env)
    if isinstance(f, L.And):
        return nat_eval(f.left, env) and nat_eval(f.right, env)
    rng = range(term(f.bound))
    vals = (nat_eval(f.body, {**env, f.var: n}) for n in rng)
    return any(vals) if isinstance(f, L.ExB) else all(vals)


# negation

def test_negate_literal():
    a = P("(< x y)")
    assert L.negate(a) == L.Less(L.Var("x"), L.Var("y"), False)


def test_negate_de_morgan():
    got = L.negate(P("(ex x (and (< x 1) (< 1 x)))"))
    assert got == P("(all x (or (not (< x 1)) (not (< 1 x))))")


@given(delta0())
def test_negate_involution(a):
    assert L.negate(L.negate(a)) == a


# degrees and classes

@pytest.mark.parametrize("text,cls,d", [
    ("(< x y)", "Literal", 1),
    ("(exb x 3 (< x 2))", "Delta0", 1),
    ("(ex x (P x y))", "EForm", 3),
    ("(ex x (allb y 3 (< y x)))", "Sigma1", 3),
    ("(all x (< x 1))", "Pi1", 3),
])
def test_classify_and_degree(text, cls, d):
    assert L.classify(P(text)) == cls
    assert L.dg(P(text)) == d


def test_degree_of_disjunction_adds_two():
    a, b = P("(ex x (< x 1))"), P("(ex y (< y 1))")
    assert L.dg(L.Or(a, b)) == L.dg(a) + L.dg(b) + 2


def test_reflection_side_formula_degree():
    a = P("(ex z (ex w (and (Pr0 z) (< w z))))")
    assert L.dg(L.AllB("x", L.Var("z"), a)) == 10


def test_p_atom_is_not_delta0():
    f = P("(ex x (P x y))")
    assert not L.is_delta0(f) and L.is_eform(f)


# substitution and relativization

def test_subst_free_occurrence():
    assert L.subst(P("(< x s)"), "x", L.num(0)) == P("(< 0 s)")


def test_subst_under_binder_is_identity():
    f = P("(all x (< x y))")
    assert L.subst(f, "x", L.num(0)) == f


def test_subst_avoids_capture():
    got = L.subst(P("(ex y (< x y))"), "x", L.Var("y"))
    assert isinstance(got, L.Ex) and got.var != "y"
    assert got.body == L.Less(L.Var("y"), L.Var(got.var))


def test_relativize_unbounded_existential():
    assert L.relativize(P("(ex z (< z 1))"), L.Var("y")) == P("(exb z y (< z 1))")


def test_relativize_reflection_formula():
    a = P("(ex z (ex w (and (Pr0 z) (< w z))))")
    assert L.relativize(a, L.Var("y")) == P("(exb z y (exb w y (and (Pr0 z) (< w z))))")


@given(closed_delta0())
def test_relativize_delta0_identity(a):
    assert L.relativize(a, L.Var("y")) == a


# evaluation

def test_eval_term_examples():
    assert L.eval_term(T("(+ 0 w1)")) == O.OMEGA1
    assert L.eval_term(T("(+ w1 1)")) == O.parse("(+ w1 1)")
    assert L.eval_term(T("(+ 1 w1)")) == O.OMEGA1


def test_eval_literal_examples():
    assert L.eval_literal(P("(P (D0 (+ w1 0)) (F (+ w1 0)))")) is True
    assert L.eval_literal(P("(Pr0 w1)")) is False
    assert L.eval_literal(P("(Pr0 (D1 0))")) is True
    assert L.eval_literal(P("(< w1 1)")) is False


def test_eval_delta0_examples():
    assert L.eval_delta0(P("(exb x 3 (< x 2))")) is True
    assert L.eval_delta0(P("(allb x 2 (< x 2))")) is True


def test_transfinite_universal_is_undecided():
    assert L.eval_delta0(P("(allb x w1 (< x w1))")) is None


@given(closed_delta0())
def test_eval_matches_reference(a):
    assert L.eval_delta0(a) is nat_eval(a)


@given(closed_delta0())
def test_eval_negation_flips(a):
    assert L.eval_delta0(L.negate(a)) is (not L.eval_delta0(a))


def test_mj():
    assert L.mj(L.Var("y")) == O.RHO0
    assert L.mj(L.num(5)) == O.numeral(5)
    assert L.mj(T("(+ 0 w1)")) == O.OMEGA1


# text format

@given(delta0())
def test_formula_round_trip(a):
    assert P(L.to_str(a)) == a


def test_parse_errors():
    for bad in ("(< x)", "(ex (< x 1))", "(foo x y)", "(< x"):
        with pytest.raises(ParseError):
            P(bad)
