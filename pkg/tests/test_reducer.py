import json

import pytest

from ordproof import calculus as C
from ordproof import language as L
from ordproof import ordinals as O
from ordproof import reducer as R
from ordproof import transforms as T

import casefix as CF
import oracle

# (sentence, n) with some x < n a witness; bounds stay <= 5
SIGMA2 = [
    ("(ex x (allb y 3 (< y (+ x 3))))", 3),
    ("(ex x (allb y 4 (< y (+ x 1))))", 5),
    ("(ex x (allb y 2 (< (+ y y) x)))", 5),
    ("(ex x (allb y 5 (or (< y x) (< x y))))", 6),
    ("(ex x (and (< 2 x) (allb y x (< y 4))))", 5),
    ("(ex x (allb y 3 (< x (+ y 2))))", 3),
]


def brute_force(sentence):
    f = L.parse(sentence)
    return oracle.least_witness(lambda k: L.eval_delta0(L.subst(f.body, f.var, L.num(k))))


def embedded(sentence, n):
    return T.embed(T.witness_skeleton(L.parse(sentence), n))


# main branch

def test_top_of_embedded_proof_is_the_axiom():
    p, _ = embedded(*SIGMA2[0])
    t = R.top(p)
    assert p[t].rule == "ax"
    assert R.main_branch(p)[0] == p.root and R.main_branch(p)[-1] == t


def test_main_branch_takes_right_premise_at_cuts():
    p, _ = embedded(*SIGMA2[0])
    branch = R.main_branch(p)
    for a, b in zip(branch, branch[1:]):
        if p[a].rule == "cut":
            assert p[a].prem[1] == b


def test_main_branch_stops_at_ind():
    p, _ = CF.r3_unfold()
    assert p[R.top(p)].rule == "ind"


def test_main_branch_simple_chain():
    b = T.Builder()
    f = L.parse("(< 0 1)")
    a = b.add("ax", [f], main=(f,))
    h = b.add("h", [f], [a])
    d1 = b.add("D1", [f], [h], relativizer=O.D(1, O.ONE))
    d0 = b.add("D0", [f], [d1], relativizer=O.D(0, O.ONE))
    assert R.main_branch(b.figure(d0)) == [d0, d1, h, a]


# single steps

@pytest.mark.parametrize("case", R.CASES)
def test_each_case_descends_and_revalidates(case):
    p, st = CF.CASE_FIXTURES[case]()
    p2, st2, step = R.reduce_step(p, st)
    assert step.case == case
    assert O.compare(step.o_after, step.o_before) is O.LT
    assert C.validate(p2, st2)[0] == []
    assert C.assign(p2, st2).o[p2.root] == step.o_after


def test_every_case_has_a_fixture():
    assert set(CF.CASE_FIXTURES) == set(R.CASES) and len(R.CASES) == 13


def test_a2_stock_and_eliminated_literals():
    p, st = CF.a2()
    p2, st2, step = R.reduce_step(p, st)
    d1 = next(i for i, n in p.nodes.items() if n.rule == "D1")
    ell = O.D(1, st[d1])
    assert st2[d1] == O.nsum(st[d1], O.ONE)
    for f in (L.not_less(L.num(0), L.Const(ell)), L.PRhoAtom(L.Const(ell), False)):
        assert not any(f in n.concl for n in p2.nodes.values())


def test_a3_main_witness_terms():
    p, st = CF.a3_main()
    p2, st2, step = R.reduce_step(p, st)
    c0 = st[p.root]
    ell, s = O.D(0, c0), O.F(c0)
    assert L.eval_literal(L.PAtom(L.Const(ell), L.Const(s))) is True
    assert st2[p.root] == O.nsum(c0, O.ONE)
    for f in (L.not_less(L.Const(ell), L.OMEGA1_T), L.not_less(L.Const(s), L.OMEGA1_T)):
        assert not any(f in n.concl for n in p2.nodes.values())


def test_r3_unfold_inequality_instance():
    p, st = CF.r3_unfold()
    ann = C.assign(p, st)
    ind = next(n for n in p.nodes.values() if n.rule == "ind")
    a0, a1 = (ann.o[q] for q in ind.prem)
    two, three = O.numeral(2), O.numeral(3)
    new = O.nsum(O.nprod(O.nsum(a0, a1, two), two), a0, a1, O.ONE)
    old = O.nprod(O.nsum(a0, a1, two), three)
    assert O.lt(new, old)


def test_step_does_not_mutate_input():
    p, st = CF.r2()
    snapshot = (dict(p.nodes), dict(st))
    R.reduce_step(p, st)
    assert (p.nodes, st) == snapshot


def test_stocks_restricted_to_domain():
    p, st = CF.r2()
    p2, st2, _ = R.reduce_step(p, st)
    assert set(st2) == C.stock_domain(p2)


# runs

@pytest.mark.parametrize("sentence,n", SIGMA2)
def test_witness_matches_brute_force(sentence, n):
    p, st = embedded(sentence, n)
    out = R.run(p, st, max_steps=1000)
    assert out.tag == "witness"
    (var, term), = out.witness
    assert var == "x" and L.mj(term) == O.numeral(brute_force(sentence))
    assert len(out.trace) < 1000


def test_run_descends_strictly():
    p, st = embedded(*SIGMA2[1])
    out = R.run(p, st)
    for s in out.trace:
        assert O.lt(s.o_after, s.o_before)
    for a, b in zip(out.trace, out.trace[1:]):
        assert a.o_after == b.o_before


def test_true_literal_in_end_sequent_is_immediate():
    p, st = embedded(*SIGMA2[0])
    q = T.weaken(p, [L.parse("(< 0 1)")])
    out = R.run(q, st)
    assert out.tag == "witness" and out.trace == [] and out.formula == L.parse("(< 0 1)")


def test_zero_steps_is_step_limit():
    p, st = embedded(*SIGMA2[0])
    out = R.run(p, st, max_steps=0)
    assert out.tag == "step-limit" and out.trace == []
    assert str(out) == "STEP-LIMIT after 0 steps"


def test_strict_mode_stops_on_undecided_end_formula():
    p, st = CF.r1_psigma1()
    out = R.run(p, st)
    assert out.tag == "stuck" and "undecided" in out.diagnostic


def test_runs_are_deterministic():
    p, st = embedded(*SIGMA2[2])
    a = [s.to_json(i) for i, s in enumerate(R.run(p, st).trace)]
    b = [s.to_json(i) for i, s in enumerate(R.run(p, st).trace)]
    assert a == b


def test_trace_records():
    p, st = embedded(*SIGMA2[0])
    seen = []
    out = R.run(p, st, on_step=lambda i, s: seen.append(s.to_json(i)))
    assert len(seen) == len(out.trace)
    for i, rec in enumerate(seen):
        assert rec["v"] == R.TRACE_VERSION and rec["step"] == i
        assert set(rec) >= {"case", "o_before", "o_after", "added_formulas", "stocks"}
        assert O.lt(O.parse(rec["o_after"]), O.parse(rec["o_before"]))
        json.dumps(rec)


@pytest.mark.parametrize("case", R.CASES)
def test_case_fixture_runs_to_an_outcome(case):
    p, st = CF.CASE_FIXTURES[case]()
    out = R.run(p, st, max_steps=50)
    assert out.tag in ("witness", "stuck")
    if out.tag == "witness":
        assert C.validate(out.proof, out.stocks)[0] == []
