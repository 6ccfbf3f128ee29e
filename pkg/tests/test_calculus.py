from dataclasses import replace
from pathlib import Path

import pytest

from ordproof import calculus as C
from ordproof import language as L
from ordproof import ordinals as O
from ordproof import transforms as T
from ordproof.sexpr import ParseError

import casefix as CF

FIX = Path(__file__).parent / "fixtures"
F = L.parse


@pytest.fixture(scope="module")
def desk():
    return T.embed(T.loads_skeleton((FIX / "desk.skel").read_text()))


def clauses(p, st):
    return {d.clause for d in C.validate(p, st)[0]}


# rule schemata

def test_taut_on_literal_accepted():
    a = F("(< x 2)")
    b = T.Builder()
    root = b.add("taut", [F("(< 0 9)"), L.negate(a), a], main=(a, L.negate(a)))
    assert not C.rule_check(b.figure(root))


def test_cut_on_universal_rejected():
    b = T.Builder(prefix="q")
    cf = F("(all x (< x 1))")
    right = b.add("taut", [cf, L.negate(cf)], main=(cf, L.negate(cf)))
    p, st = CF.finish(b, CF._with_cut(b, cf, right))
    diags = C.validate(p, st)[0]
    assert any(d.clause == "cut" and "E-formula" in d.msg for d in diags)


def test_d0_rejects_non_sigma2_formula(desk):
    p, st = desk
    r = p[p.root]
    q = C.ProofFigure({**p.nodes, p.root: replace(r, concl=r.concl + (F("(all z (ex w (< z w)))"),))}, p.root)
    assert clauses(q, st) == {"D0"}


def test_context_violation_reported():
    b = T.Builder()
    t = b.add("taut", [F("(< x 1)"), F("(not (< x 1))")], main=(F("(< x 1)"), F("(not (< x 1))")))
    root = b.add("or", [F("(or (< x 1) (< 0 0))")], [t], main=(F("(or (< x 1) (< 0 0))"),))
    assert any(d.clause == "context" for d in C.rule_check(b.figure(root)))


def test_unknown_premise_is_structural():
    n = C.ProofNode("a", "or", (F("(< 0 1)"),), ("zz",), main=(F("(< 0 1)"),))
    assert C.structure_check(C.ProofFigure({"a": n}, "a"))[0].clause == "structure"


# heights

def test_heights(desk):
    p, _ = desk
    hs = C.heights(p)
    assert hs[p.root] == C.Height(0, 0)
    d1 = next(n for n in p.nodes.values() if n.rule == "D1")
    up = d1.prem[0]
    assert hs[up] == C.Height(1, 0) and str(hs[up]) == "w"
    two = p[p[up].prem[0]].prem[0]
    assert hs[two] == C.Height(1, 2) and hs[two].h0 == 2 and str(hs[two]) == "w+2"


# ordinal assignment

def test_axiom_under_one_h_is_omega():
    b = T.Builder()
    a = b.add("ax", [F("(< 0 1)")], main=(F("(< 0 1)"),))
    root = b.add("h", [F("(< 0 1)")], [a])
    assert C.assign(b.figure(root)).o[root] == O.OMEGA


def test_ind_ordinal_formula():
    p, st = CF.r3_unfold()
    ann = C.assign(p, st)
    ind = next(n for n in p.nodes.values() if n.rule == "ind")
    a0, a1 = (ann.o[q] for q in ind.prem)
    assert ann.o[ind.id] == O.nprod(O.nsum(a0, a1, O.numeral(2)), O.numeral(3))


def test_missing_stock_is_assign_error(desk):
    p, st = desk
    with pytest.raises(C.AssignError):
        C.assign(p, {})


# stock conditions and height regulation

def test_embedded_proof_is_clean(desk):
    p, st = desk
    diags, ann = C.validate(p, st)
    assert not diags
    assert isinstance(ann.o[p.root], O.D) and ann.o[p.root].level == 0


def test_nested_ind_reports_h4():
    p, st = CF.r3_unfold()
    ind = next(n for n in p.nodes.values() if n.rule == "ind")
    nodes, inner = T.copy_subtree(p, ind.id, C.IdGen(p.nodes.keys(), "c"))
    q = C.ProofFigure({**p.nodes, **nodes, ind.id: replace(ind, prem=(ind.prem[0], inner))}, p.root).pruned()
    diags = C.validate(q, st)[0]
    assert any(d.clause == "h4" and "nested" in d.msg for d in diags)


def test_ind_with_infinite_left_ordinal_fails_p1():
    p, st = CF.r3_unfold()
    ind = next(n for n in p.nodes.values() if n.rule == "ind")
    left = p[ind.prem[0]]
    a = left.concl[0]
    extra = {
        "tt": C.ProofNode("tt", "taut", left.concl + (L.negate(a),), main=(a, L.negate(a))),
        "hh": C.ProofNode("hh", "h", left.concl, ("tt",)),
    }
    q = C.ProofFigure({**p.nodes, **extra, ind.id: replace(ind, prem=("hh", ind.prem[1]))}, p.root).pruned()
    diags, ann = C.validate(q, st)
    assert ann.o["hh"] == O.OMEGA
    assert any(d.clause == "p1" and "not finite" in d.msg for d in diags)


def test_root_h_reports_h7(desk):
    p, st = desk
    h = C.ProofNode("hx", "h", p[p.root].concl, (p.root,))
    q = C.ProofFigure({**p.nodes, "hx": h}, "hx")
    assert "h7" in clauses(q, st)


def test_lowered_d0_stock_caught(desk):
    p, st = desk
    bad = dict(st)
    bad[p.root] = O.ONE
    assert clauses(p, bad) & {"p2", "p2.1", "p2.2"}


def test_stock_on_wrong_node(desk):
    p, st = desk
    some = next(i for i, n in p.nodes.items() if n.rule == "h")
    assert "stock" in clauses(p, {**st, some: O.ZERO})


@pytest.mark.parametrize("name", sorted(CF.CASE_FIXTURES))
def test_case_fixtures_validate(name):
    p, st = CF.CASE_FIXTURES[name]()
    assert C.validate(p, st)[0] == []


# text format

def test_proof_text_round_trip(desk):
    p, st = desk
    text = C.dumps(p, st, comment="desk")
    q, st2 = C.loads(text)
    assert q.nodes == p.nodes and q.root == p.root and st2 == st
    assert C.dumps(q, st2, comment="desk") == text


@pytest.mark.parametrize("text", [
    "(node a ax)",
    "(proof :root a)",
    "(proof :root a)\n(node a ax (seq (< 0 1)) :prem (b))",
])
def test_proof_parse_errors(text):
    with pytest.raises(ParseError):
        C.loads(text)


# axioms file

def test_configured_axiom_pattern():
    pats = C.parse_axioms("(< x (+ x 1))")
    chk = C.Checker(axioms=pats)
    f = F("(< y (+ y 1))")
    b = T.Builder()
    root = b.add("ax", [f], main=(f,))
    assert C.rule_check(b.figure(root)) != []
    assert C.rule_check(b.figure(root), chk) == []
