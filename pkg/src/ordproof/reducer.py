"""Reduction of proofs with stock and witness extraction.

Each step looks at the top of the main branch, rewrites the proof and
recomputes the ordinal annotation. The ordinal of the end-sequent must drop
strictly; a run stops as soon as some closed bounded member of the
end-sequent evaluates to true.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field, replace
from typing import Optional

from . import calculus as C
from . import language as L
from . import ordinals as O
from . import transforms as T
from .calculus import Checker, IdGen, ProofFigure, ProofNode, seq
from .language import All, AllB, And, Const, Ex, ExB, Formula, ObjTerm, Or, Var
from .ordinals import OrdTerm

CASES = (
    "A1-ax-taut", "A2-prho0ex", "A3-pex-guard", "A3-pex-main",
    "R1.1-forall", "R1.2.1-psigma1", "R1.2.2-prho0sigma1", "R1-other-logical",
    "R2-rfl", "R3.1-ind-guard", "R3.2-ind-unfold",
    "R4.1-implicit-delta0", "R4.2-implicit-cut",
)

# rules the main branch passes through, always via the rightmost premise
PASS = ("cut", "h", "PSigma1", "Prho0Sigma1", "D0", "D1")

TRACE_VERSION = 1


class ReductionError(Exception):
    """The proof is not in a shape any case handles."""


class StuckError(Exception):
    def __init__(self, msg: str, formula: Optional[Formula] = None, pool: tuple = ()):
        super().__init__(msg)
        self.formula = formula
        self.pool = pool


class DescentError(AssertionError):
    """A step failed to lower the ordinal. Always an engine bug."""


@dataclass(frozen=True)
class ReductionStep:
    case: str
    node: str
    o_before: OrdTerm
    o_after: OrdTerm
    added: tuple
    stock_changes: dict
    stocks: dict
    witness: tuple = ()

    def to_json(self, index: int) -> dict:
        return {
            "v": TRACE_VERSION,
            "step": index,
            "case": self.case,
            "node": self.node,
            "o_before": O.to_str(self.o_before),
            "o_after": O.to_str(self.o_after),
            "added_formulas": [L.to_str(f) for f in self.added],
            "stocks": {k: O.to_str(v) for k, v in sorted(self.stocks.items())},
        }


@dataclass
class Outcome:
    tag: str  # "witness", "step-limit" or "stuck"
    trace: list = field(default_factory=list)
    formula: Optional[Formula] = None
    witness: tuple = ()
    diagnostic: str = ""
    proof: Optional[ProofFigure] = None
    stocks: dict = field(default_factory=dict)

    def __str__(self) -> str:
        if self.tag == "witness":
            ws = " ".join(f"{x}={L.term_str(t)}" for x, t in self.witness)
            return f"WITNESS {ws}".rstrip() + f"  [{L.to_str(self.formula)}]"
        if self.tag == "stuck":
            return f"STUCK {self.diagnostic}"
        return f"STEP-LIMIT after {len(self.trace)} steps"


# main branch


def main_branch(p: ProofFigure) -> list:
    path = [p.root]
    while p[path[-1]].rule in PASS:
        path.append(p[path[-1]].prem[-1])
    return path


def top(p: ProofFigure) -> str:
    nid = main_branch(p)[-1]
    fv = set().union(*(L.free_vars(f) for f in p[nid].concl)) if p[nid].concl else set()
    if fv:
        raise ReductionError(f"{nid}: free variables {sorted(fv)} at the top of the main branch")
    return nid


# per-step state


class _State:
    def __init__(self, p: ProofFigure, stocks: dict, chk: Checker):
        self.p = p
        self.stocks = dict(stocks)
        self.chk = chk
        self.ev = chk.ev
        self.par = p.parents()
        self._pool = None

    @property
    def pool(self) -> tuple:
        if self._pool is None:
            self._pool = C.proof_pool(self.p, self.ev) + tuple(self.ev.budget.pool)
        return self._pool

    def truth(self, f: Formula) -> Optional[bool]:
        if not L.is_closed(f) or not L.is_bounded(f):
            return None
        return self.ev.eval_delta0(f, replace(self.ev.budget, pool=self.pool))

    def decide(self, f: Formula) -> bool:
        v = self.truth(f)
        if v is None:
            raise StuckError(f"undecided: {L.to_str(f)}", f, self.pool)
        return v

    def least(self, var: str, cond: Formula, bound: Optional[ObjTerm] = None) -> ObjTerm:
        """Least closed term s with cond(s) true: numerals first, then pool values."""
        limit = self.ev.budget.mu_search
        bval = None
        if bound is not None:
            bval = self.ev.eval_term(bound)
            n = O.finite_value(bval)
            if n is not None:
                limit = min(limit, n)
        undecided = False
        for i in range(limit):
            s = L.num(i)
            v = self.truth(L.subst(cond, var, s))
            if v is True:
                return s
            undecided |= v is None
        big = []
        for c in self.pool:
            if O.finite_value(c) is not None:
                continue
            try:
                if bval is None or O.lt(c, bval):
                    big.append(c)
            except O.Undecidable:
                continue
        try:
            big.sort(key=functools.cmp_to_key(lambda a, b: O.compare(a, b).value))
        except O.Undecidable:
            big.sort(key=O.to_str)
        for c in big:
            v = self.truth(L.subst(cond, var, Const(c)))
            if v is True:
                return Const(c)
            undecided |= v is None
        why = "undecided" if undecided else "no instance found"
        raise StuckError(f"mu-search for {var} in {L.to_str(cond)}: {why}", cond, self.pool)


# shared surgery


def _with(p: ProofFigure, *nodes: ProofNode, extra: Optional[dict] = None) -> ProofFigure:
    d = dict(p.nodes)
    d.update(extra or {})
    for n in nodes:
        d[n.id] = n
    return ProofFigure(d, p.root)


def _add_along(p: ProofFigure, ids, fs) -> ProofFigure:
    """Add formulas to the conclusions of the given nodes only."""
    d = dict(p.nodes)
    for i in ids:
        d[i] = replace(d[i], concl=seq(*d[i].concl, *fs))
    return ProofFigure(d, p.root)


def _between(p: ProofFigure, lo: str, hi: str) -> list:
    """Ids on the path from lo down to hi, both excluded."""
    path = p.path_to_root(lo)
    return path[1:path.index(hi)]


def _dual_at_cut(st: _State, nid: str, f: Formula) -> tuple:
    """Trace f down to the cut consuming it: (cut id, descendant, side index)."""
    chain, fate = C.trace_down(st.p, nid, f, st.par)
    if fate == "end":
        raise StuckError(f"{L.to_str(chain[-1][1])} reaches the end-sequent unevaluated", chain[-1][1])
    if not (isinstance(fate, tuple) and fate[0] == "cut"):
        raise ReductionError(f"{nid}: {L.to_str(f)} is not consumed by a cut ({fate})")
    j = st.p[fate[1]]
    last_id, g = chain[-1]
    return j.id, g, j.prem.index(last_id)


def _resolve_true(st: _State, nid: str, f: Formula, mode: str) -> ProofFigure:
    """f is true at nid; remove the cut consuming it, keeping the other side.

    mode 'drop' removes the false dual with its ancestors, 'push' sends it
    down to the end-sequent.
    """
    jid, g, side = _dual_at_cut(st, nid, f)
    if g != f and not st.decide(g):
        raise ReductionError(f"{jid}: descendant {L.to_str(g)} of a true formula is false")
    j = st.p[jid]
    keep = j.prem[1 - side]
    dual = L.negate(g)
    p = st.p
    if mode == "drop":
        if dual in p[keep].concl:
            p = T.drop_false_literal(p, dual, keep, st.ev)
        return T.graft(p, jid, keep)
    p = T.graft(p, jid, keep)
    return T.weaken(p, [dual], keep)


# top = axiom


def _case_axiom(st: _State, t: ProofNode) -> tuple:
    cands = t.main[:2] if t.main else t.concl
    for a in cands:
        if not (L.is_closed(a) and L.is_bounded(a)) or st.truth(a) is not True:
            continue
        _, fate = C.trace_down(st.p, t.id, a, st.par)
        if not (isinstance(fate, tuple) and fate[0] == "cut"):
            continue
        dual = L.negate(a)
        mode = "drop" if L.is_literal(dual) and L.has_p(dual) else "push"
        return "A1-ax-taut", _resolve_true(st, t.id, a, mode), {}
    raise StuckError(f"{t.id}: axiom without a true closed formula consumed by a cut")


def _invert_chain(p: ProofFigure, host: str, idx: int, f: Formula, insts: list, ev,
                  split_or: bool = False) -> ProofFigure:
    """Invert f and then its successive instances in the premise host.prem[idx]."""
    for inst in insts:
        at = p[host].prem[idx]
        p = T.invert(p, f, inst, at, ev)
        f = T._instances(f, inst)[-1]
    # a final disjunction splits into its disjuncts
    if split_or and isinstance(f, Or):
        p = T.invert(p, f, None, p[host].prem[idx], ev)
    return p


def _drop_all(p: ProofFigure, host: str, idx: int, lits, ev) -> ProofFigure:
    for lit in lits:
        at = p[host].prem[idx]
        if lit in p[at].concl:
            p = T.drop_false_literal(p, lit, at, ev)
    return p


def _series_below(st: _State, nid: str) -> Optional[str]:
    series = C.d1_series(st.p, st.par)
    for i in st.p.path_to_root(nid)[1:]:
        if st.p[i].rule == "D1":
            return series[i]
    return None


def _case_prho0ex(st: _State, t: ProofNode) -> tuple:
    f = t.main[0]
    s = C.prho0ex_parts(f)
    jid, g, side = _dual_at_cut(st, t.id, f)
    if g != f:
        raise ReductionError(f"{t.id}: (Prho0ex) formula changed before its cut")
    low = _series_below(st, jid)
    if low is None or low not in st.stocks:
        raise ReductionError(f"{jid}: no (D1) with stock below the cut")
    c1 = st.stocks[low]
    ell = Const(O.D(1, c1))
    nf = L.negate(f)
    other = 1 - side
    x = nf.var
    p = _invert_chain(st.p, jid, other, nf, [ell], st.ev, True)
    lits = (L.not_less(s, ell), L.negate(L.subst(f.body.right, x, ell)))
    p = _drop_all(p, jid, other, lits, st.ev)
    p = T.graft(p, jid, p[jid].prem[other])
    return "A2-prho0ex", p, {low: O.nsum(c1, O.ONE)}


def _case_pex(st: _State, t: ProofNode) -> tuple:
    f = t.main[0]
    s = C.pex_parts(f)
    guard = L.not_less(s, L.OMEGA1_T)
    if guard in t.main[1:] and st.decide(guard):
        return "A3-pex-guard", _resolve_true(st, t.id, guard, "drop"), {}
    jid, g, side = _dual_at_cut(st, t.id, f)
    if g != f:
        raise ReductionError(f"{t.id}: (Pex) formula changed before its cut")
    root = st.p[st.p.root]
    if root.rule != "D0" or root.id not in st.stocks:
        raise ReductionError("proof does not end with a (D0) carrying a stock")
    c0 = st.stocks[root.id]
    ell, sig = Const(O.D(0, c0)), Const(O.F(c0))
    nf = L.negate(f)
    other = 1 - side
    p = _invert_chain(st.p, jid, other, nf, [ell, sig], st.ev, True)
    core = L.subst(L.subst(f.body.body, f.var, ell), f.body.var, sig)
    lits = (L.not_less(ell, L.OMEGA1_T), L.not_less(sig, L.OMEGA1_T),
            L.negate(core.left), L.negate(core.right))
    p = _drop_all(p, jid, other, lits, st.ev)
    p = T.graft(p, jid, p[jid].prem[other])
    return "A3-pex-main", p, {root.id: O.nsum(c0, O.ONE)}


# top = logical rule


def _sigma_change(st: _State, chain: list) -> Optional[ProofNode]:
    """The (PSigma1)/(Prho0Sigma1) that rewrites the traced formula, if any."""
    for (_, f0), (nid, f1) in zip(chain, chain[1:]):
        n = st.p[nid]
        if f0 != f1 and n.rule in ("PSigma1", "Prho0Sigma1"):
            return n
    return None


def _erase_and_push(st: _State, t: ProofNode, keep: int, fs) -> ProofFigure:
    q = t.prem[keep]
    p = st.p
    if t.rule in ("all", "ball"):
        p = T.subst_subtree(p, q, t.eigen, fs[-1][1])
        fs = [f for f, _ in fs]
    p = T.erase_unary(p, t.id, keep) if len(t.prem) == 1 else T.graft(p, t.id, q)
    return T.weaken(p, fs, q)


def _explicit(st: _State, t: ProofNode, chain: list) -> tuple:
    f = t.main[0]
    r = t.rule
    if r == "all":
        s = st.least(f.var, L.negate(f.body))
        inst = L.subst(f.body, f.var, s)
        return "R1.1-forall", _erase_and_push(st, t, 0, [(inst, s)]), {}, ()
    if r == "ball":
        s = st.least(f.var, L.negate(f.body), f.bound)
        fs = [(L.not_less(s, f.bound), s), (L.subst(f.body, f.var, s), s)]
        return "R1-other-logical", _erase_and_push(st, t, 0, fs), {}, ()
    if r == "and":
        i = 0 if st.decide(f.left) is False else 1
        part = (f.left, f.right)[i]
        return "R1-other-logical", _erase_and_push(st, t, i, [part]), {}, ()
    if r == "or":
        return "R1-other-logical", _erase_and_push(st, t, 0, [f.left, f.right]), {}, ()
    # (ex), (bex)
    inst = L.subst(f.body, f.var, t.witness)
    j0 = _sigma_change(st, chain)
    case = "R1-other-logical"
    if j0 is not None:
        case = "R1.2.1-psigma1" if j0.rule == "PSigma1" else "R1.2.2-prho0sigma1"
        for g in j0.main[1:]:
            if st.decide(g):
                return case, _resolve_true(st, j0.id, g, "drop"), {}, ()
    end_f = chain[-1][1]
    wit = ((f.var, t.witness),) if end_f == f else ()
    return case, _erase_and_push(st, t, 0, [inst]), {}, wit


def _case_logical(st: _State, t: ProofNode) -> tuple:
    f = t.main[0]
    chain, fate = C.trace_down(st.p, t.id, f, st.par)
    if fate == "end":
        return _explicit(st, t, chain)
    if not (isinstance(fate, tuple) and fate[0] == "cut"):
        raise ReductionError(f"{t.id}: main formula is neither explicit nor cut ({fate})")
    if t.rule not in ("or", "ex", "bex"):
        raise ReductionError(f"{t.id}: implicit ({t.rule}) on the main branch")
    jid = fate[1]
    j = st.p[jid]
    side = j.prem.index(chain[-1][0])
    g = chain[-1][1]
    if L.is_closed(g) and L.is_delta0(g):
        # R4.1: the false side of the cut goes down to the end-sequent
        if st.decide(g):
            keep, push = j.prem[1 - side], L.negate(g)
        else:
            keep, push = j.prem[side], g
        p = T.graft(st.p, jid, keep)
        return "R4.1-implicit-delta0", T.weaken(p, [push], keep), {}, ()
    return "R4.2-implicit-cut", _split_h(st, t, j, side, g), {}, ()


def _copy_path(p: ProofFigure, path: list, prev: str, below: str, ids: IdGen, extra: dict) -> str:
    """Copy the nodes of path (listed upward to downward) with their side subtrees.

    In the copy of path[0] the premise prev is replaced by below. New nodes
    go into extra; returns the ids of the path copies, upmost first.
    """
    out = []
    for nid in path:
        n = p[nid]
        prem = []
        for q in n.prem:
            if q == prev:
                prem.append(below)
            else:
                nodes, r = T.copy_subtree(p, q, ids)
                extra.update(nodes)
                prem.append(r)
        nid2 = ids()
        extra[nid2] = replace(n, id=nid2, prem=tuple(prem))
        out.append(nid2)
        below, prev = nid2, nid
    return out


def _split_h(st: _State, t: ProofNode, j: ProofNode, side: int, g: Formula) -> ProofFigure:
    p = st.p
    f = t.main[0]
    path_j = p.path_to_root(j.id)
    hs = [i for i in path_j[1:] if p[i].rule == "h"]
    if not hs:
        raise ReductionError(f"{j.id}: no (h) below the vanishing cut")
    hid = hs[0]
    h = p[hid]
    if t.rule == "or":
        q = p[t.prem[0]]
        present = [d for d in (f.left, f.right) if d in q.concl]
        if len(present) == 2:
            raise StuckError(f"{t.id}: implicit (or) with both disjuncts in its premise")
        idx = 0 if not present or present[0] == f.left else 1
        inst = (f.left, f.right)[idx]
        inv_insts = [idx]
    else:
        if t.rule == "bex":
            guard = L.not_less(t.witness, f.bound)
            if guard in t.concl and st.decide(guard):
                return _resolve_true(st, t.id, guard, "drop")
        inst = L.subst(f.body, f.var, t.witness)
        inv_insts = [t.witness]
    ninst = L.negate(inst)
    ids = IdGen(p.nodes, "r")
    # right part: the other side of the cut, inverted, down to a copy of the (h)
    extra: dict = {}
    lnodes, lroot = T.copy_subtree(p, j.prem[1 - side], ids)
    extra.update(lnodes)
    below = (_copy_path(p, _between(p, j.id, hid), j.id, lroot, ids, extra) or [lroot])[-1]
    hr = ids()
    extra[hr] = ProofNode(hr, "h", seq(*h.concl, ninst), (below,))
    # left part: erase the logical rule and carry the instance down to the (h)
    p1 = T.graft(p, t.id, t.prem[0])
    hl = ids()
    extra[hl] = ProofNode(hl, "h", seq(*h.concl, inst), (h.prem[0],))
    if C.is_cut_formula(ninst):
        cut = ProofNode(hid, "cut", h.concl, (hl, hr), formula=ninst)
    else:
        cut = ProofNode(hid, "cut", h.concl, (hr, hl), formula=inst)
    p1 = _with(p1, cut, extra=extra)
    p1 = _add_along(p1, [t.prem[0]] + _between(p1, t.prem[0], hl), [inst])
    # invert the dual of the cut formula in the copy
    host, hidx = p1.parents()[lroot]
    p1 = _invert_chain(p1, host, hidx, L.negate(g), inv_insts, st.ev)
    top_r = p1[host].prem[hidx]
    if t.rule == "bex":
        p1 = _drop_all(p1, host, hidx, [L.not_less(t.witness, f.bound)], st.ev)
        top_r = p1[host].prem[hidx]
    p1 = _add_along(p1, [top_r] + _between(p1, top_r, hr), [ninst])
    return p1.pruned()


# top = (Rfl)


def _case_rfl(st: _State, t: ProofNode) -> tuple:
    p = st.p
    path = p.path_to_root(t.id)
    d1s = [k for k, i in enumerate(path) if p[i].rule == "D1"]
    if not d1s:
        raise ReductionError(f"{t.id}: no (D1) below the (Rfl)")
    i1 = d1s[0]
    series = C.d1_series(p, st.par)
    low = series[path[i1]]
    iJ = path.index(low)
    if low not in st.stocks:
        raise ReductionError(f"{low}: lowest (D1) has no stock")
    c1 = st.stocks[low]
    x, a, bound, y = t.var, t.formula, t.bound, t.eigen
    fa = AllB(x, bound, a)
    ids = IdGen(p.nodes, "f")
    extra: dict = {}
    # left part: the left premise with fa carried down to a new (D1) above the series
    upper = path[1:i1]
    up_ids = _copy_path(p, upper, t.id, t.prem[0], ids, extra)
    below = up_ids[-1] if up_ids else t.prem[0]
    for i in up_ids:
        extra[i] = replace(extra[i], concl=seq(*extra[i].concl, fa))
    allnodes = {**p.nodes, **extra}
    tmp = ProofFigure(allnodes, below)
    a_l = C.assign(tmp.pruned(), {}, st.ev).o[below]
    ell = O.D(1, O.nsum(c1, O.wpow(a_l)))
    ex_y = ExB(x, bound, L.negate(L.relativize(a, Var(y))))
    ex_l = L.subst(ex_y, y, Const(ell))
    fa_l = L.relativize(fa, Const(ell))
    if fa_l != L.negate(ex_l):
        raise ReductionError(f"{t.id}: relativized side formulas do not match")
    dl = ids()
    extra[dl] = ProofNode(dl, "D1", seq(*(f for f in allnodes[below].concl if f != fa), fa_l),
                          (below,), relativizer=ell)
    series_ids = path[i1:iJ + 1]
    low_ids = _copy_path(p, series_ids, path[i1 - 1], dl, ids, extra)
    left_low = low_ids[-1]
    for i in low_ids:
        extra[i] = replace(extra[i], concl=seq(*extra[i].concl, fa_l))
    # right part: y := ell in the right premise, then the old path
    p1 = T.subst_subtree(p, t.prem[1], y, Const(ell))
    p1 = T.graft(p1, t.id, t.prem[1])
    lit = L.not_less(bound, Const(ell))
    if lit in p1[t.prem[1]].concl:
        p1 = T.drop_false_literal(p1, lit, t.prem[1], st.ev)
    p1 = _add_along(p1, path[1:iJ + 1], [ex_l])
    # the new cut replaces the lowest (D1)
    k = ids()
    cut = ProofNode(k, "cut", p[low].concl, (left_low, low), formula=ex_l)
    # the left premise was pruned from p1 but lives on in the left part
    nodes = {**p.nodes, **p1.nodes, **extra, k: cut}
    if low == p1.root:
        raise ReductionError(f"{low}: (D1) is the root")
    pid, pi = st.par[low]
    m = nodes[pid]
    prem = list(m.prem)
    prem[pi] = k
    nodes[pid] = replace(m, prem=tuple(prem))
    p2 = ProofFigure(nodes, p1.root).pruned()
    c2 = O.nsum(c1, O.wpow(a_l), O.ONE)
    return "R2-rfl", p2, {left_low: c1, low: c2}


# top = (ind)


def _case_ind(st: _State, t: ProofNode) -> tuple:
    s, bnd = t.witness, t.bound
    guard = L.not_less(s, bnd)
    if guard in t.main and st.decide(guard):
        return "R3.1-ind-guard", _resolve_true(st, t.id, guard, "drop"), {}
    p = st.p
    x, a, y = t.var, t.formula, t.eigen
    ids = IdGen(p.nodes, "u")
    avoid = T._vars_of(f for n in p.walk(t.id) for f in n.concl) | {x, y}
    avoid |= L.free_vars(a) | L.bound_vars(a)
    y2 = T.fresh_var(avoid, "u")
    ay2 = L.subst(a, x, Var(y2))
    gamma = t.concl
    extra: dict = {}
    tp = T.taut_proof((), ay2, prefix="tt")
    tnodes, troot = _import(tp, ids)
    extra.update(tnodes)
    g2 = L.not_less(Var(y2), s)
    ind2 = ids()
    extra[ind2] = ProofNode(ind2, "ind", seq(*gamma, g2, ay2), (t.prem[0], troot), main=(g2,),
                            var=x, formula=a, eigen=y, witness=Var(y2), bound=s)
    fa_s = AllB(x, s, a)
    ball = ids()
    extra[ball] = ProofNode(ball, "ball", seq(*gamma, fa_s), (ind2,), main=(fa_s,), eigen=y2)
    # the left premise once more, with y := s
    cnodes, croot = T.copy_subtree(p, t.prem[0], ids)
    extra.update(cnodes)
    a_s = L.subst(a, x, s)
    na_s = L.negate(a_s)
    if C.is_cut_formula(na_s):
        cut2_prem, cf2 = (croot, t.prem[1]), na_s
    else:
        cut2_prem, cf2 = (t.prem[1], croot), a_s
    cut2 = ids()
    extra[cut2] = ProofNode(cut2, "cut", seq(*gamma, L.negate(fa_s)), cut2_prem, formula=cf2)
    cut1 = ProofNode(t.id, "cut", gamma, (ball, cut2), formula=L.negate(fa_s))
    p1 = ProofFigure({**p.nodes, **extra, t.id: cut1}, p.root)
    p1 = T.subst_subtree(p1, croot, y, s)
    return "R3.2-ind-unfold", p1.pruned(), {}


def _import(sub: ProofFigure, ids: IdGen) -> tuple:
    return T.copy_subtree(sub, sub.root, ids)


# steps and runs


def _dispatch(st: _State, nid: str) -> tuple:
    t = st.p[nid]
    r = t.rule
    if r in ("ax", "taut"):
        return _case_axiom(st, t) + ((),)
    if r == "Prho0ex":
        return _case_prho0ex(st, t) + ((),)
    if r == "Pex":
        return _case_pex(st, t) + ((),)
    if r in ("or", "and", "ex", "bex", "all", "ball"):
        return _case_logical(st, t)
    if r == "Rfl":
        return _case_rfl(st, t) + ((),)
    if r == "ind":
        return _case_ind(st, t) + ((),)
    raise ReductionError(f"{nid}: no reduction case for a ({r}) top")


def restrict_stocks(p: ProofFigure, stocks: dict) -> dict:
    dom = C.stock_domain(p)
    return {k: v for k, v in stocks.items() if k in dom}


def reduce_step(p: ProofFigure, stocks: dict, chk: Optional[Checker] = None,
                revalidate: bool = True) -> tuple:
    """One reduction; returns (P', stocks', ReductionStep).

    Raises StuckError on undecided evaluations, ReductionError when the proof
    has no applicable case or P' fails to validate, DescentError when the
    ordinal does not drop.
    """
    chk = chk or Checker()
    st = _State(p, stocks, chk)
    before = C.assign(p, stocks, chk.ev).root
    nid = top(p)
    try:
        case, p2, changes, wit = _dispatch(st, nid)
    except T.TransformError as e:
        raise ReductionError(str(e)) from e
    new_stocks = restrict_stocks(p2, {**stocks, **changes})
    try:
        after = C.assign(p2, new_stocks, chk.ev).root
    except C.AssignError as e:
        raise ReductionError(f"{case}: {e}") from e
    if O.compare(after, before) is not O.LT:
        raise DescentError(f"{case} at {nid}: {O.to_str(after)} is not below {O.to_str(before)}")
    if revalidate:
        diags, _ = C.validate(p2, new_stocks, chk)
        if diags:
            raise ReductionError(f"{case} at {nid}: result fails validation: "
                                 + "; ".join(str(d) for d in diags[:5]))
    end0 = set(p.end_sequent())
    added = tuple(f for f in p2.end_sequent() if f not in end0)
    changed = {k: v for k, v in new_stocks.items() if stocks.get(k) != v}
    step = ReductionStep(case, nid, before, after, added, changed, new_stocks, wit)
    return p2, new_stocks, step


def _true_member(st: _State, fs, strict: bool) -> Optional[Formula]:
    for f in fs:
        if not (L.is_closed(f) and L.is_bounded(f)):
            continue
        v = st.truth(f)
        if v is True:
            return f
        if v is None and strict:
            raise StuckError(f"undecided end-sequent member {L.to_str(f)}", f, st.pool)
    return None


def run(p: ProofFigure, stocks: dict, chk: Optional[Checker] = None, max_steps: int = 10_000,
        revalidate: bool = True, on_step=None) -> Outcome:
    """Reduce until a true end-sequent member shows up."""
    chk = chk or Checker()
    trace: list = []
    try:
        f = _true_member(_State(p, stocks, chk), p.end_sequent(), chk.strict)
        if f is not None:
            return Outcome("witness", trace, f, (), proof=p, stocks=stocks)
        while len(trace) < max_steps:
            p, stocks, step = reduce_step(p, stocks, chk, revalidate)
            trace.append(step)
            if on_step:
                on_step(len(trace) - 1, step)
            st = _State(p, stocks, chk)
            f = _true_member(st, step.added, chk.strict)
            if f is not None:
                return Outcome("witness", trace, f, step.witness, proof=p, stocks=stocks)
        return Outcome("step-limit", trace, proof=p, stocks=stocks)
    except StuckError as e:
        msg = str(e)
        if e.pool:
            msg += " (pool: " + ", ".join(O.to_str(v) for v in e.pool[:8]) + ")"
        return Outcome("stuck", trace, e.formula, diagnostic=msg, proof=p, stocks=stocks)
    except ReductionError as e:
        return Outcome("stuck", trace, diagnostic=str(e), proof=p, stocks=stocks)
