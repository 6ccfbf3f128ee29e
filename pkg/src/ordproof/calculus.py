"""Proof figures, rule checking, heights, ordinal assignment and stock checks.

Sequents are tuples of formulas read with set semantics: a premise may omit
context formulas of its conclusion (implicit weakening), and the principal
formulas of a rule are recorded by value in ``ProofNode.main``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Optional

from . import language as L
from . import ordinals as O
from . import sexpr
from .language import (
    All, AllB, And, Const, Ex, ExB, Formula, Less, ObjTerm, Or, PAtom, PRhoAtom, Var,
)
from .ordinals import OrdTerm

RULES = (
    "ax", "taut", "Pex", "Prho0ex", "or", "and", "ex", "bex", "all", "ball",
    "ind", "cut", "Rfl", "PSigma1", "Prho0Sigma1", "h", "D0", "D1",
)
AXIOMS = ("ax", "taut", "Pex", "Prho0ex")
ARITY = {r: 0 for r in AXIOMS} | {r: 2 for r in ("and", "cut", "ind", "Rfl")}


def arity(rule: str) -> int:
    return ARITY.get(rule, 1)


@dataclass(frozen=True)
class ProofNode:
    id: str
    rule: str
    concl: tuple
    prem: tuple = ()
    main: tuple = ()
    witness: Optional[ObjTerm] = None
    eigen: Optional[str] = None
    bound: Optional[ObjTerm] = None
    var: Optional[str] = None
    formula: Optional[Formula] = None
    terms: tuple = ()
    relativizer: Optional[OrdTerm] = None

    def __post_init__(self):
        # sequents are sets in disguise: drop repeats, keep first order
        seen = []
        for f in self.concl:
            if f not in seen:
                seen.append(f)
        object.__setattr__(self, "concl", tuple(seen))


def seq(*fs: Formula) -> tuple:
    out = []
    for f in fs:
        if f not in out:
            out.append(f)
    return tuple(out)


@dataclass(frozen=True)
class ProofFigure:
    nodes: dict
    root: str

    def __getitem__(self, nid: str) -> ProofNode:
        return self.nodes[nid]

    def parents(self) -> dict:
        out = {}
        for n in self.nodes.values():
            for i, p in enumerate(n.prem):
                out[p] = (n.id, i)
        return out

    def end_sequent(self) -> tuple:
        return self.nodes[self.root].concl

    def walk(self, start: Optional[str] = None) -> Iterator[ProofNode]:
        """Pre-order traversal from start (default: root)."""
        stack = [start or self.root]
        while stack:
            n = self.nodes[stack.pop()]
            yield n
            stack.extend(reversed(n.prem))

    def above(self, nid: str) -> Iterator[ProofNode]:
        """Nodes strictly above nid."""
        for p in self.nodes[nid].prem:
            yield from self.walk(p)

    def path_to_root(self, nid: str) -> list:
        """Node ids from nid (inclusive) down to the root."""
        par = self.parents()
        out = [nid]
        while out[-1] in par:
            out.append(par[out[-1]][0])
        return out

    def replace_nodes(self, *nodes: ProofNode, root: Optional[str] = None) -> "ProofFigure":
        d = dict(self.nodes)
        for n in nodes:
            d[n.id] = n
        return ProofFigure(d, root or self.root).pruned()

    def pruned(self) -> "ProofFigure":
        keep = {n.id for n in self.walk()}
        if keep == set(self.nodes):
            return self
        return ProofFigure({k: v for k, v in self.nodes.items() if k in keep}, self.root)

    def fresh_id(self, base: str = "n") -> str:
        i = len(self.nodes)
        while f"{base}{i}" in self.nodes:
            i += 1
        return f"{base}{i}"


class IdGen:
    """Fresh node ids that avoid an existing figure."""

    def __init__(self, taken: Iterable[str] = (), prefix: str = "n"):
        self.taken = set(taken)
        self.prefix = prefix
        self.i = 0

    def __call__(self) -> str:
        while f"{self.prefix}{self.i}" in self.taken:
            self.i += 1
        nid = f"{self.prefix}{self.i}"
        self.taken.add(nid)
        return nid


def build(nodes: Iterable[ProofNode], root: str) -> ProofFigure:
    return ProofFigure({n.id: n for n in nodes}, root)


# guards and derived formulas


def pex_formula(s: ObjTerm) -> Formula:
    x, y = Var("x"), Var("y")
    avoid = L.term_vars(s)
    xn = "x" if "x" not in avoid else L._fresh("x", avoid)
    yn = "y" if "y" not in avoid else L._fresh("y", avoid | {xn})
    x, y = Var(xn), Var(yn)
    return ExB(xn, L.OMEGA1_T, ExB(yn, L.OMEGA1_T, And(Less(s, x), PAtom(x, y))))


def prho0ex_formula(s: ObjTerm) -> Formula:
    xn = "x" if "x" not in L.term_vars(s) else L._fresh("x", L.term_vars(s))
    return Ex(xn, And(Less(s, Var(xn)), PRhoAtom(Var(xn))))


def rfl_shape(a: Formula, x: str) -> Optional[tuple]:
    """Split A(x) = ex z ex w [Pr0(z) and B] into (z, w, B) when it has that shape."""
    if isinstance(a, Ex) and isinstance(a.body, Ex) and isinstance(a.body.body, And):
        z, w, core = a.var, a.body.var, a.body.body
        if (isinstance(core.left, PRhoAtom) and core.left.pos and core.left.t == Var(z)
                and L.is_delta0(core.right)):
            return z, w, core.right
    return None


def ind_minors(n: ProofNode) -> tuple:
    """Auxiliary formulas of the two premises of an (ind)."""
    y = Var(n.eigen)
    a = n.formula
    left = (L.negate(AllB(n.var, y, a)), L.subst(a, n.var, y))
    right = (L.negate(L.subst(a, n.var, n.witness)),)
    return left, right


def rfl_minors(n: ProofNode) -> tuple:
    a, t, y = n.formula, n.bound, Var(n.eigen)
    left = (AllB(n.var, t, a),)
    right = (L.not_less(t, y), ExB(n.var, t, L.negate(L.relativize(a, y))))
    return left, right


def psigma1_parts(n: ProofNode) -> tuple:
    """(premise minor, principal formula, possible guards) of a (PSigma1)."""
    t0, t1 = n.terms
    phi = n.formula
    minor = L.subst(phi, n.var, L.OMEGA1_T)
    principal = L.relativize(L.subst(phi, n.var, t0), t1)
    guards = (PAtom(t0, t1, False), L.not_less(n.witness, t0))
    return minor, principal, guards


def prho0sigma1_parts(n: ProofNode) -> tuple:
    t = n.bound
    principal = L.relativize(n.formula, t)
    guards = (PRhoAtom(t, False), L.not_less(n.witness, t))
    return n.formula, principal, guards


def minors(n: ProofNode) -> tuple:
    """Per premise, the formulas a premise may hold beyond the conclusion."""
    r = n.rule
    if r in ("or", "and", "ex", "bex", "all", "ball"):
        m = n.main[0]
        if r == "or":
            return ((m.left, m.right),)
        if r == "and":
            return ((m.left,), (m.right,))
        if r in ("ex", "bex"):
            return ((L.subst(m.body, m.var, n.witness),),)
        inst = L.subst(m.body, m.var, Var(n.eigen))
        if r == "all":
            return ((inst,),)
        return ((L.not_less(Var(n.eigen), m.bound), inst),)
    if r == "ind":
        return ind_minors(n)
    if r == "Rfl":
        return rfl_minors(n)
    if r == "cut":
        return ((L.negate(n.formula),), (n.formula,))
    if r == "PSigma1":
        return ((psigma1_parts(n)[0],),)
    if r == "Prho0Sigma1":
        return ((prho0sigma1_parts(n)[0],),)
    return tuple(() for _ in n.prem)


def d1_relativized(n: ProofNode, prem: tuple) -> tuple:
    """For a (D1): the premise formulas that are relativized in the conclusion."""
    a = Const(n.relativizer)
    return tuple(f for f in prem if f not in n.concl and L.relativize(f, a) in n.concl)


# text format

_PAYLOAD_KEYS = (":concl", ":prem", ":main", ":witness", ":eigen", ":bound", ":var",
                 ":formula", ":terms", ":relativizer", ":stock")


def node_to_sexpr(n: ProofNode, stock: Optional[OrdTerm] = None) -> list:
    out = ["node", n.id, n.rule, ":concl", ["seq"] + [L.to_sexpr(f) for f in n.concl],
           ":prem", list(n.prem)]
    if n.main:
        out += [":main", [str(n.concl.index(f)) for f in n.main]]
    if n.witness is not None:
        out += [":witness", L.term_to_sexpr(n.witness)]
    if n.eigen is not None:
        out += [":eigen", n.eigen]
    if n.bound is not None:
        out += [":bound", L.term_to_sexpr(n.bound)]
    if n.var is not None:
        out += [":var", n.var]
    if n.formula is not None:
        out += [":formula", L.to_sexpr(n.formula)]
    if n.terms:
        out += [":terms", [L.term_to_sexpr(t) for t in n.terms]]
    if n.relativizer is not None:
        out += [":relativizer", O.to_sexpr(n.relativizer)]
    if stock is not None:
        out += [":stock", O.to_sexpr(stock)]
    return out


def dumps(p: ProofFigure, stocks: Optional[dict] = None, comment: str = "") -> str:
    """Deterministic printer: header, then nodes in pre-order."""
    stocks = stocks or {}
    lines = [f"; {c}" for c in comment.splitlines()] if comment else []
    lines.append(sexpr.write(["proof", ":root", p.root]))
    for n in p.walk():
        lines.append(sexpr.write(node_to_sexpr(n, stocks.get(n.id))))
    return "\n".join(lines) + "\n"


def _keywords(items: list, allowed: tuple) -> dict:
    if len(items) % 2:
        raise sexpr.ParseError("keyword list has odd length")
    out = {}
    for k, v in zip(items[::2], items[1::2]):
        if k not in allowed:
            raise sexpr.ParseError(f"unknown key {k!r}")
        out[k] = v
    return out


def node_from_sexpr(e) -> tuple:
    if not isinstance(e, list) or len(e) < 3 or e[0] != "node":
        raise sexpr.ParseError("expected (node <id> <tag> ...)")
    nid, rule = e[1], e[2]
    if rule not in RULES:
        raise sexpr.ParseError(f"unknown rule tag {rule!r}")
    kw = _keywords(e[3:], _PAYLOAD_KEYS)
    c = kw.get(":concl")
    if not isinstance(c, list) or not c or c[0] != "seq":
        raise sexpr.ParseError(f"node {nid}: missing (seq ...) conclusion")
    concl = seq(*(L.from_sexpr(f) for f in c[1:]))
    main = ()
    if ":main" in kw:
        try:
            main = tuple(concl[int(i)] for i in kw[":main"])
        except (ValueError, IndexError, TypeError):
            raise sexpr.ParseError(f"node {nid}: bad :main index list") from None

    def opt(key, fn):
        return fn(kw[key]) if key in kw else None

    node = ProofNode(
        id=nid, rule=rule, concl=concl,
        prem=tuple(kw.get(":prem", [])),
        main=main,
        witness=opt(":witness", L.term_from_sexpr),
        eigen=opt(":eigen", L._var),
        bound=opt(":bound", L.term_from_sexpr),
        var=opt(":var", L._var),
        formula=opt(":formula", L.from_sexpr),
        terms=tuple(L.term_from_sexpr(t) for t in kw.get(":terms", [])),
        relativizer=opt(":relativizer", O.from_sexpr),
    )
    return node, opt(":stock", O.from_sexpr)


def loads(text: str) -> tuple:
    """Parse a proof script into (ProofFigure, stocks)."""
    exprs = sexpr.read_all(text)
    if not exprs or not isinstance(exprs[0], list) or exprs[0][:1] != ["proof"]:
        raise sexpr.ParseError("expected (proof :root <id>) header")
    root = _keywords(exprs[0][1:], (":root",)).get(":root")
    if root is None:
        raise sexpr.ParseError("header lacks :root")
    nodes, stocks = {}, {}
    for e in exprs[1:]:
        n, st = node_from_sexpr(e)
        if n.id in nodes:
            raise sexpr.ParseError(f"duplicate node id {n.id}")
        nodes[n.id] = n
        if st is not None:
            stocks[n.id] = st
    if root not in nodes:
        raise sexpr.ParseError(f"root {root} is not defined")
    for n in nodes.values():
        for p in n.prem:
            if p not in nodes:
                raise sexpr.ParseError(f"node {n.id}: unknown premise {p}")
    return ProofFigure(nodes, root), stocks


# descendants


def descend(p: ProofFigure, par: dict, nid: str, f: Formula):
    """One step down from occurrence f at nid.

    Returns (parent id, formula) or a fate string: 'end' at the root, or
    ('cut'|'ind'|'rfl', node id) when f is consumed there, or 'lost'.
    """
    if nid not in par:
        return "end"
    mid, i = par[nid]
    m = p[mid]
    if f in m.concl:
        return mid, f
    if m.rule == "cut":
        return ("cut", mid) if f in minors(m)[i] else "lost"
    if m.rule == "ind":
        return ("ind", mid) if f in minors(m)[i] else "lost"
    if m.rule == "Rfl":
        return ("rfl", mid) if f in minors(m)[i] else "lost"
    if m.rule == "D1":
        g = L.relativize(f, Const(m.relativizer))
        return (mid, g) if g in m.concl else "lost"
    if m.main and f in minors(m)[i]:
        return mid, m.main[0]
    return "lost"


def trace_down(p: ProofFigure, nid: str, f: Formula, par: Optional[dict] = None) -> tuple:
    """Follow an occurrence down; returns (chain of (id, formula), fate)."""
    par = p.parents() if par is None else par
    chain = [(nid, f)]
    while True:
        step = descend(p, par, *chain[-1])
        if isinstance(step, str) or step[0] in ("cut", "ind", "rfl"):
            return chain, step
        chain.append(step)


def is_implicit(p: ProofFigure, nid: str, f: Formula, par: Optional[dict] = None) -> bool:
    return trace_down(p, nid, f, par)[1] != "end"


# diagnostics and configuration


@dataclass(frozen=True)
class Diagnostic:
    node: str
    clause: str
    msg: str

    def __str__(self) -> str:
        return f"{self.node}: [{self.clause}] {self.msg}"


@dataclass
class Checker:
    """Evaluation context for checks: evaluator, extra axioms, strictness."""

    ev: L.Evaluator = field(default_factory=L.Evaluator)
    axioms: tuple = ()
    strict: bool = True

    def truth(self, f: Formula, pool: tuple = ()) -> Optional[bool]:
        if not L.is_closed(f) or not L.is_bounded(f):
            return None
        b = replace(self.ev.budget, pool=tuple(pool) + tuple(self.ev.budget.pool))
        return self.ev.eval_delta0(f, b)

    def is_true(self, f: Formula, pool: tuple = ()) -> bool:
        return self.truth(f, pool) is True


def proof_terms(n: ProofNode) -> Iterator[ObjTerm]:
    for f in n.concl:
        yield from L.formula_terms(f)
    for t in (n.witness, n.bound, *n.terms):
        if t is not None:
            yield t


def closed_values(n: ProofNode, ev: L.Evaluator) -> set:
    """Ordinal values of the closed subterms occurring in a node."""
    out = set()
    for t in proof_terms(n):
        for s in L.term_subterms(t):
            if not L.is_closed_term(s):
                continue
            if isinstance(s, Const):
                out.add(s.val)
            try:
                out.add(ev.eval_term(s))
            except (O.Undecidable, ValueError):
                pass
    return out


def proof_pool(p: ProofFigure, ev: L.Evaluator) -> tuple:
    vals = {O.ZERO, O.ONE}
    for n in p.nodes.values():
        vals |= closed_values(n, ev)
    vals |= {O.nsum(v, O.ONE) for v in list(vals) if not O.contains_mu(v)}
    return tuple(sorted(vals, key=O.to_str))


# matching against configured axioms


def _match_term(pat: ObjTerm, t: ObjTerm, sub: dict, bound: dict) -> bool:
    if isinstance(pat, Var):
        if pat.name in bound:
            return isinstance(t, Var) and t.name == bound[pat.name]
        if pat.name in sub:
            return sub[pat.name] == t
        if L.term_vars(t) & set(bound.values()):
            return False
        sub[pat.name] = t
        return True
    if type(pat) is not type(t):
        return False
    if isinstance(pat, Const):
        return pat.val == t.val
    if isinstance(pat, (L.Plus, L.Times)):
        return _match_term(pat.left, t.left, sub, bound) and _match_term(pat.right, t.right, sub, bound)
    return _match_term(pat.exp, t.exp, sub, bound)


def match_formula(pat: Formula, f: Formula, sub: Optional[dict] = None, bound: Optional[dict] = None) -> bool:
    """First-order matching; free variables of pat are metavariables."""
    sub = {} if sub is None else sub
    bound = {} if bound is None else bound
    if type(pat) is not type(f):
        return False
    if isinstance(pat, L.ATOMS):
        if pat.pos != f.pos:
            return False
        if isinstance(pat, L.RApp) and pat.rid != f.rid:
            return False
        return all(_match_term(a, b, sub, bound) for a, b in zip(L._atom_terms(pat), L._atom_terms(f)))
    if isinstance(pat, (Or, And)):
        return match_formula(pat.left, f.left, sub, bound) and match_formula(pat.right, f.right, sub, bound)
    if isinstance(pat, L.BOUNDED) and not _match_term(pat.bound, f.bound, sub, bound):
        return False
    inner = dict(bound)
    inner[pat.var] = f.var
    return match_formula(pat.body, f.body, sub, inner)


def parse_axioms(text: str) -> tuple:
    return tuple(L.from_sexpr(e) for e in sexpr.read_all(text))


# rule schemas


def pex_parts(f: Formula) -> Optional[ObjTerm]:
    """The term s when f has the (Pex) shape."""
    if not (isinstance(f, ExB) and isinstance(f.body, ExB) and isinstance(f.body.body, And)):
        return None
    x, y, core = f.var, f.body.var, f.body.body
    if f.bound != L.OMEGA1_T or f.body.bound != L.OMEGA1_T or x == y:
        return None
    lt, pa = core.left, core.right
    if not (isinstance(lt, Less) and lt.pos and lt.t == Var(x)):
        return None
    if not (isinstance(pa, PAtom) and pa.pos and pa.t0 == Var(x) and pa.t1 == Var(y)):
        return None
    if L.term_vars(lt.s) & {x, y}:
        return None
    return lt.s


def prho0ex_parts(f: Formula) -> Optional[ObjTerm]:
    if not (isinstance(f, Ex) and isinstance(f.body, And)):
        return None
    x, lt, pr = f.var, f.body.left, f.body.right
    if not (isinstance(lt, Less) and lt.pos and lt.t == Var(x) and x not in L.term_vars(lt.s)):
        return None
    if not (isinstance(pr, PRhoAtom) and pr.pos and pr.t == Var(x)):
        return None
    return lt.s


def is_cut_formula(f: Formula) -> bool:
    # bounded existentials are admitted alongside the E-formulas
    return L.is_eform(f) or isinstance(f, ExB)


def d1_shape_ok(f: Formula) -> bool:
    """Shapes allowed for the relativized formulas of a (D1)."""
    if not L.is_closed(f):
        return False
    if isinstance(f, AllB) and rfl_shape(f.body, f.var):
        return True
    if rfl_shape(f, "_"):
        return True
    return (isinstance(f, Ex) and isinstance(f.body, And) and isinstance(f.body.left, PRhoAtom)
            and f.body.left.pos and L.is_delta0(f.body.right))


def sigma2_sub_ok(f: Formula) -> bool:
    """Closed subformula shapes of a sentence ex x all y B with B bounded."""
    if not L.is_closed(f):
        return False
    if L.is_delta0(f):
        return True
    if isinstance(f, All):
        return L.is_delta0(f.body)
    if isinstance(f, Ex):
        b = f.body
        return L.is_delta0(b) or (isinstance(b, All) and L.is_delta0(b.body))
    return False


class _Ctx:
    def __init__(self, p: ProofFigure, chk: Checker):
        self.p = p
        self.chk = chk
        self.par = p.parents()
        self.pool = proof_pool(p, chk.ev)
        self.out: list = []

    def diag(self, n: ProofNode, clause: str, msg: str):
        self.out.append(Diagnostic(n.id, clause, msg))

    def optional_guard(self, n: ProofNode, guard: Formula, present: bool, clause: str):
        """A guard may be absent only when its dual is a true closed literal."""
        if present:
            return
        dual = L.negate(guard)
        v = self.chk.truth(dual, self.pool) if L.is_closed(dual) else False
        if v is True or (v is None and not self.chk.strict):
            return
        self.diag(n, clause, f"guard {L.to_str(guard)} absent but its dual is not a true closed literal")

    def eigen_ok(self, n: ProofNode, extra: tuple = ()):
        y = n.eigen
        if y is None:
            self.diag(n, "eigenvariable", "missing eigenvariable")
            return
        if any(y in L.free_vars(f) for f in n.concl) or any(y in L.term_vars(t) for t in extra):
            self.diag(n, "eigenvariable", f"eigenvariable {y} occurs free below the rule")


def _check_axiom(c: _Ctx, n: ProofNode):
    cands = n.main[:1] or n.concl
    undecided = False
    for a in cands:
        if L.is_closed(a) and L.is_bounded(a):
            v = c.chk.truth(a, c.pool)
            if v is True:
                return
            undecided |= v is None
        if L.is_delta0(a) and any(match_formula(ax, a) for ax in c.chk.axioms):
            return
    if undecided and not c.chk.strict:
        return
    why = "undecided" if undecided else "no true closed literal, true closed bounded formula or axiom instance"
    c.diag(n, "ax", why)


def _check_taut(c: _Ctx, n: ProofNode):
    pairs = [n.main[:2]] if len(n.main) >= 2 else [(a, L.negate(a)) for a in n.concl]
    for a, b in pairs:
        if b == L.negate(a) and a in n.concl and b in n.concl and (L.is_literal(a) or L.is_delta0(a)):
            return
    c.diag(n, "taut", "no complementary pair of literals or bounded formulas")


def _check_logical(c: _Ctx, n: ProofNode):
    r = n.rule
    want = {"or": Or, "and": And, "ex": Ex, "bex": ExB, "all": All, "ball": AllB}[r]
    if not n.main or not isinstance(n.main[0], want):
        c.diag(n, r, f"main formula is not of shape {want.__name__}")
        return False
    m = n.main[0]
    if r in ("ex", "bex") and n.witness is None:
        c.diag(n, r, "missing witness term")
        return False
    if r == "bex":
        g = L.not_less(n.witness, m.bound)
        c.optional_guard(n, g, g in n.main[1:], "bex")
        if any(f != g for f in n.main[1:]):
            c.diag(n, "bex", "unexpected extra principal formula")
    if r in ("all", "ball"):
        c.eigen_ok(n)
        if n.eigen is None:
            return False
    return True


def _check_ind(c: _Ctx, n: ProofNode):
    if None in (n.var, n.formula, n.eigen, n.witness, n.bound):
        c.diag(n, "ind", "payload needs var, formula, eigen, witness and bound")
        return False
    g = L.not_less(n.witness, n.bound)
    c.optional_guard(n, g, g in n.main, "ind")
    c.eigen_ok(n, (n.witness, n.bound))
    return True


def _check_rfl(c: _Ctx, n: ProofNode):
    if None in (n.var, n.formula, n.eigen, n.bound):
        c.diag(n, "Rfl", "payload needs var, formula, eigen and bound")
        return False
    if rfl_shape(n.formula, n.var) is None:
        c.diag(n, "Rfl", "side formula is not ex z ex w [Pr0(z) and B] with bounded B")
    c.eigen_ok(n, (n.bound,))
    return True


def _check_sigma(c: _Ctx, n: ProofNode):
    r = n.rule
    if r == "PSigma1":
        if None in (n.var, n.formula, n.witness) or len(n.terms) != 2:
            c.diag(n, r, "payload needs var, formula, witness and two terms")
            return False
        _, principal, guards = psigma1_parts(n)
    else:
        if None in (n.formula, n.witness, n.bound):
            c.diag(n, r, "payload needs formula, witness and bound")
            return False
        _, principal, guards = prho0sigma1_parts(n)
    if not L.is_sigma1(n.formula):
        c.diag(n, r, "formula is not Sigma1 without P-predicates")
    if not n.main or n.main[0] != principal:
        c.diag(n, r, "principal formula is not the relativized instance")
    for g in guards:
        c.optional_guard(n, g, g in n.main[1:], r)
    return True


def _check_d1(c: _Ctx, n: ProofNode, prem: tuple):
    a = n.relativizer
    if not (isinstance(a, O.D) and a.level == 1):
        c.diag(n, "D1", "relativizer is not a D1-term")
        return
    moved = d1_relativized(n, prem)
    for f in moved:
        if not d1_shape_ok(f):
            c.diag(n, "D1", f"relativized formula {L.to_str(f)} has a forbidden shape")
    rel = {L.relativize(f, Const(a)) for f in moved}
    for f in n.concl:
        if f in rel:
            continue
        if is_implicit(c.p, n.id, f, c.par) and not (L.is_closed(f) and L.is_bounded(f)):
            c.diag(n, "D1", f"implicit formula {L.to_str(f)} is not a bounded sentence")


def _check_d0(c: _Ctx, n: ProofNode):
    a = n.relativizer
    if not (isinstance(a, O.D) and a.level == 0):
        c.diag(n, "D0", "relativizer is not a D0-term")
    for f in n.concl:
        if not sigma2_sub_ok(f):
            c.diag(n, "D0", f"{L.to_str(f)} is not a closed subformula of a Sigma2 sentence")


def _check_node(c: _Ctx, n: ProofNode):
    if n.rule not in RULES:
        c.diag(n, "structure", f"unknown rule {n.rule}")
        return
    if len(n.prem) != arity(n.rule):
        c.diag(n, "structure", f"{n.rule} needs {arity(n.rule)} premises, has {len(n.prem)}")
        return
    for m in n.main:
        if m not in n.concl:
            c.diag(n, "structure", "principal formula missing from the conclusion")
            return
    r = n.rule
    ok = True
    if r == "ax":
        _check_axiom(c, n)
    elif r == "taut":
        _check_taut(c, n)
    elif r == "Pex":
        s = pex_parts(n.main[0]) if n.main else None
        if s is None:
            c.diag(n, "Pex", "main formula is not ex x,y<w1 [s<x and P(x,y)]")
        else:
            g = L.not_less(s, L.OMEGA1_T)
            c.optional_guard(n, g, g in n.main[1:], "Pex")
    elif r == "Prho0ex":
        if not n.main or prho0ex_parts(n.main[0]) is None:
            c.diag(n, "Prho0ex", "main formula is not ex x [s<x and Pr0(x)]")
    elif r in ("or", "and", "ex", "bex", "all", "ball"):
        ok = _check_logical(c, n)
    elif r == "ind":
        ok = _check_ind(c, n)
    elif r == "Rfl":
        ok = _check_rfl(c, n)
    elif r == "cut":
        if n.formula is None:
            c.diag(n, "cut", "missing cut formula")
            ok = False
        elif not is_cut_formula(n.formula):
            c.diag(n, "cut", "cut formula not E-formula")
    elif r in ("PSigma1", "Prho0Sigma1"):
        ok = _check_sigma(c, n)
    elif r == "D0":
        _check_d0(c, n)
    if not ok:
        return
    prems = [c.p[q].concl for q in n.prem]
    if r == "D1":
        _check_d1(c, n, prems[0])
        allowed = [set(d1_relativized(n, prems[0]))] if isinstance(n.relativizer, O.D) else [set()]
    else:
        allowed = [set(m) for m in minors(n)]
    for i, (pc, al) in enumerate(zip(prems, allowed)):
        extra = [f for f in pc if f not in n.concl and f not in al]
        if extra:
            c.diag(n, "context", f"premise {i} has formulas not in the conclusion: "
                   + ", ".join(L.to_str(f) for f in extra))


def structure_check(p: ProofFigure) -> list:
    out = []
    seen_parent = {}
    for n in p.nodes.values():
        for q in n.prem:
            if q not in p.nodes:
                out.append(Diagnostic(n.id, "structure", f"unknown premise {q}"))
            elif q in seen_parent:
                out.append(Diagnostic(q, "structure", "node has two parents"))
            else:
                seen_parent[q] = n.id
    if p.root in seen_parent:
        out.append(Diagnostic(p.root, "structure", "root has a parent"))
    if out:
        return out
    seen = set()
    stack = [p.root]
    while stack:
        i = stack.pop()
        if i in seen:
            return [Diagnostic(i, "structure", "cycle")]
        seen.add(i)
        stack.extend(p[i].prem)
    for i in p.nodes:
        if i not in seen:
            out.append(Diagnostic(i, "structure", "node unreachable from the root"))
    return out


def rule_check(p: ProofFigure, chk: Optional[Checker] = None) -> list:
    """One diagnostic per violated rule schema."""
    out = structure_check(p)
    if out:
        return out
    c = _Ctx(p, chk or Checker())
    for n in p.walk():
        _check_node(c, n)
    return c.out


# heights


class Height(tuple):
    """omega*w + n with w in {0, 1}."""

    def __new__(cls, w: int, n: int):
        return super().__new__(cls, (w, n))

    w = property(lambda self: self[0])
    n = property(lambda self: self[1])

    @property
    def h0(self) -> int:
        return self[1]

    def __str__(self) -> str:
        if self.w == 0:
            return str(self.n)
        return "w" if self.n == 0 else f"w+{self.n}"


def heights(p: ProofFigure) -> dict:
    out = {p.root: Height(0, 0)}
    for n in p.walk():
        h = out[n.id]
        for q in n.prem:
            if n.rule == "D1":
                out[q] = Height(1, 0)
            elif n.rule == "D0":
                out[q] = Height(0, 0)
            elif n.rule == "h":
                out[q] = Height(h.w, h.n + 1)
            else:
                out[q] = h
    return out


# ordinal assignment


class AssignError(Exception):
    pass


@dataclass(frozen=True)
class Annotation:
    o: dict
    h: dict

    @property
    def root(self) -> OrdTerm:
        return self.o[self._root]

    _root: str = ""


def d1_series(p: ProofFigure, par: Optional[dict] = None) -> dict:
    """Map each (D1) to the lowest (D1) of its consecutive series."""
    par = p.parents() if par is None else par
    out = {}
    for n in p.walk():
        if n.rule != "D1":
            continue
        low = n.id
        while low in par and p[par[low][0]].rule == "D1":
            low = par[low][0]
        out[n.id] = low
    return out


def stock_domain(p: ProofFigure) -> set:
    dom = set(d1_series(p).values())
    if p[p.root].rule == "D0":
        dom.add(p.root)
    return dom


def assign(p: ProofFigure, stocks: Optional[dict] = None, ev: Optional[L.Evaluator] = None,
           hs: Optional[dict] = None) -> Annotation:
    stocks = stocks or {}
    ev = ev or L.DEFAULT
    hs = hs or heights(p)
    o: dict = {}
    for n in reversed(list(p.walk())):
        a = [o[q] for q in n.prem]
        r = n.rule
        if r in AXIOMS:
            v = O.ONE
        elif r in ("PSigma1", "Prho0Sigma1"):
            v = a[0]
        elif r in ("or", "bex", "ex", "ball", "all"):
            v = O.nsum(a[0], O.ONE)
        elif r in ("and", "cut", "Rfl"):
            v = O.nsum(a[0], a[1])
        elif r == "h":
            v = O.wpow(a[0])
        elif r == "ind":
            v = O.nprod(O.nsum(a[0], a[1], O.numeral(2)), ev.mj(n.bound))
        elif r == "D1":
            if hs[n.id].w == 0:
                if n.id not in stocks:
                    raise AssignError(f"{n.id}: lowest (D1) has no stock")
                v = O.D(1, O.nsum(stocks[n.id], O.wpow(a[0])))
            else:
                v = a[0]
        elif r == "D0":
            if n.id not in stocks:
                raise AssignError(f"{n.id}: (D0) has no stock")
            v = O.D(0, O.nsum(stocks[n.id], a[0]))
        else:
            raise AssignError(f"{n.id}: unknown rule {r}")
        o[n.id] = v
    return Annotation(o, hs, p.root)


# height regulation and stock conditions


def _h_checks(p: ProofFigure, hs: dict, par: dict) -> list:
    out = []

    def diag(nid, clause, msg):
        out.append(Diagnostic(nid, clause, msg))

    for n in p.walk():
        h = hs[n.id]
        if h.w == 0:
            fv = set().union(*(L.free_vars(f) for f in n.concl)) if n.concl else set()
            if fv:
                diag(n.id, "h1", f"free variables {sorted(fv)} below height w")
        if n.rule == "Prho0ex" and n.main:
            _, fate = trace_down(p, n.id, n.main[0], par)
            if isinstance(fate, tuple) and fate[0] == "cut" and hs[fate[1]].w == 0:
                diag(fate[1], "h2", f"cut on the (Prho0ex) formula of {n.id} below height w")
        if n.rule == "cut" and n.formula is not None:
            d = L.dg(n.formula)
            if d > h.h0:
                diag(n.id, "h3", f"dg(C)={d} exceeds h0={h.h0}")
        if n.rule == "ind":
            d = L.dg(AllB(n.var, n.witness, n.formula))
            if h.w == 0 or h.n < d:
                diag(n.id, "h4", f"height {h} below w+{d}")
            if any(m.rule == "ind" for m in p.above(n.id)):
                diag(n.id, "h4", "nested (ind) rules")
        if n.rule == "Rfl":
            path = p.path_to_root(n.id)[1:]
            d1s = [i for i in path if p[i].rule == "D1"]
            if not d1s:
                diag(n.id, "h5", "no (D1) below the (Rfl)")
            else:
                j = d1s[-1]
                d = L.dg(ExB(n.var, n.bound, L.negate(L.relativize(n.formula, Var(n.eigen)))))
                if hs[j].w == 0 and hs[j].n < d:
                    diag(j, "h5", f"height {hs[j]} below dg={d} of the (Rfl) at {n.id}")
        if n.rule == "D1" and n.id in par:
            below = p.path_to_root(n.id)[1:]
            if any(p[i].rule == "D1" for i in below) and p[below[0]].rule != "D1":
                diag(n.id, "h6", "(D1) rules above one another are not consecutive")
        if n.rule == "D0" and n.id != p.root:
            diag(n.id, "h7", "(D0) occurs other than as the last rule")
    if p[p.root].rule != "D0":
        diag(p.root, "h7", "proof does not end with (D0)")
    return out


def _p_checks(p: ProofFigure, stocks: dict, ann: Annotation, ev: L.Evaluator, par: dict) -> list:
    out = []

    def diag(nid, clause, msg):
        out.append(Diagnostic(nid, clause, msg))

    dom = stock_domain(p)
    for k in stocks:
        if k not in dom:
            diag(k, "stock", "stock on a node that is not a lowest (D1) or the last (D0)")
    for k in dom:
        if k not in stocks:
            diag(k, "stock", "missing stock")

    for n in p.walk():
        if n.rule != "ind":
            continue
        a0, a1 = ann.o[n.prem[0]], ann.o[n.prem[1]]
        d = L.dg(L.subst(n.formula, n.var, Var(n.eigen)))
        if a1 != O.numeral(d):
            diag(n.id, "p1", f"o of the right premise is {O.to_str(a1)}, dg(A(y))={d}")
        if O.finite_value(a0) is None:
            diag(n.id, "p1", f"o of the left premise {O.to_str(a0)} is not finite")

    series = d1_series(p, par)
    value_cache: dict = {}

    def values_above(nid):
        vals = set()
        for m in p.above(nid):
            if m.id not in value_cache:
                value_cache[m.id] = closed_values(m, ev)
            vals |= value_cache[m.id]
        return vals

    def rule_conditions(n: ProofNode, level: int, c: OrdTerm):
        a = n.relativizer
        if not (isinstance(a, O.D) and a.level == level):
            diag(n.id, "p2", "relativizer missing or of the wrong level")
            return
        up = ann.o[n.prem[0]]
        target = O.nsum(c, O.wpow(up) if level == 1 else up)
        try:
            if not O.gset_below(O.D(level, c), c, c):
                diag(n.id, "p2", f"G_D{level}(c)(c) < c fails for c={O.to_str(c)}")
            if O.lt(a.arg, target):
                diag(n.id, "p2", f"relativizer argument below {O.to_str(target)}")
            if O.lt(a, O.D(level, target)):
                diag(n.id, "p2", "relativizer below the assigned collapse")
            vals = values_above(n.id)
            if level == 1:
                # relativizers of the same series pass through as context
                vals -= {m.relativizer for m in p.above(n.id)
                         if m.id != n.id and m.rule == "D1" and series.get(m.id) == series.get(n.id)}
            for v in sorted(vals, key=O.to_str):
                if not O.gset_below(O.D(level, c), v, c):
                    diag(n.id, "p2.1", f"G_D{level}(c)({O.to_str(v)}) < c fails")
        except O.Undecidable as e:
            diag(n.id, "p2", f"undecidable comparison: {e}")

    for n in p.walk():
        if n.rule == "D1" and series.get(n.id) in stocks:
            rule_conditions(n, 1, stocks[series[n.id]])
    root = p[p.root]
    if root.rule == "D0" and root.id in stocks:
        c0 = stocks[root.id]
        rule_conditions(root, 0, c0)
        for m in p.above(root.id):
            if m.rule != "D1" or series.get(m.id) not in stocks:
                continue
            b = m.relativizer
            c1 = stocks[series[m.id]]
            try:
                if isinstance(b, O.D) and not O.lt(b.arg, c0):
                    diag(m.id, "p2.2", f"relativizer argument not below the (D0) stock {O.to_str(c0)}")
                if not O.gset_below(O.D(0, c0), c1, c0):
                    diag(m.id, "p2.2", f"G_D0(c0)(c1) < c0 fails for c1={O.to_str(c1)}")
            except O.Undecidable as e:
                diag(m.id, "p2.2", f"undecidable comparison: {e}")
    return out


def stock_check(p: ProofFigure, stocks: dict, ann: Optional[Annotation] = None,
                chk: Optional[Checker] = None) -> list:
    """(h1)-(h7), (p1) and the (p2) family."""
    chk = chk or Checker()
    par = p.parents()
    hs = ann.h if ann else heights(p)
    out = _h_checks(p, hs, par)
    if ann is None:
        try:
            ann = assign(p, stocks, chk.ev, hs)
        except (AssignError, O.Undecidable) as e:
            return out + [Diagnostic(p.root, "assign", str(e))]
    return out + _p_checks(p, stocks, ann, chk.ev, par)


def validate(p: ProofFigure, stocks: Optional[dict] = None, chk: Optional[Checker] = None,
             regulated: bool = True) -> tuple:
    """Full check; returns (diagnostics, annotation or None)."""
    chk = chk or Checker()
    stocks = stocks or {}
    diags = rule_check(p, chk)
    if any(d.clause == "structure" for d in diags):
        return diags, None
    hs = heights(p)
    try:
        ann = assign(p, stocks, chk.ev, hs)
    except (AssignError, O.Undecidable) as e:
        return diags + [Diagnostic(p.root, "assign", str(e))], None
    if regulated:
        diags += stock_check(p, stocks, ann, chk)
    return diags, ann
