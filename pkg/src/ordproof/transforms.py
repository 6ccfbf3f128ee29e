"""Proof surgeries and the construction of initial proofs with stock."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Optional

from . import calculus as C
from . import language as L
from . import ordinals as O
from .calculus import IdGen, ProofFigure, ProofNode, seq
from .language import All, AllB, And, Const, Ex, ExB, Formula, ObjTerm, Or, Var
from .ordinals import OrdTerm


class TransformError(Exception):
    def __init__(self, node: str, msg: str):
        super().__init__(f"{node}: {msg}")
        self.node = node


class Builder:
    """Accumulates nodes with fresh ids."""

    def __init__(self, taken: Iterable[str] = (), prefix: str = "n"):
        self.nodes: dict = {}
        self.ids = IdGen(taken, prefix)

    def add(self, rule: str, concl: Iterable[Formula], prem: Iterable[str] = (), **payload) -> str:
        nid = self.ids()
        self.nodes[nid] = ProofNode(nid, rule, seq(*concl), tuple(prem), **payload)
        return nid

    def figure(self, root: str) -> ProofFigure:
        return ProofFigure(dict(self.nodes), root)


def fresh_var(avoid: Iterable[str], base: str = "v") -> str:
    avoid = set(avoid)
    i = 1
    while f"{base}{i}" in avoid:
        i += 1
    return f"{base}{i}"


def _vars_of(fs: Iterable[Formula]) -> set:
    out = set()
    for f in fs:
        out |= L.free_vars(f) | L.bound_vars(f)
    return out


# tautologies


def _taut(b: Builder, ctx: tuple, a: Formula) -> str:
    na = L.negate(a)
    concl = ctx + (na, a)
    if L.is_literal(a) or L.is_delta0(a):
        return b.add("taut", concl, main=(a, na))
    if isinstance(a, (Or, And)):
        # the conjunctive side is the (and); each branch is an (or) over a smaller tautology
        conj, disj = (na, a) if isinstance(a, Or) else (a, na)
        prems = []
        for part, comp in ((a.left, conj.left), (a.right, conj.right)):
            q = _taut(b, ctx, part)
            prems.append(b.add("or", ctx + (comp, disj), [q], main=(disj,)))
        return b.add("and", concl, prems, main=(conj,))
    avoid = _vars_of(ctx + (a,))
    y = fresh_var(avoid)
    univ, exis = (na, a) if isinstance(a, (Ex, ExB)) else (a, na)
    inst_e = L.subst(exis.body, exis.var, Var(y))
    q = _taut(b, ctx, inst_e)
    if isinstance(exis, Ex):
        e = b.add("ex", ctx + (L.negate(inst_e), exis), [q], main=(exis,), witness=Var(y))
        return b.add("all", concl, [e], main=(univ,), eigen=y)
    g = L.not_less(Var(y), exis.bound)
    e = b.add("bex", ctx + (g, L.negate(inst_e), exis), [q], main=(exis, g), witness=Var(y))
    return b.add("ball", concl, [e], main=(univ,), eigen=y)


def taut_proof(gamma: Iterable[Formula], a: Formula, prefix: str = "t") -> ProofFigure:
    """A proof of gamma, not-A, A whose ordinal is dg(A)."""
    b = Builder(prefix=prefix)
    root = _taut(b, tuple(gamma), a)
    return b.figure(root)


# structural helpers


def _with_nodes(p: ProofFigure, nodes: dict, root: Optional[str] = None) -> ProofFigure:
    return ProofFigure(nodes, root or p.root).pruned()


def graft(p: ProofFigure, old: str, new_root: str, extra: Optional[dict] = None) -> ProofFigure:
    """Put the subtree rooted at new_root where old was."""
    nodes = dict(p.nodes)
    nodes.update(extra or {})
    par = p.parents()
    if old not in par:
        return _with_nodes(p, nodes, new_root)
    mid, i = par[old]
    m = nodes[mid]
    prem = list(m.prem)
    prem[i] = new_root
    nodes[mid] = replace(m, prem=tuple(prem))
    return _with_nodes(p, nodes)


def erase_unary(p: ProofFigure, nid: str, keep: int = 0) -> ProofFigure:
    """Replace a rule by one of its premises."""
    return graft(p, nid, p[nid].prem[keep])


def copy_subtree(p: ProofFigure, nid: str, ids: IdGen) -> tuple:
    """Fresh-id copy of the subtree at nid; returns (nodes, new root id)."""
    out, ren = {}, {}
    for n in p.walk(nid):
        ren[n.id] = ids()
    for n in p.walk(nid):
        out[ren[n.id]] = replace(n, id=ren[n.id], prem=tuple(ren[q] for q in n.prem))
    return out, ren[nid]


def subst_node(n: ProofNode, x: str, t: ObjTerm) -> ProofNode:
    def f(a):
        return L.subst(a, x, t)

    def tt(s):
        return None if s is None else L.term_subst(s, x, t)

    kw = dict(concl=tuple(f(a) for a in n.concl), main=tuple(f(a) for a in n.main),
              witness=tt(n.witness), bound=tt(n.bound), terms=tuple(tt(s) for s in n.terms))
    if n.formula is not None:
        # the formula field may bind its own variable (ind, Rfl, PSigma1)
        own = {n.var} if n.rule in ("ind", "Rfl", "PSigma1") else set()
        kw["formula"] = n.formula if x in own else f(n.formula)
    return replace(n, **kw)


def subst_subtree(p: ProofFigure, nid: str, x: str, t: ObjTerm) -> ProofFigure:
    """Substitute t for the free variable x throughout the subtree at nid.

    Rules that reuse x as their eigenvariable rebind it, so the substitution
    stops at their premises.
    """
    nodes = dict(p.nodes)
    stack = [nid]
    while stack:
        n = nodes[stack.pop()]
        nodes[n.id] = subst_node(n, x, t)
        if n.eigen != x:
            stack.extend(n.prem)
    return ProofFigure(nodes, p.root)


def weaken(p: ProofFigure, fs: Iterable[Formula], at: Optional[str] = None) -> ProofFigure:
    """Add formulas to the sequent at `at` and to every sequent below it."""
    fs = tuple(fs)
    nodes = dict(p.nodes)
    for i in p.path_to_root(at or p.root):
        n = nodes[i]
        if n.rule == "D0":
            bad = [f for f in fs if not C.sigma2_sub_ok(f)]
            if bad:
                raise TransformError(i, f"weakening by {L.to_str(bad[0])} breaks the (D0) shape")
        nodes[i] = replace(n, concl=seq(*n.concl, *fs))
    return ProofFigure(nodes, p.root)


def push_down(p: ProofFigure, nid: str, fs: Iterable[Formula]) -> ProofFigure:
    """Weaken every sequent strictly below nid."""
    par = p.parents()
    if nid not in par:
        return p
    return weaken(p, fs, par[nid][0])


# false literal elimination


def drop_false_literal(p: ProofFigure, lit: Formula, at: Optional[str] = None,
                       ev: Optional[L.Evaluator] = None, check: bool = True) -> ProofFigure:
    """Remove a false closed literal and all its ancestors above `at`.

    The ordinal of every remaining sequent is unchanged.
    """
    at = at or p.root
    ev = ev or L.DEFAULT
    if not L.is_literal(lit) or not L.is_closed(lit):
        raise TransformError(at, f"{L.to_str(lit)} is not a closed literal")
    if check and ev.eval_literal(lit) is not False:
        raise TransformError(at, f"{L.to_str(lit)} is not false")
    if lit not in p[at].concl:
        raise TransformError(at, f"{L.to_str(lit)} does not occur")
    nodes = dict(p.nodes)
    stack = [at]
    while stack:
        n = nodes[stack.pop()]
        concl = tuple(f for f in n.concl if f != lit)
        main = tuple(f for f in n.main if f != lit)
        rule = n.rule
        pair = n.main[:2] if rule == "taut" and n.main else (lit, L.negate(lit))
        if rule == "taut" and lit in pair:
            rule, main = "ax", tuple(f for f in pair if f != lit)
        elif rule == "ax" and n.main and n.main[0] == lit:
            raise TransformError(n.id, "axiom rests on the literal being dropped")
        nodes[n.id] = replace(n, rule=rule, concl=concl, main=main)
        mins = C.minors(n) if n.prem else ()
        for i, q in enumerate(n.prem):
            if lit in nodes[q].concl and lit not in mins[i]:
                stack.append(q)
    return ProofFigure(nodes, p.root)


# inversion


def _instances(f: Formula, inst) -> tuple:
    if isinstance(f, All):
        return (L.subst(f.body, f.var, inst),)
    if isinstance(f, AllB):
        return (L.not_less(inst, f.bound), L.subst(f.body, f.var, inst))
    if isinstance(f, And):
        return ((f.left, f.right)[inst],)
    if isinstance(f, Or):
        return (f.left, f.right)
    raise TransformError("-", f"cannot invert {L.to_str(f)}")


def invert(p: ProofFigure, f: Formula, inst=None, at: Optional[str] = None,
           ev: Optional[L.Evaluator] = None) -> ProofFigure:
    """Replace f by its instance along all ancestors above `at`.

    inst is a closed term for (all)/(allb), a side index for (and), and unused
    for (or). Rules introducing f are erased.
    """
    at = at or p.root
    ev = ev or L.DEFAULT
    if isinstance(f, (All, AllB)) and (inst is None or not L.is_closed_term(inst)):
        raise TransformError(at, "inversion needs a closed instance term")
    repl = _instances(f, inst)
    intro = {"all": All, "ball": AllB, "and": And, "or": Or}
    cur = p
    stack = [at]
    while stack:
        nid = stack.pop()
        n = cur[nid]
        concl = seq(*(g for g in n.concl if g != f), *repl)
        mins = C.minors(n) if n.prem else ()
        if n.main and n.main[0] == f and intro.get(n.rule) is type(f):
            # the rule introducing f disappears
            if n.rule in ("all", "ball"):
                cur = subst_subtree(cur, n.prem[0], n.eigen, inst)
                keep = 0
            elif n.rule == "and":
                keep = inst
            else:
                keep = 0
            q = cur[n.prem[keep]]
            cur = erase_unary(cur, nid, keep) if len(n.prem) == 1 else graft(cur, nid, q.id)
            if f in q.concl:
                stack.append(q.id)
            continue
        if n.rule in C.AXIOMS:
            cur = ProofFigure({**cur.nodes, nid: _invert_axiom(n, f, concl, ev)}, cur.root)
            continue
        if n.rule == "D1" and f not in cur[n.prem[0]].concl and any(
                L.relativize(g, Const(n.relativizer)) == f for g in cur[n.prem[0]].concl):
            raise TransformError(nid, "inversion through a (D1) relativization")
        if f in n.main:
            raise TransformError(nid, f"{L.to_str(f)} is principal in a ({n.rule})")
        cur = ProofFigure({**cur.nodes, nid: replace(n, concl=concl)}, cur.root)
        for i, q in enumerate(n.prem):
            if f in cur[q].concl and f not in mins[i]:
                stack.append(q)
    return cur


def _invert_axiom(n: ProofNode, f: Formula, concl: tuple, ev: L.Evaluator) -> ProofNode:
    if n.rule == "ax" and (not n.main or n.main[0] != f):
        return replace(n, concl=concl)
    if n.rule == "taut" and f not in n.main[:2]:
        return replace(n, concl=concl)
    # the inverted formula carried the axiom: re-derive from a true closed member
    for g in concl:
        if L.is_closed(g) and L.is_bounded(g) and ev.eval_delta0(g) is True:
            return replace(n, rule="ax", concl=concl, main=(g,))
    raise TransformError(n.id, f"axiom {n.rule} rests on the inverted formula")


# initial proofs

LEAF_KINDS = ("axiom-closure", "PSigma1", "Pexists", "Prho0Sigma1", "Prho0exists",
              "trans-induction", "reflection", "taut")


@dataclass(frozen=True)
class Leaf:
    """A skeleton leaf: the conclusion and the data its proof piece needs."""

    id: str
    kind: str
    concl: tuple
    main: tuple = ()
    var: Optional[str] = None
    formula: Optional[Formula] = None
    terms: tuple = ()
    witness: Optional[ObjTerm] = None
    bound: Optional[ObjTerm] = None
    eigen: Optional[str] = None


@dataclass(frozen=True)
class Skeleton:
    nodes: dict
    root: str


def _or_chain(d: Formula) -> list:
    out = [d]
    while isinstance(out[-1], Or):
        out[-1:] = [out[-1].left, out[-1].right]
    return out


def psigma1_target(u: str, phi: Formula, x: str, y: str, a: str) -> Formula:
    X, Y, A = Var(x), Var(y), Var(a)
    body = Or(L.PAtom(X, Y, False), Or(L.not_less(A, X), Or(
        L.negate(L.subst(phi, u, L.OMEGA1_T)), L.relativize(L.subst(phi, u, X), Y))))
    return All(x, All(y, All(a, body)))


def pexists_target(a: str) -> Formula:
    return AllB(a, L.OMEGA1_T, C.pex_formula(Var(a)))


def prho0sigma1_target(phi: Formula, x: str, y: str) -> Formula:
    X, Y = Var(x), Var(y)
    body = Or(L.PRhoAtom(X, False), Or(L.not_less(Y, X), Or(L.negate(phi), L.relativize(phi, X))))
    return All(x, All(y, body))


def prho0exists_target(y: str) -> Formula:
    return All(y, C.prho0ex_formula(Var(y)))


def prg(a: Formula, x: str, y: str) -> Formula:
    """forall y (forall x<y A(x) -> A(y))."""
    return All(y, Or(L.negate(AllB(x, Var(y), a)), L.subst(a, x, Var(y))))


def induction_target(a: Formula, x: str, y: str) -> Formula:
    return Or(L.negate(prg(a, x, y)), All(y, L.subst(a, x, Var(y))))


def reflection_target(a: Formula, x: str, y: str, z: str) -> Formula:
    Z = Var(z)
    return All(z, Or(L.negate(AllB(x, Z, a)), Ex(y, AllB(x, Z, L.relativize(a, Var(y))))))


class _Pieces:
    def __init__(self, b: Builder):
        self.b = b

    def absorb(self, ctx: tuple, parts: list, d: Formula, prem: str, single: bool = False) -> str:
        """Introduce the right-nested disjunction d over its disjuncts, one (or) per disjunct."""
        b = self.b
        cur = set(parts)
        if single:
            return b.add("or", ctx + (d,), [prem], main=(d,))

        def build(f: Formula, prem: str) -> str:
            if not isinstance(f, Or):
                return prem
            prem = build(f.right, prem)
            for side in (f.right, f.left):
                cur.discard(side)
                cur.add(f)
                prem = b.add("or", ctx + tuple(sorted(cur, key=L.to_str)), [prem], main=(f,))
            return prem

        return build(d, prem)

    def alls(self, ctx: tuple, target: Formula, prem: str, depth: int) -> str:
        """Introduce the outer `depth` universal quantifiers of target."""
        chain = [target]
        for _ in range(depth):
            chain.append(chain[-1].body)
        for outer in reversed(chain[:-1]):
            prem = self.b.add("all", ctx + (outer,), [prem], main=(outer,), eigen=outer.var)
        return prem

    def graft_taut(self, ctx: tuple, a: Formula) -> str:
        sub = taut_proof(ctx, a, prefix="_")
        return self._import(sub)

    def _import(self, sub: ProofFigure) -> str:
        ren = {}
        for n in sub.walk():
            ren[n.id] = self.b.ids()
        for n in sub.walk():
            self.b.nodes[ren[n.id]] = replace(n, id=ren[n.id], prem=tuple(ren[q] for q in n.prem))
        return ren[sub.root]


def _leaf_ctx(leaf: Leaf, target: Formula) -> tuple:
    if target not in leaf.concl:
        raise TransformError(leaf.id, f"{leaf.kind} leaf does not conclude {L.to_str(target)}")
    return tuple(f for f in leaf.concl if f != target)


def build_leaf(b: Builder, leaf: Leaf) -> str:
    pc = _Pieces(b)
    k = leaf.kind
    if k == "taut":
        if len(leaf.main) != 2 or leaf.main[1] != L.negate(leaf.main[0]):
            raise TransformError(leaf.id, "taut leaf needs a complementary :main pair")
        a = leaf.main[0]
        ctx = tuple(f for f in leaf.concl if f not in leaf.main)
        return pc.graft_taut(ctx, a)
    if k == "axiom-closure":
        if not leaf.main:
            raise TransformError(leaf.id, "axiom-closure leaf needs :main")
        target = leaf.main[0]
        ctx = _leaf_ctx(leaf, target)
        depth, core = 0, target
        while isinstance(core, All):
            depth, core = depth + 1, core.body
        ax = b.add("ax", ctx + (core,), main=(core,))
        return pc.alls(ctx, target, ax, depth)
    if k == "PSigma1":
        x, y = (t.name for t in leaf.terms)
        a = leaf.witness.name
        target = psigma1_target(leaf.var, leaf.formula, x, y, a)
        ctx = _leaf_ctx(leaf, target)
        body = target.body.body.body
        parts = _or_chain(body)
        t = pc.graft_taut((), L.subst(leaf.formula, leaf.var, L.OMEGA1_T))
        ps = b.add("PSigma1", ctx + tuple(parts), [t], main=(parts[3], parts[0], parts[1]),
                   var=leaf.var, formula=leaf.formula, terms=(Var(x), Var(y)), witness=Var(a))
        return pc.alls(ctx, target, pc.absorb(ctx, parts, body, ps), 3)
    if k == "Pexists":
        a = leaf.witness.name
        target = pexists_target(a)
        ctx = _leaf_ctx(leaf, target)
        g = L.not_less(Var(a), L.OMEGA1_T)
        ex = C.pex_formula(Var(a))
        ax = b.add("Pex", ctx + (g, ex), main=(ex, g))
        return b.add("ball", ctx + (target,), [ax], main=(target,), eigen=a)
    if k == "Prho0Sigma1":
        x, y = leaf.bound.name, leaf.witness.name
        target = prho0sigma1_target(leaf.formula, x, y)
        ctx = _leaf_ctx(leaf, target)
        body = target.body.body
        parts = _or_chain(body)
        t = pc.graft_taut((), leaf.formula)
        ps = b.add("Prho0Sigma1", ctx + tuple(parts), [t], main=(parts[3], parts[0], parts[1]),
                   formula=leaf.formula, bound=Var(x), witness=Var(y))
        return pc.alls(ctx, target, pc.absorb(ctx, parts, body, ps), 2)
    if k == "Prho0exists":
        y = leaf.witness.name
        target = prho0exists_target(y)
        ctx = _leaf_ctx(leaf, target)
        ex = C.prho0ex_formula(Var(y))
        ax = b.add("Prho0ex", ctx + (ex,), main=(ex,))
        return b.add("all", ctx + (target,), [ax], main=(target,), eigen=y)
    if k == "trans-induction":
        return _induction_piece(b, pc, leaf)
    if k == "reflection":
        return _reflection_piece(b, pc, leaf)
    raise TransformError(leaf.id, f"unknown leaf kind {k}")


def _induction_piece(b: Builder, pc: _Pieces, leaf: Leaf) -> str:
    a, x, y = leaf.formula, leaf.var, leaf.eigen
    target = induction_target(a, x, y)
    ctx = _leaf_ctx(leaf, target)
    Y = Var(y)
    nprg = L.negate(prg(a, x, y))
    avoid = _vars_of(leaf.concl) | {x, y}
    v = fresh_var(avoid)

    def progressive_step(s: ObjTerm) -> str:
        # ctx, not-Prg, not forall x<s A(x), A(s)   with ordinal d0
        below = AllB(x, s, a)
        inst = L.subst(a, x, s)
        conj = And(below, L.negate(inst))
        left = pc.graft_taut(ctx, below)
        right = pc.graft_taut(ctx, inst)
        land = b.add("and", ctx + (conj, L.negate(below), inst), [left, right], main=(conj,))
        return b.add("ex", ctx + (nprg, L.negate(below), inst), [land], main=(nprg,), witness=s)

    guard = L.not_less(Var(x), Y)
    step = progressive_step(Var(v))
    base = pc.graft_taut(ctx + (nprg,), a)
    ind = b.add("ind", ctx + (guard, nprg, a), [step, base], main=(guard,),
                var=x, formula=a, eigen=v, witness=Var(x), bound=Y)
    below = AllB(x, Y, a)
    ball = b.add("ball", ctx + (nprg, below), [ind], main=(below,), eigen=x)
    right = progressive_step(Y)
    ay = L.subst(a, x, Y)
    cut = b.add("cut", ctx + (nprg, ay), [ball, right], formula=L.negate(below))
    allr = b.add("all", ctx + (nprg, All(y, ay)), [cut], main=(All(y, ay),), eigen=y)
    return pc.absorb(ctx, [], target, allr, single=True)


def _reflection_piece(b: Builder, pc: _Pieces, leaf: Leaf) -> str:
    a, x, y, z = leaf.formula, leaf.var, leaf.eigen, leaf.bound.name
    target = reflection_target(a, x, y, z)
    ctx = _leaf_ctx(leaf, target)
    Z, Y = Var(z), Var(y)
    below = AllB(x, Z, a)
    refl = Ex(y, AllB(x, Z, L.relativize(a, Y)))
    delta = (L.negate(below), refl)
    left = pc.graft_taut(ctx + (refl,), below)
    inner = pc.graft_taut(ctx, AllB(x, Z, L.relativize(a, Y)))
    side = ExB(x, Z, L.negate(L.relativize(a, Y)))
    right = b.add("ex", ctx + (L.not_less(Z, Y), side) + delta, [inner], main=(refl,), witness=Y)
    rfl = b.add("Rfl", ctx + delta, [left, right], var=x, formula=a, bound=Z, eigen=y)
    body = target.body
    return pc.alls(ctx, target, pc.absorb(ctx, list(delta), body, rfl), 1)


def embed_q1(sk: Skeleton) -> ProofFigure:
    """Replace every skeleton leaf by its proof piece."""
    return embed_pieces(sk)[0]


def embed_pieces(sk: Skeleton) -> tuple:
    """Like embed_q1, also returning the map leaf id -> root of its piece."""
    b = Builder(sk.nodes.keys(), prefix="e")
    for nid, n in sk.nodes.items():
        if isinstance(n, ProofNode):
            b.nodes[nid] = n
    ren = {}
    for nid, n in sk.nodes.items():
        if isinstance(n, Leaf):
            ren[nid] = build_leaf(b, n)
    for nid, n in list(b.nodes.items()):
        if isinstance(sk.nodes.get(nid), ProofNode):
            b.nodes[nid] = replace(n, prem=tuple(ren.get(q, q) for q in n.prem))
    return b.figure(ren.get(sk.root, sk.root)).pruned(), ren


def cut_degree_bound(p: ProofFigure) -> int:
    k = 10
    for n in p.nodes.values():
        if n.rule == "cut" and n.formula is not None:
            k = max(k, L.dg(n.formula))
        if n.rule == "ind":
            k = max(k, L.dg(AllB(n.var, Var(n.eigen), n.formula)))
    return k


def wrap(q1: ProofFigure, k: Optional[int] = None, c1: OrdTerm = O.ZERO,
         c0: Optional[OrdTerm] = None, ev: Optional[L.Evaluator] = None) -> tuple:
    """Attach k (h), one (D1), k (h) and the final (D0); returns (proof, stocks)."""
    k = cut_degree_bound(q1) if k is None else k
    b0 = C.assign(q1, {}, ev).o[q1.root]
    b = Builder(q1.nodes.keys(), prefix="w")
    b.nodes.update(q1.nodes)
    end = q1.end_sequent()
    top = q1.root
    for _ in range(k):
        top = b.add("h", end, [top])
    b1 = O.omega_tower(k, b0)
    alpha1 = O.D(1, O.nsum(c1, O.wpow(b1)))
    d1 = b.add("D1", end, [top], relativizer=alpha1)
    top = d1
    for _ in range(k):
        top = b.add("h", end, [top])
    bz = O.omega_tower(k, alpha1)
    c0 = O.nsum(c1, O.wpow(b1), O.ONE) if c0 is None else c0
    d0 = b.add("D0", end, [top], relativizer=O.D(0, O.nsum(c0, bz)))
    return b.figure(d0), {d1: c1, d0: c0}


def embed(sk: Skeleton, k: Optional[int] = None, c1: OrdTerm = O.ZERO) -> tuple:
    return wrap(embed_q1(sk), k, c1)


# skeletons: construction helpers and text format


def witness_skeleton(s: Formula, n: int, context: tuple = ()) -> Skeleton:
    """Skeleton for ex x A(x) with bounded A, given that some x < n works.

    The proof cuts on ex z<n A(z): the left side derives ex x A(x) from any
    instance, the right side is the true bounded sentence itself.
    """
    if not (isinstance(s, Ex) and L.is_delta0(s.body)):
        raise TransformError("-", "witness skeleton needs ex x A(x) with bounded A")
    x = s.var
    z = fresh_var(_vars_of((s,) + tuple(context)), "z")
    az = L.subst(s.body, x, Var(z))
    bounded = ExB(z, L.num(n), az)
    nb = L.negate(bounded)
    ctx = tuple(context)
    guard = L.not_less(Var(z), L.num(n))
    nodes = {
        "k0": ProofNode("k0", "cut", seq(*ctx, s), ("k1", "k4"), formula=bounded),
        "k1": ProofNode("k1", "ball", seq(*ctx, s, nb), ("k2",), main=(nb,), eigen=z),
        "k2": ProofNode("k2", "ex", seq(*ctx, s, guard, L.negate(az)), ("k3",), main=(s,), witness=Var(z)),
        "k3": Leaf("k3", "taut", seq(L.negate(az), az), main=(az, L.negate(az))),
        "k4": ProofNode("k4", "ax", seq(*ctx, bounded), main=(bounded,)),
    }
    return Skeleton(nodes, "k0")


def add_lemma(sk: Skeleton, leaf: Leaf, target: Formula, prefix: str = "m") -> Skeleton:
    """Cut a leaf proving target into the skeleton, keeping the old root on the right."""
    nodes = dict(sk.nodes)
    end = _concl(nodes[sk.root])
    cut_id = f"{prefix}{len(nodes)}"
    if C.is_cut_formula(L.negate(target)):
        cf = L.negate(target)
        left = replace(leaf, concl=seq(*leaf.concl, *end))
        nodes[leaf.id] = left
        nodes[sk.root] = _weakened(nodes[sk.root], cf)
        nodes[cut_id] = ProofNode(cut_id, "cut", end, (leaf.id, sk.root), formula=cf)
    else:
        cf = target
        nodes[leaf.id] = replace(leaf, concl=seq(*leaf.concl, *end))
        nodes[sk.root] = _weakened(nodes[sk.root], L.negate(cf))
        nodes[cut_id] = ProofNode(cut_id, "cut", end, (sk.root, leaf.id), formula=cf)
    return Skeleton(nodes, cut_id)


def _concl(n) -> tuple:
    return n.concl


def _weakened(n, f: Formula):
    return replace(n, concl=seq(*n.concl, f))


def leaf_to_sexpr(lf: Leaf) -> list:
    out = ["leaf", lf.id, lf.kind, ":concl", ["seq"] + [L.to_sexpr(f) for f in lf.concl]]
    if lf.main:
        out += [":main", [str(lf.concl.index(f)) for f in lf.main]]
    if lf.var is not None:
        out += [":var", lf.var]
    if lf.formula is not None:
        out += [":formula", L.to_sexpr(lf.formula)]
    if lf.terms:
        out += [":terms", [L.term_to_sexpr(t) for t in lf.terms]]
    if lf.witness is not None:
        out += [":witness", L.term_to_sexpr(lf.witness)]
    if lf.bound is not None:
        out += [":bound", L.term_to_sexpr(lf.bound)]
    if lf.eigen is not None:
        out += [":eigen", lf.eigen]
    return out


def dumps_skeleton(sk: Skeleton) -> str:
    lines = [sexpr_write(["skeleton", ":root", sk.root])]
    order, stack = [], [sk.root]
    while stack:
        n = sk.nodes[stack.pop()]
        order.append(n)
        if isinstance(n, ProofNode):
            stack.extend(reversed(n.prem))
    for n in order:
        lines.append(sexpr_write(leaf_to_sexpr(n) if isinstance(n, Leaf) else C.node_to_sexpr(n)))
    return "\n".join(lines) + "\n"


def loads_skeleton(text: str) -> Skeleton:
    from . import sexpr

    exprs = sexpr.read_all(text)
    if not exprs or not isinstance(exprs[0], list) or exprs[0][:1] != ["skeleton"]:
        raise sexpr.ParseError("expected (skeleton :root <id>) header")
    root = C._keywords(exprs[0][1:], (":root",)).get(":root")
    nodes = {}
    for e in exprs[1:]:
        if isinstance(e, list) and e[:1] == ["leaf"]:
            if len(e) < 3 or e[2] not in LEAF_KINDS:
                raise sexpr.ParseError(f"bad leaf {sexpr.write(e)[:60]}")
            kw = C._keywords(e[3:], (":concl", ":main", ":var", ":formula", ":terms",
                                     ":witness", ":bound", ":eigen"))
            c = kw.get(":concl")
            if not isinstance(c, list) or c[:1] != ["seq"]:
                raise sexpr.ParseError(f"leaf {e[1]}: missing (seq ...) conclusion")
            concl = seq(*(L.from_sexpr(f) for f in c[1:]))
            try:
                main = tuple(concl[int(i)] for i in kw.get(":main", []))
            except (ValueError, IndexError, TypeError):
                raise sexpr.ParseError(f"leaf {e[1]}: bad :main") from None
            n = Leaf(
                e[1], e[2], concl, main,
                var=L._var(kw[":var"]) if ":var" in kw else None,
                formula=L.from_sexpr(kw[":formula"]) if ":formula" in kw else None,
                terms=tuple(L.term_from_sexpr(t) for t in kw.get(":terms", [])),
                witness=L.term_from_sexpr(kw[":witness"]) if ":witness" in kw else None,
                bound=L.term_from_sexpr(kw[":bound"]) if ":bound" in kw else None,
                eigen=L._var(kw[":eigen"]) if ":eigen" in kw else None,
            )
        else:
            n, _ = C.node_from_sexpr(e)
        if n.id in nodes:
            raise sexpr.ParseError(f"duplicate id {n.id}")
        nodes[n.id] = n
    if root not in nodes:
        raise sexpr.ParseError("skeleton root is not defined")
    return Skeleton(nodes, root)


def sexpr_write(e) -> str:
    from . import sexpr

    return sexpr.write(e)
