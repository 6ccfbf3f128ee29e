"""Object terms and negation-normal-form formulas, with a partial evaluator.

Truth values are three-valued: True, False, or None for undecided. The
evaluator is sound but partial; transfinite bounds are searched only over an
explicit candidate pool.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional, Union

from . import ordinals as O
from . import sexpr
from .ordinals import OrdTerm, Undecidable

# object terms


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    val: OrdTerm


@dataclass(frozen=True)
class Plus:
    left: "ObjTerm"
    right: "ObjTerm"


@dataclass(frozen=True)
class Times:
    left: "ObjTerm"
    right: "ObjTerm"


@dataclass(frozen=True)
class WExp:
    exp: "ObjTerm"


ObjTerm = Union[Var, Const, Plus, Times, WExp]

ZERO_T = Const(O.ZERO)
OMEGA1_T = Const(O.OMEGA1)


def num(n: int) -> Const:
    return Const(O.numeral(n))


def term_vars(t: ObjTerm) -> frozenset:
    if isinstance(t, Var):
        return frozenset({t.name})
    if isinstance(t, Const):
        return frozenset()
    if isinstance(t, WExp):
        return term_vars(t.exp)
    return term_vars(t.left) | term_vars(t.right)


def is_closed_term(t: ObjTerm) -> bool:
    return not term_vars(t)


def term_subst(t: ObjTerm, x: str, s: ObjTerm) -> ObjTerm:
    if isinstance(t, Var):
        return s if t.name == x else t
    if isinstance(t, Const):
        return t
    if isinstance(t, WExp):
        return WExp(term_subst(t.exp, x, s))
    return type(t)(term_subst(t.left, x, s), term_subst(t.right, x, s))


def term_map_const(t: ObjTerm, fn: Callable[[Const], ObjTerm]) -> ObjTerm:
    if isinstance(t, Const):
        return fn(t)
    if isinstance(t, Var):
        return t
    if isinstance(t, WExp):
        return WExp(term_map_const(t.exp, fn))
    return type(t)(term_map_const(t.left, fn), term_map_const(t.right, fn))


def term_subterms(t: ObjTerm) -> Iterable[ObjTerm]:
    yield t
    if isinstance(t, WExp):
        yield from term_subterms(t.exp)
    elif isinstance(t, (Plus, Times)):
        yield from term_subterms(t.left)
        yield from term_subterms(t.right)


# formulas


@dataclass(frozen=True)
class Less:
    s: ObjTerm
    t: ObjTerm
    pos: bool = True


@dataclass(frozen=True)
class RApp:
    rid: str
    s: ObjTerm
    t: ObjTerm
    pos: bool = True


@dataclass(frozen=True)
class PAtom:
    t0: ObjTerm
    t1: ObjTerm
    pos: bool = True


@dataclass(frozen=True)
class PRhoAtom:
    t: ObjTerm
    pos: bool = True


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Ex:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class All:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class ExB:
    var: str
    bound: ObjTerm
    body: "Formula"


@dataclass(frozen=True)
class AllB:
    var: str
    bound: ObjTerm
    body: "Formula"


Atom = Union[Less, RApp, PAtom, PRhoAtom]
Formula = Union[Less, RApp, PAtom, PRhoAtom, Or, And, Ex, All, ExB, AllB]
ATOMS = (Less, RApp, PAtom, PRhoAtom)
QUANTS = (Ex, All, ExB, AllB)
BOUNDED = (ExB, AllB)


def is_literal(a: Formula) -> bool:
    return isinstance(a, ATOMS)


def negate(a: Formula) -> Formula:
    """De Morgan dual; an involution on NNF formulas."""
    if isinstance(a, ATOMS):
        return replace(a, pos=not a.pos)
    if isinstance(a, Or):
        return And(negate(a.left), negate(a.right))
    if isinstance(a, And):
        return Or(negate(a.left), negate(a.right))
    if isinstance(a, Ex):
        return All(a.var, negate(a.body))
    if isinstance(a, All):
        return Ex(a.var, negate(a.body))
    if isinstance(a, ExB):
        return AllB(a.var, a.bound, negate(a.body))
    if isinstance(a, AllB):
        return ExB(a.var, a.bound, negate(a.body))
    raise TypeError(a)


def not_less(s: ObjTerm, t: ObjTerm) -> Less:
    return Less(s, t, False)


def _atom_terms(a: Atom) -> tuple:
    if isinstance(a, PRhoAtom):
        return (a.t,)
    if isinstance(a, PAtom):
        return (a.t0, a.t1)
    return (a.s, a.t)


def free_vars(a: Formula) -> frozenset:
    if isinstance(a, ATOMS):
        return frozenset().union(*(term_vars(t) for t in _atom_terms(a)))
    if isinstance(a, (Or, And)):
        return free_vars(a.left) | free_vars(a.right)
    inner = free_vars(a.body) - {a.var}
    if isinstance(a, BOUNDED):
        inner |= term_vars(a.bound)
    return inner


def is_closed(a: Formula) -> bool:
    return not free_vars(a)


def bound_vars(a: Formula) -> frozenset:
    if isinstance(a, ATOMS):
        return frozenset()
    if isinstance(a, (Or, And)):
        return bound_vars(a.left) | bound_vars(a.right)
    return bound_vars(a.body) | {a.var}


def has_p(a: Formula) -> bool:
    if isinstance(a, (PAtom, PRhoAtom)):
        return True
    if isinstance(a, (Less, RApp)):
        return False
    if isinstance(a, (Or, And)):
        return has_p(a.left) or has_p(a.right)
    return has_p(a.body)


def is_bounded(a: Formula) -> bool:
    if isinstance(a, ATOMS):
        return True
    if isinstance(a, (Or, And)):
        return is_bounded(a.left) and is_bounded(a.right)
    if isinstance(a, (Ex, All)):
        return False
    return is_bounded(a.body)


def is_delta0(a: Formula) -> bool:
    return is_bounded(a) and not has_p(a)


def _no_unbounded(a: Formula, kind) -> bool:
    """Only unbounded quantifiers of the given kind occur."""
    if isinstance(a, ATOMS):
        return True
    if isinstance(a, (Or, And)):
        return _no_unbounded(a.left, kind) and _no_unbounded(a.right, kind)
    if isinstance(a, (Ex, All)) and not isinstance(a, kind):
        return False
    return _no_unbounded(a.body, kind)


def is_sigma1(a: Formula) -> bool:
    return not has_p(a) and _no_unbounded(a, Ex)


def is_pi1(a: Formula) -> bool:
    return not has_p(a) and _no_unbounded(a, All)


def is_eform(a: Formula) -> bool:
    return is_literal(a) or isinstance(a, (Or, Ex))


def classify(a: Formula) -> str:
    if is_literal(a):
        return "Literal"
    if is_delta0(a):
        return "Delta0"
    if is_sigma1(a):
        return "Sigma1"
    if is_pi1(a):
        return "Pi1"
    if is_eform(a):
        return "EForm"
    return "Other"


def dg(a: Formula) -> int:
    if is_literal(a) or is_delta0(a):
        return 1
    if isinstance(a, (Or, And)):
        return dg(a.left) + dg(a.right) + 2
    return dg(a.body) + 2


# substitution and relativization


def _fresh(base: str, avoid: frozenset) -> str:
    for i in itertools.count(1):
        name = f"{base}{i}"
        if name not in avoid:
            return name
    raise AssertionError


def subst(a: Formula, x: str, t: ObjTerm) -> Formula:
    """Capture-avoiding substitution of t for the free variable x."""
    if isinstance(a, ATOMS):
        if isinstance(a, PRhoAtom):
            return PRhoAtom(term_subst(a.t, x, t), a.pos)
        if isinstance(a, PAtom):
            return PAtom(term_subst(a.t0, x, t), term_subst(a.t1, x, t), a.pos)
        if isinstance(a, RApp):
            return RApp(a.rid, term_subst(a.s, x, t), term_subst(a.t, x, t), a.pos)
        return Less(term_subst(a.s, x, t), term_subst(a.t, x, t), a.pos)
    if isinstance(a, (Or, And)):
        return type(a)(subst(a.left, x, t), subst(a.right, x, t))
    bound = term_subst(a.bound, x, t) if isinstance(a, BOUNDED) else None
    if a.var == x:
        body = a.body
        var = a.var
    else:
        var, body = a.var, a.body
        tv = term_vars(t)
        if var in tv and x in free_vars(body):
            new = _fresh(var, tv | free_vars(body) | {x})
            body = subst(body, var, Var(new))
            var = new
        body = subst(body, x, t)
    if isinstance(a, BOUNDED):
        return type(a)(var, bound, body)
    return type(a)(var, body)


def map_terms(a: Formula, fn: Callable[[ObjTerm], ObjTerm]) -> Formula:
    if isinstance(a, PRhoAtom):
        return PRhoAtom(fn(a.t), a.pos)
    if isinstance(a, PAtom):
        return PAtom(fn(a.t0), fn(a.t1), a.pos)
    if isinstance(a, RApp):
        return RApp(a.rid, fn(a.s), fn(a.t), a.pos)
    if isinstance(a, Less):
        return Less(fn(a.s), fn(a.t), a.pos)
    if isinstance(a, (Or, And)):
        return type(a)(map_terms(a.left, fn), map_terms(a.right, fn))
    if isinstance(a, BOUNDED):
        return type(a)(a.var, fn(a.bound), map_terms(a.body, fn))
    return type(a)(a.var, map_terms(a.body, fn))


def replace_const(a: Formula, old: OrdTerm, new: ObjTerm) -> Formula:
    """Replace every constant equal to old by the term new."""

    def fn(t: ObjTerm) -> ObjTerm:
        return term_map_const(t, lambda c: new if c.val == old else c)

    return map_terms(a, fn)


def relativize(a: Formula, y: ObjTerm) -> Formula:
    """Bound every unbounded quantifier by y."""
    if isinstance(a, ATOMS):
        return a
    if isinstance(a, (Or, And)):
        return type(a)(relativize(a.left, y), relativize(a.right, y))
    body = relativize(a.body, y)
    if isinstance(a, Ex):
        return ExB(a.var, y, body)
    if isinstance(a, All):
        return AllB(a.var, y, body)
    return type(a)(a.var, a.bound, body)


def subformulas(a: Formula) -> Iterable[Formula]:
    yield a
    if isinstance(a, (Or, And)):
        yield from subformulas(a.left)
        yield from subformulas(a.right)
    elif isinstance(a, QUANTS):
        yield from subformulas(a.body)


def formula_terms(a: Formula) -> Iterable[ObjTerm]:
    if isinstance(a, ATOMS):
        yield from _atom_terms(a)
    elif isinstance(a, (Or, And)):
        yield from formula_terms(a.left)
        yield from formula_terms(a.right)
    else:
        if isinstance(a, BOUNDED):
            yield a.bound
        yield from formula_terms(a.body)


def closed_subterms(a: Formula) -> set:
    out = set()
    for t in formula_terms(a):
        for s in term_subterms(t):
            if is_closed_term(s):
                out.add(s)
    return out


# evaluation


@dataclass(frozen=True)
class RDef:
    """R(a, b) <-> body(R restricted below a, a, b); body is bounded."""

    rid: str
    avar: str
    bvar: str
    body: Formula


@dataclass(frozen=True)
class MuDef:
    """mu y. body(y; params): least y making body true."""

    fid: str
    var: str
    params: tuple
    body: Formula


@dataclass
class Budget:
    pool: tuple = ()
    fuel: int = 10_000
    mu_search: int = 64


class _Fuel:
    def __init__(self, n: int):
        self.n = n

    def spend(self) -> bool:
        self.n -= 1
        return self.n >= 0


@dataclass
class Evaluator:
    """Evaluation session holding definitions for R- and mu-symbols."""

    rdefs: dict = field(default_factory=dict)
    mudefs: dict = field(default_factory=dict)
    budget: Budget = field(default_factory=Budget)
    _rmemo: dict = field(default_factory=dict)

    # terms

    def resolve(self, v: OrdTerm) -> OrdTerm:
        """Replace resolvable mu-subterms by numerals."""
        if not O.contains_mu(v):
            return v
        if isinstance(v, O.Mu):
            args = tuple(self.resolve(a) for a in v.args)
            return self._mu_value(v.fid, args)
        if isinstance(v, O.Sum):
            return O.nsum(*(self.resolve(p) for p in v.parts))
        if isinstance(v, O.WPow):
            return O.wpow(self.resolve(v.exp))
        if isinstance(v, O.D):
            return O.D(v.level, self.resolve(v.arg))
        return O.F(self.resolve(v.arg))

    def _mu_value(self, fid: str, args: tuple) -> OrdTerm:
        md = self.mudefs.get(fid)
        if md is None:
            raise Undecidable(f"no definition for mu-symbol {fid}")
        body = md.body
        for p, v in zip(md.params, args):
            body = subst(body, p, Const(v))
        for n in range(self.budget.mu_search):
            r = self.eval_delta0(subst(body, md.var, num(n)))
            if r is True:
                return O.numeral(n)
            if r is None:
                break
        raise Undecidable(f"mu-term {fid} not resolved within the search bound")

    def eval_term(self, t: ObjTerm) -> OrdTerm:
        if isinstance(t, Var):
            raise ValueError(f"open term: variable {t.name}")
        if isinstance(t, Const):
            return self.resolve(t.val)
        if isinstance(t, Plus):
            return O.osum(self.eval_term(t.left), self.eval_term(t.right))
        if isinstance(t, Times):
            return O.oprod(self.eval_term(t.left), self.eval_term(t.right))
        return O.wpow(self.eval_term(t.exp))

    def mj(self, t: ObjTerm) -> OrdTerm:
        if not is_closed_term(t):
            return O.RHO0
        return self.eval_term(t)

    # literals

    def eval_literal(self, lit: Atom) -> Optional[bool]:
        try:
            val = self._eval_atom(lit)
        except Undecidable:
            return None
        if val is None:
            return None
        return val if lit.pos else not val

    def _eval_atom(self, lit: Atom) -> Optional[bool]:
        if isinstance(lit, Less):
            return O.compare(self.eval_term(lit.s), self.eval_term(lit.t)) is O.LT
        if isinstance(lit, PAtom):
            a, b = self.eval_term(lit.t0), self.eval_term(lit.t1)
            return isinstance(a, O.D) and a.level == 0 and isinstance(b, O.F) and a.arg == b.arg
        if isinstance(lit, PRhoAtom):
            a = self.eval_term(lit.t)
            return isinstance(a, O.D) and a.level == 1
        return self._eval_r(lit.rid, self.eval_term(lit.s), self.eval_term(lit.t))

    def _eval_r(self, rid: str, a: OrdTerm, b: OrdTerm) -> Optional[bool]:
        rd = self.rdefs.get(rid)
        if rd is None or O.finite_value(a) is None:
            return None
        key = (rid, a, b)
        if key not in self._rmemo:
            self._rmemo[key] = None  # guards against ill-founded definitions
            body = subst(subst(rd.body, rd.avar, Const(a)), rd.bvar, Const(b))
            self._rmemo[key] = self.eval_delta0(self._restrict(body, rid, a))
        return self._rmemo[key]

    @staticmethod
    def _restrict(body: Formula, rid: str, a: OrdTerm) -> Formula:
        """Read R inside the body as R restricted to stages below a."""
        if isinstance(body, RApp) and body.rid == rid:
            guard = Less(body.s, Const(a))
            inner = RApp(rid, body.s, body.t)
            restricted = And(guard, inner)
            return restricted if body.pos else negate(restricted)
        if isinstance(body, ATOMS):
            return body
        if isinstance(body, (Or, And)):
            return type(body)(Evaluator._restrict(body.left, rid, a), Evaluator._restrict(body.right, rid, a))
        if isinstance(body, BOUNDED):
            return type(body)(body.var, body.bound, Evaluator._restrict(body.body, rid, a))
        return type(body)(body.var, Evaluator._restrict(body.body, rid, a))

    # sentences

    def eval_delta0(self, s: Formula, budget: Optional[Budget] = None) -> Optional[bool]:
        """Sound three-valued truth of a closed bounded sentence."""
        b = budget or self.budget
        return self._ev(s, b, _Fuel(b.fuel))

    def _ev(self, s: Formula, b: Budget, fuel: _Fuel) -> Optional[bool]:
        if not fuel.spend():
            return None
        if isinstance(s, ATOMS):
            return self.eval_literal(s)
        if isinstance(s, Or):
            l = self._ev(s.left, b, fuel)
            if l is True:
                return True
            r = self._ev(s.right, b, fuel)
            if r is True:
                return True
            return False if (l is False and r is False) else None
        if isinstance(s, And):
            l = self._ev(s.left, b, fuel)
            if l is False:
                return False
            r = self._ev(s.right, b, fuel)
            if r is False:
                return False
            return True if (l is True and r is True) else None
        existential = isinstance(s, (Ex, ExB))
        cands, exhaustive = self._candidates(s, b)
        if cands is None:
            return None
        unknown = False
        for c in cands:
            v = self._ev(subst(s.body, s.var, Const(c)), b, fuel)
            if v is existential:
                return existential
            if v is None:
                unknown = True
        if exhaustive and not unknown:
            return not existential
        return None

    def _candidates(self, s: Formula, b: Budget):
        """Instances to try and whether they exhaust the quantifier range."""
        if isinstance(s, BOUNDED):
            try:
                bound = self.eval_term(s.bound)
            except (Undecidable, ValueError):
                return None, False
            n = O.finite_value(bound)
            if n is not None:
                return [O.numeral(i) for i in range(n)], True
            out = []
            for c in b.pool:
                try:
                    if O.lt(c, bound):
                        out.append(c)
                except Undecidable:
                    continue
            return out, False
        return list(b.pool), False


DEFAULT = Evaluator()


def eval_term(t: ObjTerm, ev: Evaluator = DEFAULT) -> OrdTerm:
    return ev.eval_term(t)


def eval_literal(lit: Atom, ev: Evaluator = DEFAULT) -> Optional[bool]:
    return ev.eval_literal(lit)


def eval_delta0(s: Formula, budget: Optional[Budget] = None, ev: Evaluator = DEFAULT) -> Optional[bool]:
    return ev.eval_delta0(s, budget)


def mj(t: ObjTerm, ev: Evaluator = DEFAULT) -> OrdTerm:
    return ev.mj(t)


def eval_closed(a: Formula, ev: Evaluator = DEFAULT, budget: Optional[Budget] = None) -> Optional[bool]:
    """Truth of any closed formula as far as the evaluator can tell."""
    if not is_closed(a):
        return None
    return ev.eval_delta0(a, budget)


# text syntax

_RESERVED = {"0", "w1", "r0"}
_ORD_HEADS = {"D0", "D1", "F", "mu"}


def term_to_sexpr(t: ObjTerm):
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const):
        v = t.val
        n = O.finite_value(v)
        if n is not None:
            return str(n)
        if isinstance(v, (O.Omega1, O.Rho0, O.D, O.F, O.Mu)):
            return O.to_sexpr(v)
        return ["c", O.to_sexpr(v)]
    if isinstance(t, Plus):
        return ["+", term_to_sexpr(t.left), term_to_sexpr(t.right)]
    if isinstance(t, Times):
        return ["*", term_to_sexpr(t.left), term_to_sexpr(t.right)]
    return ["w^", term_to_sexpr(t.exp)]


def term_from_sexpr(e) -> ObjTerm:
    if isinstance(e, str):
        if e in _RESERVED or e.isdigit():
            return Const(O.from_sexpr(e))
        if not e[0].isalpha():
            raise sexpr.ParseError(f"bad variable name {e!r}")
        return Var(e)
    if not e or not isinstance(e[0], str):
        raise sexpr.ParseError("malformed term")
    head, args = e[0], e[1:]
    if head in _ORD_HEADS:
        return Const(O.from_sexpr(e))
    if head == "c":
        if len(args) != 1:
            raise sexpr.ParseError("c takes one ordinal")
        return Const(O.from_sexpr(args[0]))
    if head in ("+", "*"):
        if len(args) < 2:
            raise sexpr.ParseError(f"{head} needs two arguments")
        out = term_from_sexpr(args[0])
        for a in args[1:]:
            out = (Plus if head == "+" else Times)(out, term_from_sexpr(a))
        return out
    if head == "w^":
        if len(args) != 1:
            raise sexpr.ParseError("w^ takes one argument")
        return WExp(term_from_sexpr(args[0]))
    raise sexpr.ParseError(f"unknown term constructor {head!r}")


def to_sexpr(a: Formula):
    if isinstance(a, ATOMS):
        if isinstance(a, Less):
            core = ["<", term_to_sexpr(a.s), term_to_sexpr(a.t)]
        elif isinstance(a, RApp):
            core = ["R", a.rid, term_to_sexpr(a.s), term_to_sexpr(a.t)]
        elif isinstance(a, PAtom):
            core = ["P", term_to_sexpr(a.t0), term_to_sexpr(a.t1)]
        else:
            core = ["Pr0", term_to_sexpr(a.t)]
        return core if a.pos else ["not", core]
    if isinstance(a, Or):
        return ["or", to_sexpr(a.left), to_sexpr(a.right)]
    if isinstance(a, And):
        return ["and", to_sexpr(a.left), to_sexpr(a.right)]
    if isinstance(a, Ex):
        return ["ex", a.var, to_sexpr(a.body)]
    if isinstance(a, All):
        return ["all", a.var, to_sexpr(a.body)]
    if isinstance(a, ExB):
        return ["exb", a.var, term_to_sexpr(a.bound), to_sexpr(a.body)]
    return ["allb", a.var, term_to_sexpr(a.bound), to_sexpr(a.body)]


def from_sexpr(e) -> Formula:
    if isinstance(e, str) or not e:
        raise sexpr.ParseError(f"not a formula: {sexpr.write(e) if e else '()'}")
    head, args = e[0], e[1:]

    def arity(n):
        if len(args) != n:
            raise sexpr.ParseError(f"{head} takes {n} arguments")

    if head == "<":
        arity(2)
        return Less(term_from_sexpr(args[0]), term_from_sexpr(args[1]))
    if head == "R":
        arity(3)
        return RApp(args[0], term_from_sexpr(args[1]), term_from_sexpr(args[2]))
    if head == "P":
        arity(2)
        return PAtom(term_from_sexpr(args[0]), term_from_sexpr(args[1]))
    if head == "Pr0":
        arity(1)
        return PRhoAtom(term_from_sexpr(args[0]))
    if head == "not":
        arity(1)
        inner = from_sexpr(args[0])
        if not is_literal(inner) or not inner.pos:
            raise sexpr.ParseError("not applies to atoms only")
        return negate(inner)
    if head in ("or", "and"):
        if len(args) < 2:
            raise sexpr.ParseError(f"{head} needs two arguments")
        fs = [from_sexpr(a) for a in args]
        out = fs[-1]
        for f in reversed(fs[:-1]):
            out = (Or if head == "or" else And)(f, out)
        return out
    if head in ("ex", "all"):
        arity(2)
        return (Ex if head == "ex" else All)(_var(args[0]), from_sexpr(args[1]))
    if head in ("exb", "allb"):
        arity(3)
        return (ExB if head == "exb" else AllB)(_var(args[0]), term_from_sexpr(args[1]), from_sexpr(args[2]))
    raise sexpr.ParseError(f"unknown formula constructor {head!r}")


def _var(e) -> str:
    if not isinstance(e, str) or e in _RESERVED or not e[0].isalpha():
        raise sexpr.ParseError(f"bad bound variable {e!r}")
    return e


def parse(text: str) -> Formula:
    return from_sexpr(sexpr.read(text))


def parse_term(text: str) -> ObjTerm:
    return term_from_sexpr(sexpr.read(text))


def to_str(a: Formula) -> str:
    return sexpr.write(to_sexpr(a))


def term_str(t: ObjTerm) -> str:
    return sexpr.write(term_to_sexpr(t))
