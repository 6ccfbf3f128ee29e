"""Ordinal notation terms over 0, w1, r0 with #, w^, D0, D1, F and mu-terms.

Terms are immutable and kept in normal form:
  * sums are flat, zero-free, with at least two principal parts sorted
    non-increasingly;
  * w^e collapses to e when e is an epsilon atom (w1, r0, D_i(.), F(.));
  * numerals are sums of copies of w^0.

The order is syntactic. Principal parts compare by exponent (an epsilon atom
e is read as w^e), and collapses D_i / F compare by their arguments guarded
by a G-set condition standing in for hull membership.
"""
from __future__ import annotations

import enum
import functools
from dataclasses import dataclass
from typing import Union

from . import sexpr
from .cnf import CNF, ZERO_CNF


class Undecidable(Exception):
    """Raised when an ordering question involves an unresolved mu-term."""


class OutsideFragment(Exception):
    pass


class Ord(enum.Enum):
    LT = -1
    EQ = 0
    GT = 1

    def flip(self) -> "Ord":
        return Ord(-self.value)


LT, EQ, GT = Ord.LT, Ord.EQ, Ord.GT


@dataclass(frozen=True)
class Zero:
    pass


@dataclass(frozen=True)
class Omega1:
    pass


@dataclass(frozen=True)
class Rho0:
    pass


@dataclass(frozen=True)
class Sum:
    parts: tuple


@dataclass(frozen=True)
class WPow:
    exp: "OrdTerm"


@dataclass(frozen=True)
class D:
    level: int
    arg: "OrdTerm"


@dataclass(frozen=True)
class F:
    arg: "OrdTerm"


@dataclass(frozen=True)
class Mu:
    fid: str
    args: tuple


OrdTerm = Union[Zero, Omega1, Rho0, Sum, WPow, D, F, Mu]

ZERO = Zero()
OMEGA1 = Omega1()
RHO0 = Rho0()
ONE = WPow(ZERO)
OMEGA = WPow(ONE)


def is_epsilon_atom(t: OrdTerm) -> bool:
    return isinstance(t, (Omega1, Rho0, D, F))


def is_principal(t: OrdTerm) -> bool:
    return isinstance(t, (WPow, Omega1, Rho0, D, F, Mu))


def parts(t: OrdTerm) -> tuple:
    if isinstance(t, Zero):
        return ()
    if isinstance(t, Sum):
        return t.parts
    return (t,)


def size(t: OrdTerm) -> int:
    if isinstance(t, Sum):
        return 1 + sum(size(p) for p in t.parts)
    if isinstance(t, WPow):
        return 1 + size(t.exp)
    if isinstance(t, (D, F)):
        return 1 + size(t.arg)
    if isinstance(t, Mu):
        return 1 + sum(size(a) for a in t.args)
    return 1


def contains_mu(t: OrdTerm) -> bool:
    if isinstance(t, Mu):
        return True
    if isinstance(t, Sum):
        return any(contains_mu(p) for p in t.parts)
    if isinstance(t, WPow):
        return contains_mu(t.exp)
    if isinstance(t, (D, F)):
        return contains_mu(t.arg)
    return False


# construction and normal form


def _sort_key_fallback(a: OrdTerm, b: OrdTerm) -> int:
    try:
        return _cmp_principal(a, b).value
    except Undecidable:
        # opaque mu-terms get a fixed but arbitrary position
        sa, sb = to_str(a), to_str(b)
        return (sa < sb) - (sa > sb)


def _mk_sum(ps: list) -> OrdTerm:
    if not ps:
        return ZERO
    if len(ps) == 1:
        return ps[0]
    ordered = sorted(ps, key=functools.cmp_to_key(_sort_key_fallback), reverse=True)
    return Sum(tuple(ordered))


def normalize(raw: OrdTerm) -> OrdTerm:
    """Bring an arbitrary term tree into normal form (idempotent)."""
    if isinstance(raw, (Zero, Omega1, Rho0)):
        return raw
    if isinstance(raw, Sum):
        flat: list = []
        for p in raw.parts:
            flat.extend(parts(normalize(p)))
        return _mk_sum(flat)
    if isinstance(raw, WPow):
        e = normalize(raw.exp)
        return e if is_epsilon_atom(e) else WPow(e)
    if isinstance(raw, D):
        return D(raw.level, normalize(raw.arg))
    if isinstance(raw, F):
        return F(normalize(raw.arg))
    if isinstance(raw, Mu):
        return Mu(raw.fid, tuple(normalize(a) for a in raw.args))
    raise TypeError(f"not an ordinal term: {raw!r}")


def wpow(e: OrdTerm) -> OrdTerm:
    return e if is_epsilon_atom(e) else WPow(e)


def numeral(n: int) -> OrdTerm:
    if n < 0:
        raise ValueError("negative numeral")
    return _mk_sum([ONE] * n)


def finite_value(t: OrdTerm) -> int | None:
    """The natural number denoted by t, or None if t is not a numeral."""
    ps = parts(t)
    if all(p == ONE for p in ps):
        return len(ps)
    return None


def omega_tower(k: int, base: OrdTerm) -> OrdTerm:
    """omega_k(base): k-fold exponentiation w^(w^(...base))."""
    t = base
    for _ in range(k):
        t = wpow(t)
    return t


# comparison


_ATOM_RANK = {Omega1: 1, Rho0: 3}


def _atom_rank(t: OrdTerm) -> int:
    if isinstance(t, D):
        return 0 if t.level == 0 else 2
    if isinstance(t, F):
        return 0
    return _ATOM_RANK[type(t)]


def _collapse_cmp(mk, a: OrdTerm, b: OrdTerm) -> Ord:
    """Compare mk(a) with mk(b) where mk is D_i or F."""
    c = compare(a, b)
    if c is EQ:
        return EQ
    if c is LT:
        return LT if gset_below(mk(b), a, b) else GT
    return GT if gset_below(mk(a), b, a) else LT


def _cmp_atom(x: OrdTerm, y: OrdTerm) -> Ord:
    rx, ry = _atom_rank(x), _atom_rank(y)
    if rx != ry:
        return LT if rx < ry else GT
    if isinstance(x, D) and isinstance(y, D):
        level = x.level
        return _collapse_cmp(lambda a: D(level, a), x.arg, y.arg)
    # F(a) sits just above D0(a): order by the D0 schema on arguments,
    # with F winning the tie
    c = _collapse_cmp(lambda a: D(0, a), x.arg, y.arg)
    if c is not EQ:
        return c
    fx, fy = isinstance(x, F), isinstance(y, F)
    return EQ if fx == fy else (GT if fx else LT)


def _cmp_principal(x: OrdTerm, y: OrdTerm) -> Ord:
    if x == y:
        return EQ
    if isinstance(x, Mu) or isinstance(y, Mu):
        raise Undecidable(f"cannot order {to_str(x)} against {to_str(y)}")
    xa, ya = is_epsilon_atom(x), is_epsilon_atom(y)
    if xa and ya:
        return _cmp_atom(x, y)
    ex = x if xa else x.exp
    ey = y if ya else y.exp
    return compare(ex, ey)


@functools.lru_cache(maxsize=200_000)
def compare(a: OrdTerm, b: OrdTerm) -> Ord:
    """Total syntactic order on normal terms; raises Undecidable on mu-terms."""
    if a == b:
        return EQ
    pa, pb = parts(a), parts(b)
    for x, y in zip(pa, pb):
        c = _cmp_principal(x, y)
        if c is not EQ:
            return c
    if len(pa) == len(pb):
        return EQ
    return LT if len(pa) < len(pb) else GT


def lt(a: OrdTerm, b: OrdTerm) -> bool:
    return compare(a, b) is LT


def le(a: OrdTerm, b: OrdTerm) -> bool:
    return compare(a, b) is not GT


def omax(a: OrdTerm, b: OrdTerm) -> OrdTerm:
    return b if lt(a, b) else a


# G-sets


@functools.lru_cache(maxsize=200_000)
def gset(a: OrdTerm, b: OrdTerm) -> frozenset:
    """The finite set G_a(b) of collapse arguments of b not below a."""
    if isinstance(b, (Zero, Omega1, Rho0)):
        return frozenset()
    if compare(b, a) is LT:
        return frozenset()
    if isinstance(b, Sum):
        return frozenset().union(*(gset(a, p) for p in b.parts))
    if isinstance(b, Mu):
        return frozenset().union(*(gset(a, p) for p in b.args))
    if isinstance(b, WPow):
        return gset(a, b.exp)
    return frozenset({b.arg}) | gset(a, b.arg)


def gset_below(a: OrdTerm, b: OrdTerm, c: OrdTerm) -> bool:
    """True iff every element of G_a(b) is below c."""
    return all(compare(x, c) is LT for x in gset(a, b))


# natural arithmetic


def nsum(*terms: OrdTerm) -> OrdTerm:
    ps: list = []
    for t in terms:
        ps.extend(parts(t))
    return _mk_sum(ps)


def _exponent(p: OrdTerm) -> OrdTerm:
    if isinstance(p, Mu):
        raise Undecidable(f"no exponent for {to_str(p)}")
    return p if is_epsilon_atom(p) else p.exp


def nprod(a: OrdTerm, b: OrdTerm) -> OrdTerm:
    """Hessenberg product: w^x (x) w^y = w^(x#y), distributed over parts."""
    out = []
    for x in parts(a):
        for y in parts(b):
            out.append(wpow(nsum(_exponent(x), _exponent(y))))
    return _mk_sum(out)


# ordinary (left-absorbing) arithmetic, used by object-level terms


def osum(a: OrdTerm, b: OrdTerm) -> OrdTerm:
    pb = parts(b)
    if not pb:
        return a
    lead = pb[0]
    kept = [x for x in parts(a) if _cmp_principal(x, lead) is not LT]
    return _mk_sum(kept + list(pb))


def oprod(a: OrdTerm, b: OrdTerm) -> OrdTerm:
    pa = parts(a)
    if not pa or not parts(b):
        return ZERO
    lead_exp = _exponent(pa[0])
    result: OrdTerm = ZERO
    for y in parts(b):
        ey = _exponent(y)
        piece = a if ey == ZERO else wpow(osum(lead_exp, ey))
        result = osum(result, piece)
    return result


# regions


_REGION_RANK = {"Finite": 0, "Countable": 1, "EqOmega1": 2, "Middle": 3, "EqRho0": 4, "Above": 5}


@dataclass(frozen=True)
class Region:
    tag: str
    n: int = 0

    def key(self) -> tuple[int, int]:
        return (_REGION_RANK[self.tag], self.n)

    def __lt__(self, other: "Region") -> bool:
        return self.key() < other.key()

    def __str__(self) -> str:
        return f"Finite({self.n})" if self.tag == "Finite" else self.tag


def region(a: OrdTerm) -> Region:
    n = finite_value(a)
    if n is not None:
        return Region("Finite", n)
    c = compare(a, OMEGA1)
    if c is LT:
        return Region("Countable")
    if c is EQ:
        return Region("EqOmega1")
    c = compare(a, RHO0)
    if c is LT:
        return Region("Middle")
    if c is EQ:
        return Region("EqRho0")
    return Region("Above")


# CNF bridge


def to_cnf_small(a: OrdTerm) -> CNF:
    """Value of a term from the epsilon_0 fragment as a Cantor normal form."""
    if isinstance(a, Zero):
        return ZERO_CNF
    if isinstance(a, WPow):
        return CNF.omega_pow(to_cnf_small(a.exp))
    if isinstance(a, Sum):
        out = ZERO_CNF
        for p in a.parts:
            out = out.nat_add(to_cnf_small(p))
        return out
    raise OutsideFragment(to_str(a))


# text syntax


def to_sexpr(t: OrdTerm):
    if isinstance(t, Zero):
        return "0"
    if isinstance(t, Omega1):
        return "w1"
    if isinstance(t, Rho0):
        return "r0"
    if isinstance(t, Sum):
        return ["+"] + [to_sexpr(p) for p in t.parts]
    if isinstance(t, WPow):
        return ["w^", to_sexpr(t.exp)]
    if isinstance(t, D):
        return [f"D{t.level}", to_sexpr(t.arg)]
    if isinstance(t, F):
        return ["F", to_sexpr(t.arg)]
    if isinstance(t, Mu):
        return ["mu", t.fid] + [to_sexpr(a) for a in t.args]
    raise TypeError(t)


def to_str(t: OrdTerm) -> str:
    return sexpr.write(to_sexpr(t))


_HEADS = {"w^": 1, "D0": 1, "D1": 1, "F": 1}


def from_sexpr(e) -> OrdTerm:
    """Build a normal term from a parsed s-expression."""
    return normalize(_raw(e))


def _raw(e) -> OrdTerm:
    if isinstance(e, str):
        if e == "w1":
            return OMEGA1
        if e == "r0":
            return RHO0
        if e.isdigit():
            return numeral(int(e))
        raise sexpr.ParseError(f"unknown ordinal atom {e!r}")
    if not e or not isinstance(e[0], str):
        raise sexpr.ParseError("malformed ordinal term")
    head, args = e[0], e[1:]
    if head == "+":
        if not args:
            raise sexpr.ParseError("empty sum")
        return Sum(tuple(_raw(a) for a in args))
    if head == "mu":
        if not args or not isinstance(args[0], str):
            raise sexpr.ParseError("mu needs an identifier")
        return Mu(args[0], tuple(_raw(a) for a in args[1:]))
    if head in _HEADS:
        if len(args) != 1:
            raise sexpr.ParseError(f"{head} takes one argument")
        inner = _raw(args[0])
        if head == "w^":
            return WPow(inner)
        if head == "F":
            return F(inner)
        return D(int(head[1]), inner)
    raise sexpr.ParseError(f"unknown ordinal constructor {head!r}")


def parse(text: str) -> OrdTerm:
    return from_sexpr(sexpr.read(text))
