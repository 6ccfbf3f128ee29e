"""Seeded random fixtures: closed formulas and small proofs carrying a false literal."""
import random

from ordproof import calculus as C
from ordproof import language as L
from ordproof import transforms as T

FALSE_LITS = [L.parse(s) for s in ("(< 3 1)", "(not (< 0 2))", "(< 4 4)", "(not (< 1 5))")]


def formula(rng: random.Random, depth: int, free=()) -> L.Formula:
    if depth <= 0 or rng.random() < 0.25:
        ts = [L.num(rng.randrange(4)) for _ in range(2)] + [L.Var(v) for v in free]
        a = L.Less(rng.choice(ts), rng.choice(ts), rng.random() < 0.5)
        return a
    k = rng.randrange(6)
    if k == 0:
        return L.Or(formula(rng, depth - 1, free), formula(rng, depth - 1, free))
    if k == 1:
        return L.And(formula(rng, depth - 1, free), formula(rng, depth - 1, free))
    v = f"v{depth}"
    body = formula(rng, depth - 1, free + (v,))
    if k == 2:
        return L.Ex(v, body)
    if k == 3:
        return L.All(v, body)
    if k == 4:
        return L.ExB(v, L.num(rng.randrange(1, 3)), body)
    return L.AllB(v, L.num(rng.randrange(1, 3)), body)


def literal_fixture(seed: int) -> tuple:
    """(proof, false literal): a tautology proof with the literal threaded in.

    Half the fixtures carry the literal as context everywhere; the rest weaken
    it in at a random node and let it flow down to the root.
    """
    rng = random.Random(seed)
    lit = rng.choice(FALSE_LITS)
    a = formula(rng, rng.randrange(1, 5))
    if seed % 2 == 0:
        return T.taut_proof((lit,), a), lit
    p = T.taut_proof((), a)
    at = rng.choice(sorted(p.nodes))
    return T.weaken(p, [lit], at), lit


def closed_shapes(max_dg: int, count: int, seed: int = 0) -> list:
    """Distinct closed formulas with dg <= max_dg, covering every connective."""
    rng = random.Random(seed)
    seen = {}
    tries = 0
    while len(seen) < count and tries < 50 * count:
        tries += 1
        f = formula(rng, rng.randrange(0, 6))
        if L.is_closed(f) and L.dg(f) <= max_dg:
            seen.setdefault(L.to_str(f), f)
    return list(seen.values())


def ordinals(p) -> dict:
    return C.assign(p, {}).o


def shapes_by_degree(max_dg: int) -> dict:
    """Every formula shape up to max_dg, one representative per connective tree.

    Degree 1 has a literal and a bounded compound; higher degrees combine
    lower shapes with each connective, at least one part unbounded, in both
    operand orders.
    """
    by = {1: [L.parse("(< 0 1)"), L.parse("(exb w 2 (< w 1))")]}
    counter = [0]

    def fresh():
        counter[0] += 1
        return f"q{counter[0]}"

    for d in range(2, max_dg + 1):
        out = []
        for s in by.get(d - 2, []):
            v = fresh()
            # bounded bodies mention the new variable so the quantifier is not vacuous
            body = L.Or(L.Less(L.Var(v), L.num(1)), s) if L.is_delta0(s) else s
            out += [L.Ex(v, body), L.All(v, body)]
            if not L.is_delta0(s):
                out += [L.ExB(v, L.num(2), s), L.AllB(v, L.num(2), s)]
        for d1 in range(1, d - 2):
            d2 = d - 2 - d1
            for a in by.get(d1, []):
                for b in by.get(d2, []):
                    if L.is_delta0(a) and L.is_delta0(b):
                        continue
                    out += [L.Or(a, b), L.And(a, b)]
        by[d] = [f for f in out if L.dg(f) == d]
    return by
