"""Cantor normal forms below epsilon_0.

Kept deliberately separate from the notation system so it can serve as an
independent oracle. A CNF is a tuple of (exponent, coefficient) pairs with
strictly decreasing exponents and positive coefficients.
"""
from __future__ import annotations

from functools import total_ordering


@total_ordering
class CNF:
    __slots__ = ("terms",)

    def __init__(self, terms=()):
        self.terms: tuple[tuple[CNF, int], ...] = tuple(terms)

    @staticmethod
    def nat(n: int) -> "CNF":
        return CNF(((ZERO_CNF, n),)) if n > 0 else ZERO_CNF

    @staticmethod
    def omega_pow(e: "CNF") -> "CNF":
        return CNF(((e, 1),))

    def is_zero(self) -> bool:
        return not self.terms

    def _cmp(self, other: "CNF") -> int:
        for (e1, c1), (e2, c2) in zip(self.terms, other.terms):
            k = e1._cmp(e2)
            if k:
                return k
            if c1 != c2:
                return -1 if c1 < c2 else 1
        return (len(self.terms) > len(other.terms)) - (len(self.terms) < len(other.terms))

    def __eq__(self, other):
        return isinstance(other, CNF) and self._cmp(other) == 0

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __hash__(self):
        return hash(self.terms)

    def __repr__(self):
        if self.is_zero():
            return "0"
        out = []
        for e, c in self.terms:
            base = "1" if e.is_zero() else f"w^({e!r})"
            out.append(base if c == 1 else f"{base}*{c}")
        return " + ".join(out)

    # ordinary arithmetic

    def __add__(self, other: "CNF") -> "CNF":
        if other.is_zero():
            return self
        lead = other.terms[0][0]
        kept = [(e, c) for e, c in self.terms if not e < lead]
        if kept and kept[-1][0] == lead:
            e, c = kept.pop()
            rest = ((e, c + other.terms[0][1]),) + other.terms[1:]
        else:
            rest = other.terms
        return CNF(tuple(kept) + tuple(rest))

    def __mul__(self, other: "CNF") -> "CNF":
        if self.is_zero() or other.is_zero():
            return ZERO_CNF
        lead_e, lead_c = self.terms[0]
        result = ZERO_CNF
        for e, c in other.terms:
            if e.is_zero():
                piece = CNF(((lead_e, lead_c * c),) + self.terms[1:])
            else:
                piece = CNF(((lead_e + e, c),))
            result = result + piece
        return result

    # natural (Hessenberg) arithmetic

    def nat_add(self, other: "CNF") -> "CNF":
        coeffs: dict[CNF, int] = {}
        for e, c in self.terms + other.terms:
            coeffs[e] = coeffs.get(e, 0) + c
        return CNF(sorted(coeffs.items(), key=lambda ec: ec[0], reverse=True))

    def nat_mul(self, other: "CNF") -> "CNF":
        result = ZERO_CNF
        for e1, c1 in self.terms:
            for e2, c2 in other.terms:
                result = result.nat_add(CNF(((e1.nat_add(e2), c1 * c2),)))
        return result


ZERO_CNF = CNF()
