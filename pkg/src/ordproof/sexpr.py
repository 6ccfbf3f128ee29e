"""Minimal s-expression reader and writer shared by all text formats."""
from __future__ import annotations

from typing import Union

SExpr = Union[str, list]


class ParseError(Exception):
    pass


def tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch == ";":
            # comment to end of line
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            tokens.append(ch)
            i += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "();":
                j += 1
            tokens.append(text[i:j])
            i = j
    return tokens


def _read(tokens: list[str], pos: int) -> tuple[SExpr, int]:
    if pos >= len(tokens):
        raise ParseError("unexpected end of input")
    tok = tokens[pos]
    if tok == ")":
        raise ParseError("unexpected ')'")
    if tok != "(":
        return tok, pos + 1
    items: list = []
    pos += 1
    while True:
        if pos >= len(tokens):
            raise ParseError("missing ')'")
        if tokens[pos] == ")":
            return items, pos + 1
        item, pos = _read(tokens, pos)
        items.append(item)


def read(text: str) -> SExpr:
    """Read exactly one s-expression."""
    tokens = tokenize(text)
    expr, pos = _read(tokens, 0)
    if pos != len(tokens):
        raise ParseError("trailing input after expression")
    return expr


def read_all(text: str) -> list[SExpr]:
    tokens = tokenize(text)
    out, pos = [], 0
    while pos < len(tokens):
        expr, pos = _read(tokens, pos)
        out.append(expr)
    return out


def write(expr: SExpr) -> str:
    if isinstance(expr, str):
        return expr
    return "(" + " ".join(write(e) for e in expr) + ")"
