"""S-expression reader with source positions.

Symbols are lowercased on read; the input language is case-insensitive.
Comments run from ';' to end of line.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import HddlError


@dataclass(frozen=True)
class Symbol:
    text: str
    line: int
    col: int


@dataclass(frozen=True)
class SList:
    items: tuple
    line: int
    col: int


Node = Symbol | SList

_DELIMS = "()"


def tokenize(text: str):
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
        elif ch in " \t\r":
            col += 1
            i += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in _DELIMS:
            yield (ch, ch, line, col)
            col += 1
            i += 1
        else:
            start, start_col = i, col
            while i < n and text[i] not in " \t\r\n;()":
                i += 1
                col += 1
            yield ("sym", text[start:i].lower(), line, start_col)


def read_all(text: str) -> list[Node]:
    """Read every top-level form; raises on unbalanced parentheses."""
    toks = list(tokenize(text))
    forms: list[Node] = []
    stack: list[tuple[list, int, int]] = []
    for kind, value, line, col in toks:
        if kind == "(":
            stack.append(([], line, col))
        elif kind == ")":
            if not stack:
                raise HddlError("unmatched ')'", line, col)
            items, oline, ocol = stack.pop()
            node = SList(tuple(items), oline, ocol)
            if stack:
                stack[-1][0].append(node)
            else:
                forms.append(node)
        else:
            sym = Symbol(value, line, col)
            if stack:
                stack[-1][0].append(sym)
            else:
                forms.append(sym)
    if stack:
        _, line, col = stack[-1]
        raise HddlError("unclosed '('", line, col)
    return forms
