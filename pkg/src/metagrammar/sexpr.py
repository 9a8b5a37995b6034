"""Minimal s-expression reader with source positions."""
from __future__ import annotations

import re


class ParseError(ValueError):
    """Malformed input. ``pos`` is a (line, column) pair, 1-based, when known."""

    def __init__(self, message: str, pos: tuple[int, int] | None = None):
        self.pos = pos
        if pos is not None:
            message = f"{message} at line {pos[0]}, column {pos[1]}"
        super().__init__(message)


class UnsupportedError(ParseError):
    """Well-formed input that uses a construct outside the supported fragment."""


class Atom(str):
    pos: tuple[int, int] | None = None

    def __new__(cls, text: str, pos: tuple[int, int] | None = None):
        self = super().__new__(cls, text)
        self.pos = pos
        return self


class SList(list):
    pos: tuple[int, int] | None = None


_TOKEN = re.compile(
    r"""
      (?P<ws>\s+)
    | (?P<comment>;[^\n]*)
    | (?P<lpar>\()
    | (?P<rpar>\))
    | (?P<string>"(?:[^"]|"")*")
    | (?P<quoted>\|[^|]*\|)
    | (?P<atom>[^\s()";|]+)
    """,
    re.VERBOSE,
)


def tokenize(text: str):
    """Yield ``(kind, value, (line, col))``; whitespace and comments are dropped."""
    line, line_start, i = 1, 0, 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if m is None:
            raise ParseError(f"unexpected character {text[i]!r}", (line, i - line_start + 1))
        kind = m.lastgroup
        pos = (line, i - line_start + 1)
        value = m.group()
        if kind not in ("ws", "comment"):
            if kind == "quoted":
                kind, value = "atom", value[1:-1]
            yield kind, value, pos
        newlines = m.group().count("\n")
        if newlines:
            line += newlines
            line_start = i + m.group().rfind("\n") + 1
        i = m.end()


def read_all(text: str) -> list:
    """Read every top-level s-expression in ``text``."""
    stack: list[SList] = []
    out: list = []
    for kind, value, pos in tokenize(text):
        if kind == "lpar":
            lst = SList()
            lst.pos = pos
            stack.append(lst)
            continue
        if kind == "rpar":
            if not stack:
                raise ParseError("unbalanced ')'", pos)
            item = stack.pop()
        else:
            item = Atom(value, pos)
        if stack:
            stack[-1].append(item)
        else:
            out.append(item)
    if stack:
        raise ParseError("unclosed '('", stack[-1].pos)
    return out


def position(x) -> tuple[int, int] | None:
    return getattr(x, "pos", None)
