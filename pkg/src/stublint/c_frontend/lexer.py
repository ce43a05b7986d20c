"""Tokenizer for the C stub subset.

Comments are gone by the time this runs (the preprocessor blanks them), so
the lexer only deals with identifiers, numbers, string/char literals and
punctuation.  Positions are 1-based.
"""

from __future__ import annotations

import re
from dataclasses import dataclass


class CLexError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str  # "ident" | "num" | "str" | "char" | "punct"
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
      (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<num>(?:0[xX][0-9a-fA-F]+|\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+)
        [uUlLfF]*)
    | (?P<str>"(?:\\.|[^"\\\n])*")
    | (?P<char>'(?:\\.|[^'\\\n])')
    | (?P<punct>->|\+\+|--|<<=|>>=|<<|>>|<=|>=|==|!=|&&|\|\||\+=|-=|\*=|/=
        |%=|&=|\|=|\^=|\.\.\.|[-+*/%&|^!~<>=?:;,.(){}\[\]])
    """,
    re.VERBOSE,
)

_WS_RE = re.compile(r"[ \t\r\f\v]+")


def lex(text: str) -> list[Token]:
    tokens: list[Token] = []
    line = 1
    line_start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            i += 1
            line_start = i
            continue
        ws = _WS_RE.match(text, i)
        if ws:
            i = ws.end()
            continue
        m = _TOKEN_RE.match(text, i)
        if not m:
            raise CLexError(
                f"unexpected character {text[i]!r}", line, i - line_start + 1
            )
        kind = m.lastgroup
        tokens.append(Token(kind, m.group(), line, i - line_start + 1))
        i = m.end()
    return tokens
