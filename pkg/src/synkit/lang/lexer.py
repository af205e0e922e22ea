"""Tokenizer.

Comments run from -- to end of line.  A comment of the shape
--!PROPERTY: name = true;  is not discarded: it becomes a PROPERTY
token carrying the annotated signal name.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .ast import Pos
from .errors import LangError

KEYWORDS = {
    "node", "returns", "var", "let", "tel", "assert", "extern",
    "true", "false", "if", "then", "else", "and", "or", "not", "pre",
    "bool", "int", "real",
    # clocked operators are recognized so they can be rejected with a
    # clear message instead of a generic syntax error
    "when", "current",
}

SYMBOLS = [
    "->", "=>", "<>", "<=", ">=",
    "(", ")", ":", ";", ",", "=", "<", ">", "+", "-", "*", "/",
]

_PROPERTY_RE = re.compile(r"^!PROPERTY:\s*([A-Za-z][A-Za-z0-9_]*)\s*=\s*true\s*;?\s*$")
_IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*")
_NUM_RE = re.compile(r"\d+(\.\d+)?")


@dataclass
class Token:
    kind: str  # IDENT INT REAL PROPERTY EOF, a keyword, or a symbol
    text: str
    pos: Pos


def tokenize(text: str) -> list[Token]:
    toks: list[Token] = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("--", i):
            end = text.find("\n", i)
            if end < 0:
                end = n
            body = text[i + 2:end]
            m = _PROPERTY_RE.match(body.strip())
            if m:
                toks.append(Token("PROPERTY", m.group(1), Pos(line, col)))
            col += end - i
            i = end
            continue
        if c.isdigit():
            m = _NUM_RE.match(text, i)
            assert m is not None
            lit = m.group(0)
            kind = "REAL" if "." in lit else "INT"
            toks.append(Token(kind, lit, Pos(line, col)))
            i += len(lit)
            col += len(lit)
            continue
        if c.isalpha():
            m = _IDENT_RE.match(text, i)
            assert m is not None
            word = m.group(0)
            kind = word if word in KEYWORDS else "IDENT"
            toks.append(Token(kind, word, Pos(line, col)))
            i += len(word)
            col += len(word)
            continue
        if c == "_":
            raise LangError("syntax", "identifiers may not start with '_' "
                            "(reserved for generated names)", Pos(line, col))
        sym = _match_symbol(text, i)
        if sym is None:
            raise LangError("syntax", f"unexpected character {c!r}", Pos(line, col))
        toks.append(Token(sym, sym, Pos(line, col)))
        i += len(sym)
        col += len(sym)
    toks.append(Token("EOF", "", Pos(line, col)))
    return toks


def _match_symbol(text: str, i: int) -> Optional[str]:
    for sym in SYMBOLS:
        if text.startswith(sym, i):
            return sym
    return None
