"""S-expression reading and writing for the SMT-LIB2 wire format.

An expression is a str (atom, with |..| quoting preserved verbatim
minus the bars) or a list of expressions.
"""

from __future__ import annotations

from typing import Union

SExpr = Union[str, list]


class SExprError(ValueError):
    pass


def tokenize(text: str):
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            i += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            yield ch
            i += 1
        elif ch == "|":
            j = text.find("|", i + 1)
            if j < 0:
                raise SExprError("unterminated |...| symbol")
            yield text[i:j + 1]
            i = j + 1
        elif ch == '"':
            j = i + 1
            while j < n:
                if text[j] == '"':
                    if j + 1 < n and text[j + 1] == '"':
                        j += 2
                        continue
                    break
                j += 1
            if j >= n:
                raise SExprError("unterminated string literal")
            yield text[i:j + 1]
            i = j + 1
        else:
            j = i
            while j < n and text[j] not in " \t\r\n();|\"":
                j += 1
            yield text[i:j]
            i = j


def parse_all(text: str) -> list[SExpr]:
    """Parse a sequence of s-expressions."""
    stack: list[list] = []
    top: list[SExpr] = []
    for tok in tokenize(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if not stack:
                raise SExprError("unbalanced ')'")
            done = stack.pop()
            (stack[-1] if stack else top).append(done)
        else:
            atom = tok[1:-1] if tok.startswith("|") else tok
            (stack[-1] if stack else top).append(atom)
    if stack:
        raise SExprError("unbalanced '('")
    return top


def parse_one(text: str) -> SExpr:
    exprs = parse_all(text)
    if len(exprs) != 1:
        raise SExprError(f"expected one expression, got {len(exprs)}")
    return exprs[0]


_PLAIN_FIRST = set("abcdefghijklmnopqrstuvwxyz"
                   "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
                   "~!@$%^&*_-+=<>.?/")
_PLAIN_REST = _PLAIN_FIRST | set("0123456789")


def format_atom(s: str) -> str:
    if s and (s[0] in _PLAIN_FIRST or s[0].isdigit()) \
            and all(c in _PLAIN_REST for c in s):
        return s
    return f"|{s}|"


def format_sexpr(e: SExpr) -> str:
    if isinstance(e, str):
        return format_atom(e)
    return "(" + " ".join(format_sexpr(x) for x in e) + ")"


def balanced(text: str) -> bool:
    """True when the text closes every paren it opens (quote-aware)."""
    depth = 0
    try:
        for tok in tokenize(text):
            if tok == "(":
                depth += 1
            elif tok == ")":
                depth -= 1
                if depth < 0:
                    return False
    except SExprError:
        return False
    return depth == 0
