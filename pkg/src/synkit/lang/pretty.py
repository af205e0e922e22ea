"""Source rendering. parse(pretty(parse(text))) is structurally
identical to parse(text); the property tests lean on that.
"""

from __future__ import annotations

from fractions import Fraction

from .ast import (Arrow, Binary, BoolLit, Call, Expr, ExternDecl, IntLit,
                  Ite, NodeDecl, Pre, Program, RealLit, Unary, Var, VarDecl)

# Binding levels, loosest first. A child is parenthesized when its level
# is below what its context requires.
_ARROW, _IMPLIES, _OR, _AND, _NOT, _CMP, _ADD, _MUL, _UNARY, _PRIM = range(1, 11)

_BIN_LEVEL = {"=>": _IMPLIES, "or": _OR, "and": _AND,
              "=": _CMP, "<>": _CMP, "<": _CMP, "<=": _CMP,
              ">": _CMP, ">=": _CMP,
              "+": _ADD, "-": _ADD, "*": _MUL, "/": _MUL}
_RIGHT_ASSOC = {"=>"}


def real_text(v: Fraction) -> str:
    """Exact decimal for fractions whose denominator divides a power of
    ten; others render as a division of two exact decimals."""
    num, den = v.numerator, v.denominator
    sign = "-" if num < 0 else ""
    num = abs(num)
    d = den
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"({sign}{num}.0 / {den}.0)" if sign else f"({num}.0 / {den}.0)"
    digits = max(twos, fives)
    scaled = num * 10 ** digits // den
    if digits == 0:
        return f"{sign}{scaled}.0"
    text = str(scaled).rjust(digits + 1, "0")
    return f"{sign}{text[:-digits]}.{text[-digits:]}"


def pretty_expr(e: Expr, level: int = 0) -> str:
    text, mine = _render(e)
    if mine < level:
        return f"({text})"
    return text


def _render(e: Expr) -> tuple[str, int]:
    if isinstance(e, BoolLit):
        return ("true" if e.value else "false"), _PRIM
    if isinstance(e, IntLit):
        if e.value < 0:
            return f"-{-e.value}", _UNARY
        return str(e.value), _PRIM
    if isinstance(e, RealLit):
        text = real_text(e.value)
        return text, _UNARY if text.startswith("-") else _PRIM
    if isinstance(e, Var):
        return e.name, _PRIM
    if isinstance(e, Unary):
        inner = pretty_expr(e.operand, _UNARY if e.op == "-" else _NOT)
        if e.op == "not":
            return f"not {inner}", _NOT
        sep = " " if inner.startswith("-") else ""
        return f"-{sep}{inner}", _UNARY
    if isinstance(e, Pre):
        return f"pre {pretty_expr(e.operand, _UNARY)}", _UNARY
    if isinstance(e, Binary):
        lvl = _BIN_LEVEL[e.op]
        if e.op in _RIGHT_ASSOC:
            lhs = pretty_expr(e.left, lvl + 1)
            rhs = pretty_expr(e.right, lvl)
        elif lvl == _CMP:  # non-associative
            lhs = pretty_expr(e.left, lvl + 1)
            rhs = pretty_expr(e.right, lvl + 1)
        else:
            lhs = pretty_expr(e.left, lvl)
            rhs = pretty_expr(e.right, lvl + 1)
        return f"{lhs} {e.op} {rhs}", lvl
    if isinstance(e, Arrow):
        lhs = pretty_expr(e.left, _ARROW + 1)
        rhs = pretty_expr(e.right, _ARROW)
        return f"{lhs} -> {rhs}", _ARROW
    if isinstance(e, Ite):
        cond = pretty_expr(e.cond, 0)
        then = pretty_expr(e.then, 0)
        orelse = pretty_expr(e.orelse, 0)
        # the else arm is greedy, so treat the whole form as loosest
        return f"if {cond} then {then} else {orelse}", _ARROW
    if isinstance(e, Call):
        args = ", ".join(pretty_expr(a, 0) for a in e.args)
        return f"{e.callee}({args})", _PRIM
    raise TypeError(f"cannot render {type(e).__name__}")


def _decl_groups(decls: list[VarDecl]) -> list[str]:
    groups: list[str] = []
    i = 0
    while i < len(decls):
        j = i
        while j + 1 < len(decls) and decls[j + 1].type is decls[i].type:
            j += 1
        names = ", ".join(d.name for d in decls[i:j + 1])
        groups.append(f"{names} : {decls[i].type}")
        i = j + 1
    return groups


def pretty_node(n: NodeDecl) -> str:
    lines: list[str] = []
    ins = "; ".join(_decl_groups(n.inputs))
    outs = "; ".join(_decl_groups(n.outputs))
    lines.append(f"node {n.name}({ins}) returns ({outs});")
    if n.locals:
        lines.append("var")
        for g in _decl_groups(n.locals):
            lines.append(f"  {g};")
    lines.append("let")
    for prop in n.properties:
        lines.append(f"  --!PROPERTY: {prop} = true;")
    for a in n.assertions:
        lines.append(f"  assert {pretty_expr(a)};")
    for eq in n.equations:
        tgt = ", ".join(eq.targets)
        if len(eq.targets) > 1:
            tgt = f"({tgt})"
        lines.append(f"  {tgt} = {pretty_expr(eq.rhs)};")
    lines.append("tel")
    return "\n".join(lines)


def pretty_extern(ex: ExternDecl) -> str:
    params = "; ".join(_decl_groups(ex.params))
    ret = f"{ex.ret.name} : {ex.ret.type}"
    return f"extern {ex.name}({params}) returns ({ret});"


def pretty(p: Program) -> str:
    parts = [pretty_extern(ex) for ex in p.externs]
    parts.extend(pretty_node(n) for n in p.nodes)
    return "\n\n".join(parts) + "\n"
