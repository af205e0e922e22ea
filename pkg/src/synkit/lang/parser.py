"""Recursive-descent parser.

Precedence, loosest first: -> | => | or | and | not | comparisons
(non-associative) | + - | * / | unary - and pre | primary.
if/then/else is a primary and extends as far right as possible.
"""

from __future__ import annotations

from fractions import Fraction

from .ast import (Arrow, Binary, BoolLit, Call, Equation, Expr, ExternDecl,
                  IntLit, Ite, NodeDecl, Pos, Pre, Program, RealLit, Type,
                  Unary, Var, VarDecl)
from .errors import LangError
from .lexer import Token, tokenize

_CMP_OPS = ("=", "<>", "<", "<=", ">", ">=")
_TYPES = {"bool": Type.BOOL, "int": Type.INT, "real": Type.REAL}


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0

    # token plumbing ----------------------------------------------------

    def peek(self) -> Token:
        return self.toks[self.i]

    def at(self, kind: str) -> bool:
        return self.toks[self.i].kind == kind

    def advance(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def accept(self, kind: str) -> Token | None:
        if self.at(kind):
            return self.advance()
        return None

    def expect(self, kind: str) -> Token:
        t = self.peek()
        if t.kind != kind:
            got = t.text or t.kind
            raise LangError("syntax", f"unexpected {got!r}", t.pos, expected=(kind,))
        return self.advance()

    def reject_clock(self) -> None:
        t = self.peek()
        if t.kind in ("when", "current"):
            raise LangError("syntax",
                            f"clocked operator {t.text!r} is not supported "
                            "(base clock only)", t.pos)

    # program structure -------------------------------------------------

    def program(self) -> Program:
        nodes: list[NodeDecl] = []
        externs: list[ExternDecl] = []
        while not self.at("EOF"):
            if self.at("node"):
                nodes.append(self.node_decl())
            elif self.at("extern"):
                externs.append(self.extern_decl())
            else:
                t = self.peek()
                raise LangError("syntax", f"unexpected {t.text or t.kind!r}",
                                t.pos, expected=("node", "extern"))
        return Program(nodes, externs)

    def node_decl(self) -> NodeDecl:
        pos = self.expect("node").pos
        name = self.expect("IDENT").text
        self.expect("(")
        inputs = self.param_list()
        self.expect(")")
        self.expect("returns")
        self.expect("(")
        outputs = self.param_list()
        self.expect(")")
        self.expect(";")
        locals_: list[VarDecl] = []
        if self.accept("var"):
            while self.at("IDENT"):
                locals_.extend(self.decl_group())
                self.expect(";")
        self.expect("let")
        equations: list[Equation] = []
        assertions: list[Expr] = []
        properties: list[str] = []
        while not self.at("tel"):
            if self.at("EOF"):
                raise LangError("syntax", "unterminated node body",
                                self.peek().pos, expected=("tel",))
            if self.at("PROPERTY"):
                properties.append(self.advance().text)
            elif self.accept("assert"):
                assertions.append(self.expr())
                self.expect(";")
            else:
                equations.append(self.equation())
        self.expect("tel")
        self.accept(";")
        return NodeDecl(name, inputs, outputs, locals_, equations,
                        assertions, properties, pos=pos)

    def extern_decl(self) -> ExternDecl:
        pos = self.expect("extern").pos
        name = self.expect("IDENT").text
        self.expect("(")
        params = self.param_list()
        self.expect(")")
        self.expect("returns")
        self.expect("(")
        rets = self.param_list()
        self.expect(")")
        self.expect(";")
        if len(rets) != 1:
            raise LangError("syntax", "extern functions return exactly one value", pos)
        return ExternDecl(name, params, rets[0], pos=pos)

    def param_list(self) -> list[VarDecl]:
        decls: list[VarDecl] = []
        while self.at("IDENT"):
            decls.extend(self.decl_group())
            if not self.accept(";"):
                break
        return decls

    def decl_group(self) -> list[VarDecl]:
        names: list[Token] = [self.expect("IDENT")]
        while self.accept(","):
            names.append(self.expect("IDENT"))
        self.expect(":")
        t = self.peek()
        if t.kind not in _TYPES:
            raise LangError("syntax", f"unexpected {t.text or t.kind!r}",
                            t.pos, expected=tuple(_TYPES))
        ty = _TYPES[self.advance().kind]
        return [VarDecl(n.text, ty, pos=n.pos) for n in names]

    def equation(self) -> Equation:
        # targets are `a = e;`, `a, b = e;`, or `(a, b) = e;`
        if self.at("("):
            pos = self.advance().pos
            targets = [self.expect("IDENT").text]
            while self.accept(","):
                targets.append(self.expect("IDENT").text)
            self.expect(")")
        else:
            first = self.expect("IDENT")
            pos = first.pos
            targets = [first.text]
            while self.accept(","):
                targets.append(self.expect("IDENT").text)
        self.expect("=")
        rhs = self.expr()
        self.expect(";")
        return Equation(targets, rhs, pos=pos)

    # expressions, loosest binding first --------------------------------

    def expr(self) -> Expr:
        e = self.arrow()
        self.reject_clock()
        return e

    def arrow(self) -> Expr:
        left = self.implies()
        if self.at("->"):
            pos = self.advance().pos
            right = self.arrow()
            return Arrow(left, right, pos=pos)
        return left

    def implies(self) -> Expr:
        left = self.or_expr()
        if self.at("=>"):
            pos = self.advance().pos
            right = self.implies()
            return Binary("=>", left, right, pos=pos)
        return left

    def or_expr(self) -> Expr:
        e = self.and_expr()
        while self.at("or"):
            pos = self.advance().pos
            e = Binary("or", e, self.and_expr(), pos=pos)
        return e

    def and_expr(self) -> Expr:
        e = self.not_expr()
        while self.at("and"):
            pos = self.advance().pos
            e = Binary("and", e, self.not_expr(), pos=pos)
        return e

    def not_expr(self) -> Expr:
        if self.at("not"):
            pos = self.advance().pos
            return Unary("not", self.not_expr(), pos=pos)
        return self.comparison()

    def comparison(self) -> Expr:
        e = self.additive()
        if self.peek().kind in _CMP_OPS:
            op = self.advance()
            e = Binary(op.kind, e, self.additive(), pos=op.pos)
            t = self.peek()
            if t.kind in _CMP_OPS:
                raise LangError("syntax", "comparisons do not chain; "
                                "parenthesize the intended grouping", t.pos)
        return e

    def additive(self) -> Expr:
        e = self.multiplicative()
        while self.peek().kind in ("+", "-"):
            op = self.advance()
            e = Binary(op.kind, e, self.multiplicative(), pos=op.pos)
        return e

    def multiplicative(self) -> Expr:
        e = self.unary()
        while self.peek().kind in ("*", "/"):
            op = self.advance()
            e = Binary(op.kind, e, self.unary(), pos=op.pos)
        return e

    def unary(self) -> Expr:
        if self.at("-"):
            pos = self.advance().pos
            return Unary("-", self.unary(), pos=pos)
        if self.at("pre"):
            pos = self.advance().pos
            return Pre(self.unary(), pos=pos)
        return self.primary()

    def primary(self) -> Expr:
        self.reject_clock()
        t = self.peek()
        if t.kind == "INT":
            self.advance()
            return IntLit(int(t.text), pos=t.pos)
        if t.kind == "REAL":
            self.advance()
            return RealLit(Fraction(t.text), pos=t.pos)
        if t.kind == "true":
            self.advance()
            return BoolLit(True, pos=t.pos)
        if t.kind == "false":
            self.advance()
            return BoolLit(False, pos=t.pos)
        if t.kind == "if":
            self.advance()
            cond = self.expr()
            self.expect("then")
            then = self.expr()
            self.expect("else")
            orelse = self.expr()
            return Ite(cond, then, orelse, pos=t.pos)
        if t.kind == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "IDENT":
            self.advance()
            if self.at("("):
                self.advance()
                args: list[Expr] = []
                if not self.at(")"):
                    args.append(self.expr())
                    while self.accept(","):
                        args.append(self.expr())
                self.expect(")")
                return Call(t.text, args, pos=t.pos)
            return Var(t.text, pos=t.pos)
        raise LangError("syntax", f"unexpected {t.text or t.kind!r}", t.pos,
                        expected=("literal", "identifier", "(", "if", "not",
                                  "pre", "-"))


def parse(text: str) -> Program:
    """Parse a source string into a Program. Pure; raises LangError."""
    p = _Parser(tokenize(text))
    return p.program()


def parse_expression(text: str) -> Expr:
    """Parse a standalone expression (used for contract formulas)."""
    p = _Parser(tokenize(text))
    e = p.expr()
    p.expect("EOF")
    return e
