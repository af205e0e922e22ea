"""Symbolic compilation: a typed node becomes a flat transition system.

All node calls are inlined under dotted instance prefixes (the same
naming the interpreter's deep recording uses). Each Pre site turns into
a state variable `<prefix>._pre<i>` with a next-state equation; all
Arrow sites share one global boolean state variable `_init` that is
true exactly at the first instant. Step-0 Pre variables are left
unconstrained: the symbolic system over-approximates the interpreter's
default-value start, which keeps proofs sound for execution.

Nonlinear residue is hidden behind uninterpreted function symbols:
products of two non-constant terms become _nlmul_int/_nlmul_real
applications, division by a non-constant becomes _nldiv_real, and
division by a nonzero constant is lowered to exact multiplication by
the reciprocal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .interp import Trace, Value
from .lang import (Arrow, Binary, BoolLit, Call, Expr, IntLit, Ite,
                   LangError, Pre, RealLit, Type, TypedProgram, Unary, Var,
                   walk)
from .lang.typecheck import instance_names

INIT_FLAG = "_init"


@dataclass
class TransitionSystem:
    node: str
    input_vars: list[tuple[str, Type]]
    state_vars: list[tuple[str, Type]]
    defined_vars: list[tuple[str, Type]]
    init: list[Expr]  # conjuncts over step-0 variables
    trans: list[tuple[str, Expr]]  # state_var' = rhs(step i)
    definitions: list[tuple[str, Expr]]  # defined_var = rhs, every step
    assumptions: list[Expr]  # hold at every step
    properties: list[tuple[str, Expr]]
    extern_symbols: list[tuple[str, tuple[Type, ...], Type]]

    def var_types(self) -> dict[str, Type]:
        out = {}
        for name, ty in self.input_vars + self.state_vars + self.defined_vars:
            out[name] = ty
        return out

    def property_formula(self, prop_id: str) -> Expr:
        for pid, f in self.properties:
            if pid == prop_id:
                return f
        raise KeyError(f"unknown property {prop_id!r}")


# expression utilities ----------------------------------------------------

def map_vars(e: Expr, fn: Callable[[Var], Expr]) -> Expr:
    if isinstance(e, Var):
        return fn(e)
    if isinstance(e, (BoolLit, IntLit, RealLit)):
        return e
    if isinstance(e, Unary):
        return Unary(e.op, map_vars(e.operand, fn), pos=e.pos, ty=e.ty)
    if isinstance(e, Binary):
        return Binary(e.op, map_vars(e.left, fn), map_vars(e.right, fn),
                      pos=e.pos, ty=e.ty)
    if isinstance(e, Ite):
        return Ite(map_vars(e.cond, fn), map_vars(e.then, fn),
                   map_vars(e.orelse, fn), pos=e.pos, ty=e.ty)
    if isinstance(e, Call):
        c = Call(e.callee, [map_vars(a, fn) for a in e.args],
                 pos=e.pos, ty=e.ty)
        c.is_extern = e.is_extern
        c.site = e.site
        return c
    raise LangError("compile", f"unexpected {type(e).__name__} in formula")


def vars_of(e: Expr) -> set[str]:
    return {s.name for s in walk(e) if isinstance(s, Var)}


def _lit_value(e: Expr) -> Optional[Value]:
    if isinstance(e, (BoolLit, IntLit, RealLit)):
        return e.value
    return None


def _mk_lit(v: Value, ty: Type) -> Expr:
    if ty is Type.BOOL:
        return BoolLit(bool(v), ty=Type.BOOL)
    if ty is Type.INT:
        return IntLit(int(v), ty=Type.INT)
    return RealLit(Fraction(v), ty=Type.REAL)


def fold_consts(e: Expr) -> Expr:
    """Bottom-up constant folding; exact arithmetic, no reassociation."""
    if isinstance(e, (BoolLit, IntLit, RealLit, Var)):
        return e
    if isinstance(e, Unary):
        opnd = fold_consts(e.operand)
        v = _lit_value(opnd)
        if v is not None:
            return _mk_lit((not v) if e.op == "not" else -v, e.ty)
        return Unary(e.op, opnd, pos=e.pos, ty=e.ty)
    if isinstance(e, Binary):
        left = fold_consts(e.left)
        right = fold_consts(e.right)
        a, b = _lit_value(left), _lit_value(right)
        if a is not None and b is not None:
            op = e.op
            if op == "/" and b == 0:
                raise LangError("compile", "division by constant zero", e.pos)
            table = {
                "+": lambda: a + b, "-": lambda: a - b, "*": lambda: a * b,
                "/": lambda: Fraction(a) / Fraction(b),
                "=": lambda: a == b, "<>": lambda: a != b,
                "<": lambda: a < b, "<=": lambda: a <= b,
                ">": lambda: a > b, ">=": lambda: a >= b,
                "and": lambda: bool(a) and bool(b),
                "or": lambda: bool(a) or bool(b),
                "=>": lambda: (not a) or bool(b),
            }
            return _mk_lit(table[op](), e.ty)
        return Binary(e.op, left, right, pos=e.pos, ty=e.ty)
    if isinstance(e, Ite):
        cond = fold_consts(e.cond)
        then = fold_consts(e.then)
        orelse = fold_consts(e.orelse)
        cv = _lit_value(cond)
        if cv is not None:
            return then if cv else orelse
        return Ite(cond, then, orelse, pos=e.pos, ty=e.ty)
    if isinstance(e, Call):
        c = Call(e.callee, [fold_consts(a) for a in e.args],
                 pos=e.pos, ty=e.ty)
        c.is_extern = e.is_extern
        c.site = e.site
        return c
    raise LangError("compile", f"cannot fold {type(e).__name__}")


# compilation --------------------------------------------------------------

class _Compiler:
    def __init__(self, tp: TypedProgram):
        self.tp = tp
        self.defined: list[tuple[str, Type]] = []
        self.def_eqs: list[tuple[str, Expr]] = []
        self.state: list[tuple[str, Type]] = [(INIT_FLAG, Type.BOOL)]
        self.trans: list[tuple[str, Expr]] = [(INIT_FLAG,
                                               BoolLit(False, ty=Type.BOOL))]
        self.assumptions: list[Expr] = []
        self.properties: list[tuple[str, Expr]] = []

    def compile(self, node: str) -> TransitionSystem:
        top = self.tp.info(node)
        inputs = [(vd.name, vd.type) for vd in top.decl.inputs]
        self._inline(top, "", None)
        for prop in top.decl.properties:
            self.properties.append((prop, Var(prop, ty=Type.BOOL)))
        init = [Var(INIT_FLAG, ty=Type.BOOL)]
        ts = TransitionSystem(node, inputs, self.state, self.defined,
                              init, self.trans, self.def_eqs,
                              self.assumptions, self.properties, [])
        _propagate_constants(ts)
        _lower_nonlinear(ts)
        ts.extern_symbols = _collect_externs(ts, self.tp)
        return ts

    def _inline(self, info, prefix: str,
                input_exprs: Optional[list[Expr]]) -> None:
        p = prefix + "." if prefix else ""
        if input_exprs is not None:
            for vd, arg in zip(info.decl.inputs, input_exprs):
                self.defined.append((p + vd.name, vd.type))
                self.def_eqs.append((p + vd.name, arg))
        for vd in info.decl.outputs + info.decl.locals:
            self.defined.append((p + vd.name, vd.type))
        names = instance_names(info)
        for eq in info.decl.equations:
            if len(eq.targets) > 1:
                call = eq.rhs
                child_prefix = p + names[call.site]
                args = [self._tx(a, info, prefix, names) for a in call.args]
                callee = self.tp.info(call.callee)
                self._inline(callee, child_prefix, args)
                for t, out in zip(eq.targets, callee.decl.outputs):
                    self.def_eqs.append(
                        (p + t, Var(f"{child_prefix}.{out.name}",
                                    ty=out.type)))
            else:
                rhs = self._tx(eq.rhs, info, prefix, names)
                self.def_eqs.append((p + eq.targets[0], rhs))
        for a in info.decl.assertions:
            self.assumptions.append(self._tx(a, info, prefix, names))

    def _tx(self, e: Expr, info, prefix: str, names) -> Expr:
        p = prefix + "." if prefix else ""
        if isinstance(e, (BoolLit, IntLit, RealLit)):
            return e
        if isinstance(e, Var):
            return Var(p + e.name, pos=e.pos, ty=e.ty)
        if isinstance(e, Unary):
            return Unary(e.op, self._tx(e.operand, info, prefix, names),
                         pos=e.pos, ty=e.ty)
        if isinstance(e, Binary):
            return Binary(e.op, self._tx(e.left, info, prefix, names),
                          self._tx(e.right, info, prefix, names),
                          pos=e.pos, ty=e.ty)
        if isinstance(e, Ite):
            return Ite(self._tx(e.cond, info, prefix, names),
                       self._tx(e.then, info, prefix, names),
                       self._tx(e.orelse, info, prefix, names),
                       pos=e.pos, ty=e.ty)
        if isinstance(e, Pre):
            sv = f"{p}_pre{e.site}"
            if all(sv != n for n, _ in self.state):
                self.state.append((sv, e.ty))
                self.trans.append((sv, self._tx(e.operand, info, prefix,
                                                names)))
            return Var(sv, ty=e.ty)
        if isinstance(e, Arrow):
            return Ite(Var(INIT_FLAG, ty=Type.BOOL),
                       self._tx(e.left, info, prefix, names),
                       self._tx(e.right, info, prefix, names),
                       pos=e.pos, ty=e.ty)
        if isinstance(e, Call):
            args = [self._tx(a, info, prefix, names) for a in e.args]
            if e.is_extern:
                c = Call(e.callee, args, pos=e.pos, ty=e.ty)
                c.is_extern = True
                return c
            child_prefix = p + names[e.site]
            callee = self.tp.info(e.callee)
            self._inline(callee, child_prefix, args)
            out = callee.decl.outputs[0]
            return Var(f"{child_prefix}.{out.name}", ty=out.type)
        raise LangError("compile", f"unexpected {type(e).__name__}")


def _propagate_constants(ts: TransitionSystem) -> None:
    """Bind defined variables whose equations fold to literals, then
    substitute them everywhere. Keeps products like gain*dt linear."""
    consts: dict[str, Expr] = {}
    changed = True
    while changed:
        changed = False
        for i, (name, rhs) in enumerate(ts.definitions):
            if name in consts:
                continue
            folded = fold_consts(_subst(rhs, consts))
            if _lit_value(folded) is not None:
                consts[name] = folded
                ts.definitions[i] = (name, folded)
                changed = True
    if not consts:
        return

    def apply(e: Expr) -> Expr:
        return fold_consts(_subst(e, consts))

    ts.definitions = [(n, rhs if n in consts else apply(rhs))
                      for n, rhs in ts.definitions]
    ts.trans = [(n, apply(rhs)) for n, rhs in ts.trans]
    ts.assumptions = [apply(a) for a in ts.assumptions]
    ts.init = [apply(f) for f in ts.init]
    ts.properties = [(pid, apply(f)) for pid, f in ts.properties]


def _subst(e: Expr, mapping: dict[str, Expr]) -> Expr:
    return map_vars(e, lambda v: mapping.get(v.name, v))


def _lower_nonlinear(ts: TransitionSystem) -> None:
    def lower(e: Expr) -> Expr:
        if isinstance(e, (BoolLit, IntLit, RealLit, Var)):
            return e
        if isinstance(e, Unary):
            return Unary(e.op, lower(e.operand), pos=e.pos, ty=e.ty)
        if isinstance(e, Ite):
            return Ite(lower(e.cond), lower(e.then), lower(e.orelse),
                       pos=e.pos, ty=e.ty)
        if isinstance(e, Call):
            c = Call(e.callee, [lower(a) for a in e.args], pos=e.pos, ty=e.ty)
            c.is_extern = e.is_extern
            return c
        if isinstance(e, Binary):
            left = lower(e.left)
            right = lower(e.right)
            if e.op == "*" and _lit_value(left) is None \
                    and _lit_value(right) is None:
                name = "_nlmul_int" if e.ty is Type.INT else "_nlmul_real"
                c = Call(name, [left, right], pos=e.pos, ty=e.ty)
                c.is_extern = True
                return c
            if e.op == "/":
                dv = _lit_value(right)
                if dv is None:
                    c = Call("_nldiv_real", [left, right], pos=e.pos,
                             ty=Type.REAL)
                    c.is_extern = True
                    return c
                if dv == 0:
                    raise LangError("compile", "division by constant zero",
                                    e.pos)
                recip = RealLit(Fraction(1) / Fraction(dv), ty=Type.REAL)
                return Binary("*", left, recip, pos=e.pos, ty=Type.REAL)
            return Binary(e.op, left, right, pos=e.pos, ty=e.ty)
        raise LangError("compile", f"cannot lower {type(e).__name__}")

    ts.definitions = [(n, lower(rhs)) for n, rhs in ts.definitions]
    ts.trans = [(n, lower(rhs)) for n, rhs in ts.trans]
    ts.assumptions = [lower(a) for a in ts.assumptions]
    ts.init = [lower(f) for f in ts.init]
    ts.properties = [(pid, lower(f)) for pid, f in ts.properties]


_NL_SIGS = {
    "_nlmul_int": ((Type.INT, Type.INT), Type.INT),
    "_nlmul_real": ((Type.REAL, Type.REAL), Type.REAL),
    "_nldiv_real": ((Type.REAL, Type.REAL), Type.REAL),
}


def _collect_externs(ts: TransitionSystem,
                     tp: TypedProgram) -> list[tuple[str, tuple[Type, ...],
                                                     Type]]:
    found: dict[str, tuple[tuple[Type, ...], Type]] = {}
    formulas = ([rhs for _, rhs in ts.definitions]
                + [rhs for _, rhs in ts.trans]
                + ts.assumptions + ts.init
                + [f for _, f in ts.properties])
    for f in formulas:
        for sub in walk(f):
            if isinstance(sub, Call):
                if not sub.is_extern:
                    raise LangError("compile",
                                    f"uninlined call {sub.callee!r}")
                if sub.callee in _NL_SIGS:
                    found[sub.callee] = _NL_SIGS[sub.callee]
                else:
                    ex = tp.externs[sub.callee]
                    found[sub.callee] = (tuple(p.type for p in ex.params),
                                         ex.ret.type)
    return [(n,) + found[n] for n in sorted(found)]


def compile(tp: TypedProgram, node: str) -> TransitionSystem:  # noqa: A001
    """Inline everything beneath node and emit its transition system."""
    tp.info(node)  # raises on unknown node
    return _Compiler(tp).compile(node)


# slicing -------------------------------------------------------------------

def slice(ts: TransitionSystem, prop_id: str) -> TransitionSystem:  # noqa: A001
    """Cone of influence for one property.

    Keeps the variables the property formula reaches through definitions
    and next-state equations; an assumption is kept (and its variables
    pulled in) as soon as it mentions a kept variable, or mentions no
    variable at all.
    """
    target = ts.property_formula(prop_id)
    def_rhs = dict(ts.definitions)
    trans_rhs = dict(ts.trans)
    keep: set[str] = set(vars_of(target))
    keep.add(INIT_FLAG)
    used_assumptions: set[int] = set()
    work = True
    while work:
        work = False
        for name in list(keep):
            for rhs_map in (def_rhs, trans_rhs):
                if name in rhs_map:
                    new = vars_of(rhs_map[name]) - keep
                    if new:
                        keep |= new
                        work = True
        for i, a in enumerate(ts.assumptions):
            if i in used_assumptions:
                continue
            mentioned = vars_of(a)
            if not mentioned or mentioned & keep:
                used_assumptions.add(i)
                new = mentioned - keep
                if new:
                    keep |= new
                work = True

    sliced = TransitionSystem(
        ts.node,
        [(n, t) for n, t in ts.input_vars if n in keep],
        [(n, t) for n, t in ts.state_vars if n in keep],
        [(n, t) for n, t in ts.defined_vars if n in keep],
        list(ts.init),
        [(n, rhs) for n, rhs in ts.trans if n in keep],
        [(n, rhs) for n, rhs in ts.definitions if n in keep],
        [a for i, a in enumerate(ts.assumptions) if i in used_assumptions],
        [(prop_id, target)],
        [],
    )
    sliced.extern_symbols = [
        (n, ps, r) for n, ps, r in ts.extern_symbols
        if any(isinstance(s, Call) and s.callee == n
               for f in ([rhs for _, rhs in sliced.definitions]
                         + [rhs for _, rhs in sliced.trans]
                         + sliced.assumptions + sliced.init
                         + [f for _, f in sliced.properties])
               for s in walk(f))]
    return sliced


# trace decoding -------------------------------------------------------------

def concretize(ts: TransitionSystem,
               assignments: list[dict[str, Value]]) -> Trace:
    """Turn per-step solver assignments into a Trace over system names."""
    order = ([n for n, _ in ts.input_vars]
             + [n for n, _ in ts.defined_vars]
             + [n for n, _ in ts.state_vars])
    signals: dict[str, list[Value]] = {n: [] for n in order}
    for t, step_vals in enumerate(assignments):
        for n in order:
            if n not in step_vals:
                raise KeyError(f"assignment at step {t} lacks {n!r}")
            signals[n].append(step_vals[n])
    return Trace(signals)


def seed_state(tp: TypedProgram, node: str, step0: dict[str, Value]):
    """Build an interpreter NodeState whose Pre cells and Arrow flags
    take the transition-system state values at step 0 (dotted naming)."""
    from .interp import init_state

    st = init_state(tp, node)
    flag = step0.get(INIT_FLAG, True)

    def fill(state, info, prefix: str):
        p = prefix + "." if prefix else ""
        for i in range(info.n_pre):
            name = f"{p}_pre{i}"
            if name in step0:
                state.pre_vals[i] = step0[name]
        state.arrow_first = [bool(flag)] * info.n_arrow
        names = instance_names(info)
        for c in info.calls:
            if not c.is_extern:
                child_prefix = p + names[c.site]
                fill(state.children[c.site], tp.info(c.callee), child_prefix)

    fill(st, tp.info(node), "")
    return st


# debug dump ------------------------------------------------------------------

_SORT = {Type.BOOL: "Bool", Type.INT: "Int", Type.REAL: "Real"}


def to_sexpr(e: Expr, var_fn: Callable[[str], str]) -> str:
    """Render a formula as SMT-LIB2 text; var_fn maps variable names to
    (already quoted/indexed) solver symbols."""
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, IntLit):
        return str(e.value) if e.value >= 0 else f"(- {-e.value})"
    if isinstance(e, RealLit):
        v = e.value
        num, den = abs(v.numerator), v.denominator
        body = f"{num}.0" if den == 1 else f"(/ {num}.0 {den}.0)"
        return body if v >= 0 else f"(- {body})"
    if isinstance(e, Var):
        return var_fn(e.name)
    if isinstance(e, Unary):
        inner = to_sexpr(e.operand, var_fn)
        return f"(not {inner})" if e.op == "not" else f"(- {inner})"
    if isinstance(e, Binary):
        lhs = to_sexpr(e.left, var_fn)
        rhs = to_sexpr(e.right, var_fn)
        if e.op == "<>":
            return f"(not (= {lhs} {rhs}))"
        return f"({e.op} {lhs} {rhs})"
    if isinstance(e, Ite):
        return (f"(ite {to_sexpr(e.cond, var_fn)} "
                f"{to_sexpr(e.then, var_fn)} {to_sexpr(e.orelse, var_fn)})")
    if isinstance(e, Call):
        args = " ".join(to_sexpr(a, var_fn) for a in e.args)
        return f"({e.callee} {args})"
    raise LangError("compile", f"cannot render {type(e).__name__}")


def dump(ts: TransitionSystem) -> str:
    """SMT-LIB2-styled inspection text; not a stable interchange format."""
    q = lambda n: f"|{n}|"
    lines = [f"; transition system for node {ts.node}"]
    for name, ps, ret in ts.extern_symbols:
        args = " ".join(_SORT[p] for p in ps)
        lines.append(f"(declare-fun {q(name)} ({args}) {_SORT[ret]})")
    for section, pairs in (("input", ts.input_vars),
                           ("state", ts.state_vars),
                           ("defined", ts.defined_vars)):
        for name, ty in pairs:
            lines.append(f"(declare-const {q(name)} {_SORT[ty]}) ; {section}")
    for f in ts.init:
        lines.append(f"(assert (! {to_sexpr(f, q)} :named init))")
    for name, rhs in ts.definitions:
        lines.append(f"(assert (! (= {q(name)} {to_sexpr(rhs, q)}) "
                     f":named def.{name}))")
    for name, rhs in ts.trans:
        lines.append(f"(assert (! (= {q(name + chr(39))} "
                     f"{to_sexpr(rhs, q)}) :named trans.{name}))")
    for i, a in enumerate(ts.assumptions):
        lines.append(f"(assert (! {to_sexpr(a, q)} :named assume.{i}))")
    for pid, f in ts.properties:
        lines.append(f"; property {pid}: {to_sexpr(f, q)}")
    return "\n".join(lines) + "\n"
