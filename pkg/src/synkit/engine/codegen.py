"""Transition systems compiled to plain Python step functions.

The symbolic side of the engine talks to a solver; everything else
(exhaustive search, invariant mining, soundness cross-checks) wants to
run a system fast and exactly. Compiling the definitions into one
generated function gets within small factors of hand-written code while
keeping bool/int/Fraction semantics identical to the interpreter.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from ..interp import Value
from ..lang import (Binary, BoolLit, Call, Expr, IntLit, Ite, LangError,
                    RealLit, Type, Unary, Var)
from ..tsys import INIT_FLAG, TransitionSystem

_TYPE_DEFAULT = {Type.BOOL: False, Type.INT: 0, Type.REAL: Fraction(0)}

# concrete meanings of the symbols the compiler introduces for
# nonlinear residue; used whenever a system is actually executed
NONLINEAR_EVAL: dict[str, Callable] = {
    "_nlmul_int": lambda a, b: a * b,
    "_nlmul_real": lambda a, b: a * b,
    "_nldiv_real": lambda a, b: a / b,
}


@dataclass
class CompiledSystem:
    ts: TransitionSystem
    input_names: list[str]
    state_names: list[str]
    defined_names: list[str]
    prop_ids: list[str]
    default_state: tuple
    # step(S, I) -> (S', assumptions_ok, props, defs)
    step: Callable[[tuple, tuple], tuple]
    init_ok: Callable[[tuple], bool]

    def bool_inputs_only(self) -> bool:
        return all(ty is Type.BOOL for _, ty in self.ts.input_vars)

    def bool_state_only(self) -> bool:
        return all(ty is Type.BOOL for _, ty in self.ts.state_vars)


class _Emitter:
    def __init__(self, slot: dict[str, str]):
        self.slot = slot
        self.consts: list[Fraction] = []

    def const(self, v: Fraction) -> str:
        self.consts.append(v)
        return f"C[{len(self.consts) - 1}]"

    def emit(self, e: Expr) -> str:
        if isinstance(e, BoolLit):
            return "True" if e.value else "False"
        if isinstance(e, IntLit):
            return f"({e.value})" if e.value < 0 else str(e.value)
        if isinstance(e, RealLit):
            return self.const(e.value)
        if isinstance(e, Var):
            try:
                return self.slot[e.name]
            except KeyError:
                raise LangError("compile", f"unbound variable {e.name}")
        if isinstance(e, Unary):
            inner = self.emit(e.operand)
            return f"(not {inner})" if e.op == "not" else f"(-{inner})"
        if isinstance(e, Binary):
            a, b = self.emit(e.left), self.emit(e.right)
            op = {"=": "==", "<>": "!=", "=>": None,
                  "and": "and", "or": "or"}.get(e.op, e.op)
            if e.op == "=>":
                return f"((not {a}) or {b})"
            return f"({a} {op} {b})"
        if isinstance(e, Ite):
            c = self.emit(e.cond)
            return f"({self.emit(e.then)} if {c} else {self.emit(e.orelse)})"
        if isinstance(e, Call):
            args = ", ".join(self.emit(a) for a in e.args)
            return f"E[{e.callee!r}]({args})"
        raise LangError("compile", f"cannot compile {type(e).__name__}")


def compile_system(ts: TransitionSystem,
                   externs: Optional[dict[str, Callable]] = None
                   ) -> CompiledSystem:
    """Build the executable form of ts. Extern symbols need concrete
    callables; the nonlinear-residue symbols get theirs automatically."""
    table = dict(NONLINEAR_EVAL)
    table.update(externs or {})
    for name, _, _ in ts.extern_symbols:
        if name not in table:
            raise LangError(
                "compile", f"no concrete semantics for extern {name}")

    input_names = [n for n, _ in ts.input_vars]
    state_names = [n for n, _ in ts.state_vars]
    defined_names = [n for n, _ in ts.defined_vars]
    slot: dict[str, str] = {}
    for i, n in enumerate(state_names):
        slot[n] = f"S[{i}]"
    for i, n in enumerate(input_names):
        slot[n] = f"I[{i}]"
    for i, n in enumerate(defined_names):
        slot[n] = f"d{i}"

    em = _Emitter(slot)
    lines = ["def _step(S, I, C, E):"]
    for name, rhs in ts.definitions:
        lines.append(f"    {slot[name]} = {em.emit(rhs)}")
    asm = " and ".join(f"({em.emit(a)})" for a in ts.assumptions) or "True"
    lines.append(f"    asm = {asm}")
    props = ", ".join(em.emit(f) for _, f in ts.properties)
    lines.append(f"    props = ({props}{',' if props else ''})")
    nxt = {name: em.emit(rhs) for name, rhs in ts.trans}
    nexts = ", ".join(nxt[n] for n in state_names)
    lines.append(f"    nxt = ({nexts}{',' if nexts else ''})")
    defs = ", ".join(slot[n] for n in defined_names)
    lines.append(f"    return nxt, asm, props, ({defs}{',' if defs else ''})")

    init_em = _Emitter({n: slot[n] for n in state_names})
    init_em.consts = em.consts
    init_body = " and ".join(f"({init_em.emit(f)})" for f in ts.init) \
        or "True"
    lines.append("def _init_ok(S, C, E):")
    lines.append(f"    return {init_body}")

    ns: dict = {"Fraction": Fraction}
    exec("\n".join(lines), ns)
    consts = tuple(em.consts)
    raw_step, raw_init = ns["_step"], ns["_init_ok"]

    default = tuple(True if n == INIT_FLAG else _TYPE_DEFAULT[ty]
                    for n, ty in ts.state_vars)
    return CompiledSystem(
        ts=ts, input_names=input_names, state_names=state_names,
        defined_names=defined_names,
        prop_ids=[pid for pid, _ in ts.properties],
        default_state=default,
        step=lambda S, I: raw_step(S, I, consts, table),
        init_ok=lambda S: raw_init(S, consts, table))


def eval_formula(e: Expr, env: dict[str, Value],
                 externs: Optional[dict[str, Callable]] = None) -> Value:
    """Evaluate one formula over a full variable environment."""
    table = externs if externs is not None else NONLINEAR_EVAL
    if isinstance(e, BoolLit):
        return e.value
    if isinstance(e, IntLit):
        return e.value
    if isinstance(e, RealLit):
        return e.value
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Unary):
        v = eval_formula(e.operand, env, table)
        return (not v) if e.op == "not" else -v
    if isinstance(e, Binary):
        if e.op in ("and", "or", "=>"):
            a = eval_formula(e.left, env, table)
            if e.op == "and" and not a:
                return False
            if e.op == "or" and a:
                return True
            if e.op == "=>" and not a:
                return True
            return bool(eval_formula(e.right, env, table))
        a = eval_formula(e.left, env, table)
        b = eval_formula(e.right, env, table)
        return {"+": lambda: a + b, "-": lambda: a - b,
                "*": lambda: a * b, "/": lambda: a / b,
                "=": lambda: a == b, "<>": lambda: a != b,
                "<": lambda: a < b, "<=": lambda: a <= b,
                ">": lambda: a > b, ">=": lambda: a >= b}[e.op]()
    if isinstance(e, Ite):
        branch = e.then if eval_formula(e.cond, env, table) else e.orelse
        return eval_formula(branch, env, table)
    if isinstance(e, Call):
        args = [eval_formula(a, env, table) for a in e.args]
        return table[e.callee](*args)
    raise LangError("compile", f"cannot evaluate {type(e).__name__}")
