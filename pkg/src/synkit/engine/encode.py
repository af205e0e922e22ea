"""Time-indexed SMT encoding of a transition system.

Each variable v at instant t becomes the solver symbol `v@t`. One
Unroller owns the text generation; sessions are fed whole instants at a
time so bounded checks and induction steps share the same plumbing.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional

from ..interp import Trace, Value
from ..lang import Expr, Type
from ..smt import SmtSession
from ..smt.sexpr import format_atom as sym
from ..tsys import TransitionSystem, to_sexpr

_SORT = {Type.BOOL: "Bool", Type.INT: "Int", Type.REAL: "Real"}


def logic_for(ts: TransitionSystem) -> str:
    types = set(ts.var_types().values())
    has_int = Type.INT in types
    has_real = Type.REAL in types
    if has_int and has_real:
        body = "LIRA"
    elif has_real:
        body = "LRA"
    else:
        body = "LIA"
    if ts.extern_symbols:
        return "QF_UF" + body
    return "QF_" + body


class Unroller:
    def __init__(self, ts: TransitionSystem):
        self.ts = ts
        self.types = ts.var_types()
        self.all_vars = ([n for n, _ in ts.input_vars]
                         + [n for n, _ in ts.state_vars]
                         + [n for n, _ in ts.defined_vars])

    def at(self, name: str, t: int) -> str:
        return sym(f"{name}@{t}")

    def formula(self, e: Expr, t: int) -> str:
        return to_sexpr(e, lambda name: self.at(name, t))

    def declare_externs(self, s: SmtSession) -> None:
        for name, params, ret in self.ts.extern_symbols:
            s.declare_fun(name, [_SORT[p] for p in params], _SORT[ret])

    def declare_step(self, s: SmtSession, t: int) -> None:
        for name in self.all_vars:
            s.declare_const(f"{name}@{t}", _SORT[self.types[name]])

    def assert_init(self, s: SmtSession) -> None:
        for f in self.ts.init:
            s.assert_text(self.formula(f, 0))

    def assert_instant(self, s: SmtSession, t: int) -> None:
        """Definitions and assumptions of instant t."""
        for name, rhs in self.ts.definitions:
            s.assert_text(f"(= {self.at(name, t)} {self.formula(rhs, t)})")
        for a in self.ts.assumptions:
            s.assert_text(self.formula(a, t))

    def assert_trans(self, s: SmtSession, t: int) -> None:
        """Step relation from instant t to t+1."""
        for name, rhs in self.ts.trans:
            s.assert_text(
                f"(= {self.at(name, t + 1)} {self.formula(rhs, t)})")

    def assert_distinct_states(self, s: SmtSession, upto: int) -> None:
        names = [n for n, _ in self.ts.state_vars]
        if not names:
            return
        for i in range(upto + 1):
            for j in range(i + 1, upto + 1):
                eqs = " ".join(
                    f"(= {self.at(n, i)} {self.at(n, j)})" for n in names)
                s.assert_text(f"(not (and {eqs}))")

    def decode_inputs(self, s: SmtSession, upto: int) -> Trace:
        names = [n for n, _ in self.ts.input_vars]
        wanted = [f"{n}@{t}" for t in range(upto + 1) for n in names]
        raw = s.get_values(wanted) if wanted else {}
        signals: dict[str, list[Value]] = {n: [] for n in names}
        for t in range(upto + 1):
            for n in names:
                signals[n].append(
                    _coerce(raw[f"{n}@{t}"], self.types[n]))
        return Trace(signals)


def _coerce(v, ty: Type) -> Value:
    if ty is Type.BOOL:
        return bool(v)
    if ty is Type.INT:
        return int(v)
    return Fraction(v)
