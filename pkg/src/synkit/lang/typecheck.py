"""Type, single-assignment, and causality analysis.

typecheck() returns a TypedProgram holding a typed copy of the AST.
On the copy, every expression has .ty filled in, integer literals in
real positions are rewritten to real literals (literal-only widening,
variables never coerce), and each Pre/Arrow/call occurrence carries a
site index.  Site indices are the shared coordinate system between the
interpreter's NodeState and the compiler's state variables: they are
assigned per node in source order (equations first, then assertions,
preorder within an expression).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .ast import (Arrow, Binary, BoolLit, Call, Equation, Expr, ExternDecl,
                  IntLit, Ite, NodeDecl, Pre, Program, RealLit, Type, Unary,
                  Var, VarDecl, walk)
from .errors import LangError

_NUMERIC = (Type.INT, Type.REAL)


@dataclass
class NodeInfo:
    decl: NodeDecl
    env: dict[str, Type]
    schedule: list[Equation]  # causal evaluation order
    n_pre: int = 0
    n_arrow: int = 0
    calls: list[Call] = field(default_factory=list)  # in site order


@dataclass
class TypedProgram:
    program: Program
    nodes: dict[str, NodeInfo]
    externs: dict[str, ExternDecl]
    order: list[str]  # call-graph topological order, callees first

    def info(self, name: str) -> NodeInfo:
        if name not in self.nodes:
            raise LangError("undefined", f"unknown node {name!r}")
        return self.nodes[name]


def typecheck(p: Program) -> TypedProgram:
    checker = _Checker(p)
    return checker.run()


def type_expression(tp: TypedProgram, env: dict[str, Type], e: Expr,
                    expected: Optional[Type] = None) -> Expr:
    """Type a standalone expression against an environment.

    Calls resolve against tp's nodes/externs. Used for contract formulas.
    """
    checker = _Checker(tp.program)
    typed = checker.infer(e, env, expected)
    _assign_sites_expr(typed)
    return typed


class _Checker:
    def __init__(self, p: Program):
        self.p = p
        self.node_sigs: dict[str, NodeDecl] = {}
        for n in p.nodes:
            if n.name in self.node_sigs:
                raise LangError("multiple-definition",
                                f"node {n.name!r} declared twice", n.pos)
            self.node_sigs[n.name] = n
        self.externs: dict[str, ExternDecl] = {}
        for ex in p.externs:
            if ex.name in self.externs:
                raise LangError("multiple-definition",
                                f"extern {ex.name!r} declared twice", ex.pos)
            if ex.name in self.node_sigs:
                raise LangError("multiple-definition",
                                f"extern {ex.name!r} collides with a node", ex.pos)
            self.externs[ex.name] = ex

    def run(self) -> TypedProgram:
        order = self._call_order()
        infos: dict[str, NodeInfo] = {}
        typed_nodes: dict[str, NodeDecl] = {}
        for n in self.p.nodes:
            info = self._check_node(n)
            infos[n.name] = info
            typed_nodes[n.name] = info.decl
        typed = Program([typed_nodes[n.name] for n in self.p.nodes],
                        list(self.p.externs))
        return TypedProgram(typed, infos, dict(self.externs), order)

    # call graph ---------------------------------------------------------

    def _call_order(self) -> list[str]:
        deps: dict[str, set[str]] = {n.name: set() for n in self.p.nodes}
        for n in self.p.nodes:
            for eq in n.equations:
                for sub in walk(eq.rhs):
                    if isinstance(sub, Call) and sub.callee in self.node_sigs:
                        deps[n.name].add(sub.callee)
            for a in n.assertions:
                for sub in walk(a):
                    if isinstance(sub, Call) and sub.callee in self.node_sigs:
                        deps[n.name].add(sub.callee)
        order: list[str] = []
        state: dict[str, int] = {}  # 1 visiting, 2 done

        def visit(name: str, chain: list[str]) -> None:
            if state.get(name) == 2:
                return
            if state.get(name) == 1:
                cycle = chain[chain.index(name):] + [name]
                raise LangError("recursion",
                                "recursive node calls: " + " -> ".join(cycle))
            state[name] = 1
            for d in sorted(deps[name]):
                visit(d, chain + [name])
            state[name] = 2
            order.append(name)

        for n in self.p.nodes:
            visit(n.name, [])
        return order

    # per-node checking ---------------------------------------------------

    def _check_node(self, n: NodeDecl) -> NodeInfo:
        env: dict[str, Type] = {}
        for vd in n.declared():
            if vd.name in env:
                raise LangError("multiple-definition",
                                f"signal {vd.name!r} declared twice in node "
                                f"{n.name!r}", vd.pos)
            env[vd.name] = vd.type
        inputs = {vd.name for vd in n.inputs}
        must_define = [vd.name for vd in n.outputs + n.locals]

        defined: dict[str, Equation] = {}
        typed_eqs: list[Equation] = []
        for eq in n.equations:
            for t in eq.targets:
                if t not in env:
                    raise LangError("undefined",
                                    f"equation defines undeclared signal {t!r}",
                                    eq.pos)
                if t in inputs:
                    raise LangError("multiple-definition",
                                    f"input {t!r} cannot be defined", eq.pos)
                if t in defined:
                    raise LangError("multiple-definition",
                                    f"signal {t!r} defined twice", eq.pos)
            typed_eqs.append(self._type_equation(n, env, eq))
            for t in eq.targets:
                defined[t] = eq
        for name in must_define:
            if name not in defined:
                raise LangError("undefined",
                                f"signal {name!r} has no defining equation "
                                f"in node {n.name!r}", n.pos)

        typed_asserts = []
        for a in n.assertions:
            typed_asserts.append(self.infer(a, env, Type.BOOL))
        for prop in n.properties:
            if prop not in env or prop in inputs:
                raise LangError("undefined",
                                f"property annotation names {prop!r}, which is "
                                f"not an output or local of {n.name!r}", n.pos)
            if env[prop] is not Type.BOOL:
                raise LangError("type",
                                f"property signal {prop!r} must be bool", n.pos)

        decl = NodeDecl(n.name, list(n.inputs), list(n.outputs),
                        list(n.locals), typed_eqs, typed_asserts,
                        list(n.properties), pos=n.pos)
        schedule = self._schedule(decl, inputs)
        n_pre, n_arrow, calls = _assign_sites(decl)
        return NodeInfo(decl, env, schedule, n_pre, n_arrow, calls)

    def _type_equation(self, n: NodeDecl, env: dict[str, Type],
                       eq: Equation) -> Equation:
        if len(eq.targets) > 1:
            rhs = eq.rhs
            if not isinstance(rhs, Call) or rhs.callee not in self.node_sigs:
                raise LangError("type", "tuple equation requires a node call "
                                "on the right-hand side", eq.pos)
            callee = self.node_sigs[rhs.callee]
            if len(callee.outputs) != len(eq.targets):
                raise LangError("type",
                                f"{rhs.callee!r} returns {len(callee.outputs)} "
                                f"values, {len(eq.targets)} targets given", eq.pos)
            typed_call = self._type_call(rhs, env, multi_ok=True)
            for t, out in zip(eq.targets, callee.outputs):
                if env[t] is not out.type:
                    raise LangError("type",
                                    f"target {t!r} has type {env[t]}, call "
                                    f"output {out.name!r} is {out.type}", eq.pos)
            return Equation(list(eq.targets), typed_call, pos=eq.pos)
        target = eq.targets[0]
        rhs = self.infer(eq.rhs, env, env[target])
        return Equation([target], rhs, pos=eq.pos)

    # expression typing ----------------------------------------------------

    def infer(self, e: Expr, env: dict[str, Type],
              expected: Optional[Type] = None) -> Expr:
        out = self._infer(e, env, expected)
        if expected is not None and out.ty is not expected:
            raise LangError("type", f"expected {expected}, got {out.ty}", e.pos)
        return out

    def _infer(self, e: Expr, env: dict[str, Type],
               expected: Optional[Type]) -> Expr:
        if isinstance(e, BoolLit):
            return BoolLit(e.value, pos=e.pos, ty=Type.BOOL)
        if isinstance(e, IntLit):
            if expected is Type.REAL:
                return RealLit(Fraction(e.value), pos=e.pos, ty=Type.REAL)
            return IntLit(e.value, pos=e.pos, ty=Type.INT)
        if isinstance(e, RealLit):
            return RealLit(e.value, pos=e.pos, ty=Type.REAL)
        if isinstance(e, Var):
            if e.name not in env:
                raise LangError("undefined", f"undefined signal {e.name!r}", e.pos)
            return Var(e.name, pos=e.pos, ty=env[e.name])
        if isinstance(e, Unary):
            if e.op == "not":
                opnd = self.infer(e.operand, env, Type.BOOL)
                return Unary("not", opnd, pos=e.pos, ty=Type.BOOL)
            opnd = self._infer(e.operand, env,
                               expected if expected in _NUMERIC else None)
            if opnd.ty not in _NUMERIC:
                raise LangError("type", f"unary '-' needs int or real, got "
                                f"{opnd.ty}", e.pos)
            return Unary("-", opnd, pos=e.pos, ty=opnd.ty)
        if isinstance(e, Binary):
            return self._infer_binary(e, env, expected)
        if isinstance(e, Ite):
            cond = self.infer(e.cond, env, Type.BOOL)
            then = self._infer(e.then, env, expected)
            orelse = self._infer(e.orelse, env, expected)
            then, orelse = self._join(then, orelse, e)
            return Ite(cond, then, orelse, pos=e.pos, ty=then.ty)
        if isinstance(e, Arrow):
            left = self._infer(e.left, env, expected)
            right = self._infer(e.right, env, expected)
            left, right = self._join(left, right, e)
            return Arrow(left, right, pos=e.pos, ty=left.ty)
        if isinstance(e, Pre):
            opnd = self._infer(e.operand, env, expected)
            return Pre(opnd, pos=e.pos, ty=opnd.ty)
        if isinstance(e, Call):
            return self._type_call(e, env, multi_ok=False)
        raise LangError("type", f"unsupported expression {type(e).__name__}", e.pos)

    def _infer_binary(self, e: Binary, env: dict[str, Type],
                      expected: Optional[Type]) -> Expr:
        op = e.op
        if op in ("and", "or", "=>"):
            left = self.infer(e.left, env, Type.BOOL)
            right = self.infer(e.right, env, Type.BOOL)
            return Binary(op, left, right, pos=e.pos, ty=Type.BOOL)
        if op in ("=", "<>", "<", "<=", ">", ">="):
            left = self._infer(e.left, env, None)
            right = self._infer(e.right, env, None)
            left, right = self._join(left, right, e)
            if op not in ("=", "<>") and left.ty not in _NUMERIC:
                raise LangError("type", f"{op!r} needs int or real operands,"
                                f" got {left.ty}", e.pos)
            return Binary(op, left, right, pos=e.pos, ty=Type.BOOL)
        if op in ("+", "-", "*"):
            hint = expected if expected in _NUMERIC else None
            left = self._infer(e.left, env, hint)
            right = self._infer(e.right, env, hint)
            left, right = self._join(left, right, e)
            if left.ty not in _NUMERIC:
                raise LangError("type", f"{op!r} needs int or real operands,"
                                f" got {left.ty}", e.pos)
            return Binary(op, left, right, pos=e.pos, ty=left.ty)
        if op == "/":
            left = self._infer(e.left, env, Type.REAL)
            right = self._infer(e.right, env, Type.REAL)
            if left.ty is not Type.REAL or right.ty is not Type.REAL:
                raise LangError("type", "'/' requires real operands "
                                "(there is no integer division)", e.pos)
            return Binary("/", left, right, pos=e.pos, ty=Type.REAL)
        raise LangError("type", f"unknown operator {op!r}", e.pos)

    def _join(self, a: Expr, b: Expr, ctx: Expr) -> tuple[Expr, Expr]:
        """Unify operand types, widening a bare int literal to real."""
        if a.ty is b.ty:
            return a, b
        if a.ty is Type.INT and b.ty is Type.REAL and isinstance(a, IntLit):
            return RealLit(Fraction(a.value), pos=a.pos, ty=Type.REAL), b
        if b.ty is Type.INT and a.ty is Type.REAL and isinstance(b, IntLit):
            return a, RealLit(Fraction(b.value), pos=b.pos, ty=Type.REAL)
        raise LangError("type", f"operand types differ: {a.ty} vs {b.ty}",
                        ctx.pos)

    def _type_call(self, e: Call, env: dict[str, Type], multi_ok: bool) -> Call:
        if e.callee in self.node_sigs:
            sig = self.node_sigs[e.callee]
            params = sig.inputs
            outs = sig.outputs
            is_extern = False
        elif e.callee in self.externs:
            ex = self.externs[e.callee]
            params = ex.params
            outs = [ex.ret]
            is_extern = True
        else:
            raise LangError("undefined", f"call to undefined node or extern "
                            f"{e.callee!r}", e.pos)
        if len(e.args) != len(params):
            raise LangError("type", f"{e.callee!r} takes {len(params)} "
                            f"arguments, {len(e.args)} given", e.pos)
        if len(outs) != 1 and not multi_ok:
            raise LangError("type", f"multi-output call to {e.callee!r} must "
                            "be the sole right-hand side of a tuple equation",
                            e.pos)
        args = [self.infer(a, env, p.type) for a, p in zip(e.args, params)]
        ty = outs[0].type if len(outs) == 1 else None
        call = Call(e.callee, args, pos=e.pos, ty=ty)
        call.is_extern = is_extern
        return call

    # causality -------------------------------------------------------------

    def _schedule(self, n: NodeDecl, inputs: set[str]) -> list[Equation]:
        def_of: dict[str, Equation] = {}
        for eq in n.equations:
            for t in eq.targets:
                def_of[t] = eq
        eq_deps: dict[int, set[str]] = {}
        for idx, eq in enumerate(n.equations):
            deps = _current_deps(eq.rhs)
            eq_deps[idx] = {d for d in deps if d in def_of}

        done: set[str] = set()
        scheduled: list[Equation] = []
        remaining = set(range(len(n.equations)))
        progress = True
        while remaining and progress:
            progress = False
            for idx in sorted(remaining):
                if eq_deps[idx] <= done:
                    scheduled.append(n.equations[idx])
                    done.update(n.equations[idx].targets)
                    remaining.discard(idx)
                    progress = True
        if remaining:
            cycle = self._find_cycle(n, def_of, remaining)
            raise LangError("causality",
                            "causality cycle through " + " -> ".join(cycle),
                            n.equations[min(remaining)].pos)
        return scheduled

    def _find_cycle(self, n: NodeDecl, def_of: dict[str, Equation],
                    remaining: set[int]) -> list[str]:
        # signal graph restricted to the stuck equations
        stuck_targets = set()
        for idx in remaining:
            stuck_targets.update(n.equations[idx].targets)
        graph: dict[str, list[str]] = {}
        for idx in remaining:
            eq = n.equations[idx]
            deps = [d for d in sorted(_current_deps(eq.rhs))
                    if d in stuck_targets]
            for t in eq.targets:
                graph[t] = deps
        state: dict[str, int] = {}

        def dfs(v: str, path: list[str]) -> Optional[list[str]]:
            state[v] = 1
            for w in graph.get(v, ()):
                if state.get(w) == 1:
                    return path[path.index(w):] + [w]
                if state.get(w, 0) == 0:
                    found = dfs(w, path + [w])
                    if found:
                        return found
            state[v] = 2
            return None

        for v in sorted(graph):
            if state.get(v, 0) == 0:
                found = dfs(v, [v])
                if found:
                    return found
        return sorted(stuck_targets)  # fallback, should not happen


def instance_names(info: NodeInfo) -> dict[int, str]:
    """Stable names for node call instances, keyed by call site.

    A lone call to a callee is named after it; repeated callees get
    1-based ordinals (Saturation1, Saturation2, ...) in site order.
    """
    counts: dict[str, int] = {}
    for c in info.calls:
        counts[c.callee] = counts.get(c.callee, 0) + 1
    seen: dict[str, int] = {}
    names: dict[int, str] = {}
    for c in info.calls:
        if counts[c.callee] == 1:
            names[c.site] = c.callee
        else:
            seen[c.callee] = seen.get(c.callee, 0) + 1
            names[c.site] = f"{c.callee}{seen[c.callee]}"
    return names


def _current_deps(e: Expr) -> set[str]:
    """Signals read at the current instant (Pre subtrees excluded)."""
    if isinstance(e, Pre):
        return set()
    if isinstance(e, Var):
        return {e.name}
    deps: set[str] = set()
    if isinstance(e, Unary):
        deps |= _current_deps(e.operand)
    elif isinstance(e, (Binary, Arrow)):
        deps |= _current_deps(e.left) | _current_deps(e.right)
    elif isinstance(e, Ite):
        deps |= (_current_deps(e.cond) | _current_deps(e.then)
                 | _current_deps(e.orelse))
    elif isinstance(e, Call):
        for a in e.args:
            deps |= _current_deps(a)
    return deps


def _assign_sites(decl: NodeDecl) -> tuple[int, int, list[Call]]:
    n_pre = 0
    n_arrow = 0
    calls: list[Call] = []
    exprs = [eq.rhs for eq in decl.equations] + list(decl.assertions)
    for root in exprs:
        for sub in walk(root):
            if isinstance(sub, Pre):
                sub.site = n_pre
                n_pre += 1
            elif isinstance(sub, Arrow):
                sub.site = n_arrow
                n_arrow += 1
            elif isinstance(sub, Call) and not sub.is_extern:
                sub.site = len(calls)
                calls.append(sub)
    return n_pre, n_arrow, calls


def _assign_sites_expr(e: Expr) -> None:
    n_pre = 0
    n_arrow = 0
    n_call = 0
    for sub in walk(e):
        if isinstance(sub, Pre):
            sub.site = n_pre
            n_pre += 1
        elif isinstance(sub, Arrow):
            sub.site = n_arrow
            n_arrow += 1
        elif isinstance(sub, Call) and not sub.is_extern:
            sub.site = n_call
            n_call += 1
