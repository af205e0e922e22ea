"""Core of the bundled solver: sorted terms, CNF abstraction, and the
DPLL(T) glue between the SAT core and the simplex theory.

Supported fragment: quantifier-free boolean structure over linear
Int/Real arithmetic atoms, if-then-else, and uninterpreted functions
(eliminated up front by Ackermann expansion). Nonlinear terms are
rejected with an error.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional, Union

from . import sat
from .sexpr import SExpr
from .simplex import Conflict, Delta, Simplex

F = Fraction


class SmtError(Exception):
    pass


# terms: nested tuples, last slot is the sort ------------------------------

BOOL, INT, REAL = "Bool", "Int", "Real"
_NUM = (INT, REAL)

Term = tuple


def sort_of(t: Term) -> str:
    return t[-1]


def _num(v: Fraction, sort: str) -> Term:
    return ("num", v, sort)


_ARITH = {"+", "-", "*", "/"}
_CMP = {"<", "<=", ">", ">="}
_BOOLOP = {"and", "or", "=>", "xor", "not"}


def term_of(sx: SExpr, decls: dict, env: Optional[dict] = None) -> Term:
    env = env or {}
    if isinstance(sx, str):
        if sx in env:
            return env[sx]
        if sx == "true":
            return ("bool", True, BOOL)
        if sx == "false":
            return ("bool", False, BOOL)
        if sx in decls:
            kind = decls[sx]
            if kind[0] == "const":
                return ("var", sx, kind[1])
            raise SmtError(f"{sx} is a function, not a constant")
        if sx and (sx[0].isdigit()):
            if "." in sx:
                return _num(F(sx), REAL)
            return _num(F(int(sx)), INT)
        raise SmtError(f"unknown symbol {sx}")
    if not sx:
        raise SmtError("empty application")
    head = sx[0]
    if head == "!":  # attribute wrapper
        return term_of(sx[1], decls, env)
    if head == "let":
        new_env = dict(env)
        for binding in sx[1]:
            new_env[binding[0]] = term_of(binding[1], decls, env)
        return term_of(sx[2], decls, new_env)
    args = [term_of(a, decls, env) for a in sx[1:]]
    if isinstance(head, list):
        raise SmtError("indexed identifiers not supported")
    if head == "-" and len(args) == 1:
        _need_num(args, head)
        return ("-", tuple(args), sort_of(args[0]))
    if head in _ARITH:
        _need_num(args, head)
        if len(args) < 2:
            raise SmtError(f"{head} needs two arguments")
        sort = REAL if (head == "/" or any(sort_of(a) == REAL
                                           for a in args)) else INT
        return (head, tuple(args), sort)
    if head in _CMP:
        _need_num(args, head)
        if len(args) < 2:
            raise SmtError(f"{head} needs two arguments")
        if len(args) == 2:
            return (head, tuple(args), BOOL)
        pairs = [(head, (args[i], args[i + 1]), BOOL)
                 for i in range(len(args) - 1)]
        return ("and", tuple(pairs), BOOL)
    if head == "not":
        if len(args) != 1 or sort_of(args[0]) != BOOL:
            raise SmtError("not takes one boolean")
        return ("not", tuple(args), BOOL)
    if head in ("and", "or"):
        if any(sort_of(a) != BOOL for a in args):
            raise SmtError(f"{head} needs booleans")
        return (head, tuple(args), BOOL)
    if head == "=>":
        if len(args) < 2 or any(sort_of(a) != BOOL for a in args):
            raise SmtError("=> needs at least two booleans")
        out = args[-1]
        for a in reversed(args[:-1]):
            out = ("=>", (a, out), BOOL)
        return out
    if head == "xor":
        if len(args) != 2 or any(sort_of(a) != BOOL for a in args):
            raise SmtError("xor takes two booleans")
        return ("xor", tuple(args), BOOL)
    if head in ("=", "distinct"):
        if len(args) < 2:
            raise SmtError(f"{head} needs two arguments")
        sorts = {sort_of(a) for a in args}
        if sorts == {BOOL}:
            pass
        elif sorts <= set(_NUM):
            pass
        else:
            raise SmtError(f"{head} over mixed sorts")
        if head == "=":
            pairs = [("=", (args[i], args[i + 1]), BOOL)
                     for i in range(len(args) - 1)]
        else:
            pairs = [("not", (("=", (args[i], args[j]), BOOL),), BOOL)
                     for i in range(len(args))
                     for j in range(i + 1, len(args))]
        return pairs[0] if len(pairs) == 1 else ("and", tuple(pairs), BOOL)
    if head == "ite":
        if len(args) != 3 or sort_of(args[0]) != BOOL:
            raise SmtError("ite needs (Bool x x)")
        s1, s2 = sort_of(args[1]), sort_of(args[2])
        if s1 == s2:
            sort = s1
        elif {s1, s2} == {INT, REAL}:
            sort = REAL
        else:
            raise SmtError("ite branches disagree")
        return ("ite", tuple(args), sort)
    if head == "to_real":
        _need_num(args, head)
        return ("to_real", tuple(args), REAL)
    if head in decls and decls[head][0] == "fun":
        params, ret = decls[head][1], decls[head][2]
        if len(args) != len(params):
            raise SmtError(f"{head} arity mismatch")
        for a, p in zip(args, params):
            if sort_of(a) != p and not (sort_of(a) == INT and p == REAL):
                raise SmtError(f"{head} argument sort mismatch")
        return ("app", head, tuple(args), ret)
    raise SmtError(f"unsupported operator {head!r}")


def _need_num(args, op):
    for a in args:
        if sort_of(a) not in _NUM:
            raise SmtError(f"{op} needs numeric arguments")


def eval_const(t: Term) -> Optional[Fraction]:
    """Value of a ground numeric term, or None if it has variables."""
    tag = t[0]
    if tag == "num":
        return t[1]
    if tag == "-" and len(t[1]) == 1:
        v = eval_const(t[1][0])
        return None if v is None else -v
    if tag in _ARITH:
        vals = [eval_const(a) for a in t[1]]
        if any(v is None for v in vals):
            return None
        out = vals[0]
        for v in vals[1:]:
            if tag == "+":
                out = out + v
            elif tag == "-":
                out = out - v
            elif tag == "*":
                out = out * v
            else:
                if v == 0:
                    raise SmtError("division by zero in constant term")
                out = out / v
        return out
    if tag == "to_real":
        return eval_const(t[1][0])
    return None


# Ackermann expansion --------------------------------------------------------


def ackermannize(terms: list[Term]) -> tuple[list[Term], dict]:
    """Replace UF applications with fresh constants plus functional
    consistency constraints. Returns (new terms, instance table)."""
    instances: dict[tuple, Term] = {}
    per_fun: dict[str, list[tuple[tuple, Term]]] = {}
    counter = [0]

    def rewrite(t: Term) -> Term:
        tag = t[0]
        if tag in ("num", "bool", "var"):
            return t
        if tag == "app":
            args = tuple(rewrite(a) for a in t[2])
            key = (t[1], args)
            if key not in instances:
                counter[0] += 1
                fresh = ("var", f"{t[1]}!{counter[0]}", t[3])
                instances[key] = fresh
                per_fun.setdefault(t[1], []).append((args, fresh))
            return instances[key]
        if tag in ("not", "and", "or", "=>", "xor", "=", "ite",
                   "to_real", "-", "ite") or tag in _ARITH or tag in _CMP:
            return (tag, tuple(rewrite(a) for a in t[1]), t[-1])
        raise SmtError(f"unexpected term {tag}")

    out = [rewrite(t) for t in terms]
    for fname, insts in per_fun.items():
        for i in range(len(insts)):
            for j in range(i + 1, len(insts)):
                args_i, v_i = insts[i]
                args_j, v_j = insts[j]
                eqs = tuple(("=", (a, b), BOOL)
                            for a, b in zip(args_i, args_j))
                hyp = eqs[0] if len(eqs) == 1 else ("and", eqs, BOOL)
                out.append(("=>", (hyp, ("=", (v_i, v_j), BOOL)), BOOL))
    table = {}
    for (fname, args), var in instances.items():
        table.setdefault(fname, []).append((args, var))
    return out, table


# theory adapter --------------------------------------------------------------


class ArithTheory(sat.Theory):
    def __init__(self, simplex: Simplex, atom_of_var: dict,
                 int_vars: list[int]):
        self.simplex = simplex
        self.atom_of_var = atom_of_var  # sat var -> (svar, ub Delta, lb Delta)
        self.int_vars = int_vars
        self.stack: list[tuple[int, int]] = []  # (sat trail pos, mark)

    def assert_lit(self, lit: int, pos: int):
        info = self.atom_of_var.get(lit >> 1)
        if info is None:
            return None
        svar, ub, lb = info
        mark = self.simplex.mark()
        try:
            if lit & 1:  # negative literal: lower bound
                self.simplex.assert_bound(svar, True, lb, lit)
            else:
                self.simplex.assert_bound(svar, False, ub, lit)
        except Conflict as c:
            return [l for l in c.reasons if l is not None]
        self.stack.append((pos, mark))
        return None

    def shrink_to(self, pos: int) -> None:
        while self.stack and self.stack[-1][0] >= pos:
            _, mark = self.stack.pop()
            self.simplex.undo_to(mark)

    def check(self, final: bool):
        try:
            self.simplex.check()
        except Conflict as c:
            return [l for l in c.reasons if l is not None]
        if final and self.int_vars:
            return self._check_ints()
        return None

    # branch and bound over the integer-sorted simplex variables

    def _check_ints(self):
        budget = [400]
        res, expl = self._bb(budget)
        if res == "sat":
            return None
        if res == "unknown":
            return "unknown"
        expl = [l for l in expl if l is not None]
        return expl

    def _split_var(self) -> Optional[int]:
        for v in self.int_vars:
            b = self.simplex.beta[v]
            if b.d != 0 or b.a.denominator != 1:
                return v
        return None

    def _bb(self, budget: list[int]):
        try:
            self.simplex.check()
        except Conflict as c:
            return "unsat", set(c.reasons)
        v = self._split_var()
        if v is None:
            return "sat", None
        b = self.simplex.beta[v]
        if b.a.denominator != 1:
            f = b.a.__floor__()
        else:
            f = b.a - 1 if b.d < 0 else b.a
        results = []
        for is_lower, val in ((False, Delta(F(f))), (True, Delta(F(f + 1)))):
            if budget[0] <= 0:
                return "unknown", None
            budget[0] -= 1
            mark = self.simplex.mark()
            try:
                self.simplex.assert_bound(v, is_lower, val, None)
                r, e = self._bb(budget)
            except Conflict as c:
                r, e = "unsat", set(c.reasons)
            self.simplex.undo_to(mark)
            if r == "sat":
                return "sat", None
            if r == "unknown":
                return "unknown", None
            results.append(e)
        return "unsat", results[0] | results[1]


# solver ----------------------------------------------------------------------


class Solver:
    """One-shot solver for a list of asserted terms."""

    def __init__(self, terms: list[Term]):
        self.cdcl = sat.CDCL()
        self.simplex = Simplex()
        self.atom_of_var: dict[int, tuple] = {}
        self.int_vars: list[int] = []
        self._bool_lit: dict[Term, int] = {}
        self._num_var: dict[Term, int] = {}  # numeric var/ite -> simplex var
        self._num_sort: dict[int, str] = {}
        self._slack: dict[tuple, int] = {}
        self._atom_key: dict[tuple, int] = {}
        self._true = self.cdcl.new_var()
        self.cdcl.add_clause([self._true << 1])
        terms, self.fun_table = ackermannize(terms)
        self.terms = terms
        for t in terms:
            if sort_of(t) != BOOL:
                raise SmtError("assert needs a boolean term")
            self.cdcl.add_clause([self._lit(t)])
        self.result: Optional[str] = None
        self._num_model: Optional[list[Fraction]] = None

    # literal of a boolean term (Tseitin)

    def _lit(self, t: Term) -> int:
        hit = self._bool_lit.get(t)
        if hit is not None:
            return hit
        tag = t[0]
        if tag == "bool":
            lit = (self._true << 1) | (0 if t[1] else 1)
        elif tag == "var":
            lit = self.cdcl.new_var() << 1
        elif tag == "not":
            lit = sat.neg(self._lit(t[1][0]))
        elif tag in ("and", "or"):
            args = [self._lit(a) for a in t[1]]
            v = self.cdcl.new_var() << 1
            if tag == "and":
                big = [v] + [sat.neg(a) for a in args]
                for a in args:
                    self.cdcl.add_clause([sat.neg(v), a])
                self.cdcl.add_clause(big)
            else:
                big = [sat.neg(v)] + args
                for a in args:
                    self.cdcl.add_clause([v, sat.neg(a)])
                self.cdcl.add_clause(big)
            lit = v
        elif tag == "=>":
            a, b = (self._lit(x) for x in t[1])
            v = self.cdcl.new_var() << 1
            self.cdcl.add_clause([sat.neg(v), sat.neg(a), b])
            self.cdcl.add_clause([v, a])
            self.cdcl.add_clause([v, sat.neg(b)])
            lit = v
        elif tag == "xor":
            a, b = (self._lit(x) for x in t[1])
            lit = sat.neg(self._iff(a, b))
        elif tag == "=":
            x, y = t[1]
            if sort_of(x) == BOOL:
                lit = self._iff(self._lit(x), self._lit(y))
            else:
                le = self._cmp_lit("<=", x, y)
                ge = self._cmp_lit("<=", y, x)
                v = self.cdcl.new_var() << 1
                self.cdcl.add_clause([sat.neg(v), le])
                self.cdcl.add_clause([sat.neg(v), ge])
                self.cdcl.add_clause([v, sat.neg(le), sat.neg(ge)])
                lit = v
        elif tag == "ite":  # boolean ite
            c, a, b = (self._lit(x) for x in t[1])
            v = self.cdcl.new_var() << 1
            self.cdcl.add_clause([sat.neg(v), sat.neg(c), a])
            self.cdcl.add_clause([sat.neg(v), c, b])
            self.cdcl.add_clause([v, sat.neg(c), sat.neg(a)])
            self.cdcl.add_clause([v, c, sat.neg(b)])
            lit = v
        elif tag in _CMP:
            lit = self._cmp_lit(tag, t[1][0], t[1][1])
        else:
            raise SmtError(f"not a boolean term: {tag}")
        self._bool_lit[t] = lit
        return lit

    def _iff(self, a: int, b: int) -> int:
        v = self.cdcl.new_var() << 1
        self.cdcl.add_clause([sat.neg(v), sat.neg(a), b])
        self.cdcl.add_clause([sat.neg(v), a, sat.neg(b)])
        self.cdcl.add_clause([v, a, b])
        self.cdcl.add_clause([v, sat.neg(a), sat.neg(b)])
        return v

    # numeric side ----------------------------------------------------------

    def _svar(self, t: Term) -> int:
        """Simplex variable for a numeric var or ite term."""
        hit = self._num_var.get(t)
        if hit is not None:
            return hit
        v = self.simplex.new_var()
        self._num_var[t] = v
        self._num_sort[v] = sort_of(t)
        if sort_of(t) == INT:
            self.int_vars.append(v)
        if t[0] == "ite":
            c = self._lit(t[1][0])
            for guard, branch in ((c, t[1][1]), (sat.neg(c), t[1][2])):
                combo, const = self._linear(branch)
                combo[v] = combo.get(v, F(0)) - 1
                combo = {k: x for k, x in combo.items() if x != 0}
                le = self._form_atom(dict(combo), "<=", -const)
                ge = sat.neg(self._form_atom(dict(combo), "<", -const))
                self.cdcl.add_clause([sat.neg(guard), le])
                self.cdcl.add_clause([sat.neg(guard), ge])
        return v

    def _linear(self, t: Term) -> tuple[dict[int, Fraction], Fraction]:
        """t as (combo over simplex vars, constant)."""
        tag = t[0]
        if tag == "num":
            return {}, t[1]
        if tag == "var" or tag == "ite":
            return {self._svar(t): F(1)}, F(0)
        if tag == "to_real":
            return self._linear(t[1][0])
        if tag == "-" and len(t[1]) == 1:
            combo, c = self._linear(t[1][0])
            return {k: -v for k, v in combo.items()}, -c
        if tag == "+" or tag == "-":
            combo, const = self._linear(t[1][0])
            combo = dict(combo)
            for arg in t[1][1:]:
                c2, k2 = self._linear(arg)
                s = 1 if tag == "+" else -1
                for k, v in c2.items():
                    combo[k] = combo.get(k, F(0)) + s * v
                const += s * k2
            return combo, const
        if tag == "*":
            consts = [eval_const(a) for a in t[1]]
            unknowns = [a for a, c in zip(t[1], consts) if c is None]
            if len(unknowns) > 1:
                raise SmtError("nonlinear product")
            scale = F(1)
            for c in consts:
                if c is not None:
                    scale *= c
            if not unknowns:
                return {}, scale
            combo, const = self._linear(unknowns[0])
            return {k: v * scale for k, v in combo.items()}, const * scale
        if tag == "/":
            divisors = [eval_const(a) for a in t[1][1:]]
            if any(d is None for d in divisors):
                raise SmtError("nonlinear division")
            if any(d == 0 for d in divisors):
                raise SmtError("division by zero")
            combo, const = self._linear(t[1][0])
            scale = F(1)
            for d in divisors:
                scale /= d
            return {k: v * scale for k, v in combo.items()}, const * scale
        raise SmtError(f"not a numeric term: {tag}")

    def _cmp_lit(self, op: str, x: Term, y: Term) -> int:
        cx, kx = self._linear(x)
        cy, ky = self._linear(y)
        combo = dict(cx)
        for k, v in cy.items():
            combo[k] = combo.get(k, F(0)) - v
        combo = {k: v for k, v in combo.items() if v != 0}
        rhs = ky - kx
        if op == ">":
            return sat.neg(self._form_atom(combo, "<=", rhs))
        if op == ">=":
            return sat.neg(self._form_atom(combo, "<", rhs))
        return self._form_atom(combo, op, rhs)

    def _form_atom(self, combo: dict[int, Fraction], op: str,
                   rhs: Fraction) -> int:
        """Literal for (combo <= rhs) or (combo < rhs)."""
        if not combo:
            holds = rhs >= 0 if op == "<=" else rhs > 0
            return (self._true << 1) | (0 if holds else 1)
        first = min(combo)
        if combo[first] < 0:
            flipped = {k: -v for k, v in combo.items()}
            inner = self._form_atom(flipped, "<" if op == "<=" else "<=",
                                    -rhs)
            return sat.neg(inner)
        # normalize to integer coefficients, gcd 1
        denom_lcm = 1
        for v in combo.values():
            denom_lcm = denom_lcm * v.denominator \
                // _gcd(denom_lcm, v.denominator)
        scaled = {k: v * denom_lcm for k, v in combo.items()}
        g = 0
        for v in scaled.values():
            g = _gcd(g, abs(v.numerator))
        scaled = {k: F(v.numerator // g) for k, v in scaled.items()}
        rhs = rhs * denom_lcm / g
        if len(scaled) == 1:
            ((var, coeff),) = scaled.items()
            bound = rhs / coeff
            return self._var_atom(var, op, bound)
        key = tuple(sorted(scaled.items()))
        svar = self._slack.get(key)
        if svar is None:
            svar = self.simplex.add_row(dict(scaled))
            self._slack[key] = svar
            self._num_sort[svar] = INT if all(
                self._num_sort[v] == INT for v in scaled) else REAL
            if self._num_sort[svar] == INT:
                self.int_vars.append(svar)
        return self._var_atom(svar, op, rhs)

    def _var_atom(self, svar: int, op: str, bound: Fraction) -> int:
        if self._num_sort.get(svar) == INT:
            if op == "<=":
                b = bound.__floor__()
            else:  # strict
                b = bound.__ceil__() - 1
            ub = Delta(F(b))
            lb = Delta(F(b + 1))
        else:
            ub = Delta(bound, F(0) if op == "<=" else F(-1))
            lb = Delta(bound, F(1) if op == "<=" else F(0))
        key = (svar, ub.a, ub.d)
        hit = self._atom_key.get(key)
        if hit is not None:
            return hit << 1
        v = self.cdcl.new_var()
        self._atom_key[key] = v
        self.atom_of_var[v] = (svar, ub, lb)
        return v << 1

    # solving and models ------------------------------------------------------

    def check(self) -> str:
        theory = ArithTheory(self.simplex, self.atom_of_var, self.int_vars)
        self.result = self.cdcl.solve(theory)
        if self.result == "sat":
            self._num_model = self.simplex.model()
        return self.result

    def model_value(self, t: Term) -> Union[bool, Fraction]:
        if self.result != "sat":
            raise SmtError("no model available")
        return self._eval(t)

    def _eval(self, t: Term):
        tag = t[0]
        if tag == "bool":
            return t[1]
        if tag == "num":
            return t[1]
        if tag == "var":
            if sort_of(t) == BOOL:
                lit = self._bool_lit.get(t)
                if lit is None:
                    return False
                val = self.cdcl.value(lit)
                return val == 1
            sv = self._num_var.get(t)
            if sv is None:
                return F(0)
            return self._num_model[sv]
        if tag == "app":
            args = tuple(self._eval(a) for a in t[2])
            for inst_args, var in self.fun_table.get(t[1], []):
                if tuple(self._eval(a) for a in inst_args) == args:
                    return self._eval(var)
            return False if sort_of(t) == BOOL else F(0)
        if tag == "not":
            return not self._eval(t[1][0])
        if tag == "and":
            return all(self._eval(a) for a in t[1])
        if tag == "or":
            return any(self._eval(a) for a in t[1])
        if tag == "=>":
            return (not self._eval(t[1][0])) or self._eval(t[1][1])
        if tag == "xor":
            return bool(self._eval(t[1][0])) != bool(self._eval(t[1][1]))
        if tag == "=":
            return self._eval(t[1][0]) == self._eval(t[1][1])
        if tag == "ite":
            return self._eval(t[1][1]) if self._eval(t[1][0]) \
                else self._eval(t[1][2])
        if tag == "to_real":
            return self._eval(t[1][0])
        if tag == "-" and len(t[1]) == 1:
            return -self._eval(t[1][0])
        if tag in _ARITH:
            vals = [self._eval(a) for a in t[1]]
            out = vals[0]
            for v in vals[1:]:
                if tag == "+":
                    out += v
                elif tag == "-":
                    out -= v
                elif tag == "*":
                    out *= v
                else:
                    out = F(out) / F(v)
            return out
        if tag in _CMP:
            a, b = self._eval(t[1][0]), self._eval(t[1][1])
            return {"<": a < b, "<=": a <= b,
                    ">": a > b, ">=": a >= b}[tag]
        raise SmtError(f"cannot evaluate {tag}")


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a if a else 1
