"""SMT-LIB2 read-eval-print loop over stdin/stdout.

Run as `synkit-smt` or `python -m synkit.smt.bundled`. Understands the
command subset the verification engine emits: declarations, assert,
check-sat, get-value, get-model, push/pop, reset, echo, exit. Replies
with `(error "...")` on bad input and keeps going.
"""

from __future__ import annotations

import sys
from fractions import Fraction
from typing import Optional

from .sexpr import (SExpr, SExprError, balanced, format_atom, format_sexpr,
                    parse_all)
from .solver import BOOL, INT, REAL, SmtError, Solver, sort_of, term_of

_SORTS = {"Bool", "Int", "Real"}


def format_value(v, sort: str) -> str:
    if sort == BOOL:
        return "true" if v else "false"
    v = Fraction(v)
    if sort == INT:
        return str(v) if v >= 0 else f"(- {-v})"
    mag = f"{abs(v.numerator)}.0" if v.denominator == 1 else \
        f"(/ {abs(v.numerator)}.0 {v.denominator}.0)"
    return mag if v >= 0 else f"(- {mag})"


class Session:
    def __init__(self, out):
        self.out = out
        self.reset()

    def reset(self):
        self.decls: dict[str, tuple] = {}
        self.frames: list[list] = [[]]
        self.solver: Optional[Solver] = None

    def reply(self, text: str) -> None:
        self.out.write(text + "\n")
        self.out.flush()

    def error(self, msg: str) -> None:
        self.reply(f'(error "{msg}")')

    def run(self, sx: SExpr) -> bool:
        """Execute one command. Returns False on exit."""
        if not isinstance(sx, list) or not sx or not isinstance(sx[0], str):
            self.error("expected a command")
            return True
        cmd, args = sx[0], sx[1:]
        try:
            return self._dispatch(cmd, args)
        except SmtError as e:
            self.error(str(e))
        except (IndexError, TypeError, ValueError):
            self.error(f"malformed {cmd}")
        return True

    def _dispatch(self, cmd: str, args: list) -> bool:
        if cmd in ("set-logic", "set-option", "set-info"):
            return True
        if cmd == "declare-const":
            self._declare(args[0], [], args[1])
            return True
        if cmd == "declare-fun":
            self._declare(args[0], args[1], args[2])
            return True
        if cmd == "assert":
            t = term_of(args[0], self.decls)
            if sort_of(t) != BOOL:
                raise SmtError("assert needs a boolean term")
            self.frames[-1].append(t)
            return True
        if cmd == "check-sat":
            terms = [t for frame in self.frames for t in frame]
            self.solver = Solver(terms)
            self.reply(self.solver.check())
            return True
        if cmd == "get-value":
            self._get_value(args[0])
            return True
        if cmd == "get-model":
            self._get_model()
            return True
        if cmd == "push":
            for _ in range(int(args[0]) if args else 1):
                self.frames.append([])
            return True
        if cmd == "pop":
            n = int(args[0]) if args else 1
            if n >= len(self.frames):
                raise SmtError("pop below the bottom frame")
            del self.frames[len(self.frames) - n:]
            return True
        if cmd == "reset":
            self.reset()
            return True
        if cmd == "echo":
            arg = args[0]
            if isinstance(arg, str) and len(arg) >= 2 and arg[0] == '"':
                arg = arg[1:-1].replace('""', '"')
            self.reply(arg if isinstance(arg, str) else format_sexpr(arg))
            return True
        if cmd == "exit":
            return False
        raise SmtError(f"unsupported command {cmd}")

    def _declare(self, name, params, ret) -> None:
        if not isinstance(name, str) or isinstance(ret, list):
            raise SmtError("malformed declaration")
        if ret not in _SORTS or any(p not in _SORTS for p in params):
            raise SmtError(f"unsupported sort in declaration of {name}")
        new = ("const", ret) if not params else ("fun", tuple(params), ret)
        old = self.decls.get(name)
        if old is not None and old != new:
            raise SmtError(f"{name} already declared with another sort")
        self.decls[name] = new

    def _get_value(self, sxs) -> None:
        if self.solver is None or self.solver.result != "sat":
            raise SmtError("no model: last check-sat was not sat")
        if not isinstance(sxs, list):
            raise SmtError("get-value takes a term list")
        parts = []
        for sx in sxs:
            t = term_of(sx, self.decls)
            v = self.solver.model_value(t)
            parts.append(f"({format_sexpr(sx)} "
                         f"{format_value(v, sort_of(t))})")
        self.reply("(" + " ".join(parts) + ")")

    def _get_model(self) -> None:
        if self.solver is None or self.solver.result != "sat":
            raise SmtError("no model: last check-sat was not sat")
        lines = []
        for name, kind in sorted(self.decls.items()):
            if kind[0] != "const":
                continue
            t = ("var", name, kind[1])
            v = self.solver.model_value(t)
            lines.append(f"  (define-fun {format_atom(name)} () "
                         f"{kind[1]} {format_value(v, kind[1])})")
        self.reply("(\n" + "\n".join(lines) + "\n)")


def main(argv: Optional[list[str]] = None) -> int:
    session = Session(sys.stdout)
    buf = ""
    for line in sys.stdin:
        stripped = line.strip()
        if not buf and not stripped:
            continue
        buf += line
        if not balanced(buf):
            continue
        try:
            commands = parse_all(buf)
        except SExprError as e:
            session.error(str(e))
            buf = ""
            continue
        buf = ""
        for sx in commands:
            if not session.run(sx):
                return 0
    return 0


if __name__ == "__main__":
    sys.exit(main())
