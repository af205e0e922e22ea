"""Client side of the solver interface: a line-oriented SMT-LIB2
conversation with an external process. The process is z3 when one is on
PATH, any command named by ``SOLVER_CMD`` or configuration, or the
bundled solver as the fallback."""

from __future__ import annotations

import os
import shlex
import shutil
import subprocess
import sys
from fractions import Fraction
from typing import Optional, Union

from .sexpr import SExpr, balanced, format_atom, parse_all

Value = Union[bool, int, Fraction]


class SolverFailure(Exception):
    """The solver process died, replied with an error, or spoke
    something unparseable."""


def resolve_solver_command(explicit: Optional[str] = None) -> list[str]:
    """Pick the solver command line: explicit setting, then the
    SOLVER_CMD environment variable, then z3 on PATH, then the bundled
    solver."""
    if explicit:
        return shlex.split(explicit)
    env = os.environ.get("SOLVER_CMD")
    if env:
        return shlex.split(env)
    z3 = shutil.which("z3")
    if z3:
        return [z3, "-in"]
    return [sys.executable, "-m", "synkit.smt.bundled"]


def parse_value(sx: SExpr) -> Value:
    """Value term from a get-value reply."""
    if isinstance(sx, str):
        if sx == "true":
            return True
        if sx == "false":
            return False
        if "." in sx:
            return Fraction(sx)
        return int(sx)
    if len(sx) == 2 and sx[0] == "-":
        v = parse_value(sx[1])
        return -v
    if len(sx) == 3 and sx[0] == "/":
        num = parse_value(sx[1])
        den = parse_value(sx[2])
        return Fraction(num) / Fraction(den)
    raise SolverFailure(f"unrecognized value term: {sx!r}")


class SmtSession:
    """One running solver process and the conversation with it."""

    def __init__(self, command: Optional[list[str]] = None):
        self.command = list(command) if command else resolve_solver_command()
        try:
            self.proc = subprocess.Popen(
                self.command, stdin=subprocess.PIPE,
                stdout=subprocess.PIPE, stderr=subprocess.DEVNULL,
                text=True)
        except OSError as e:
            raise SolverFailure(
                f"cannot start solver {self.command!r}: {e}") from e

    # plumbing

    def send(self, line: str) -> None:
        if self.proc.stdin is None or self.proc.poll() is not None:
            raise SolverFailure("solver process is gone")
        try:
            self.proc.stdin.write(line + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            raise SolverFailure(f"solver pipe broke: {e}") from e

    def _read_reply(self) -> str:
        out = self.proc.stdout
        if out is None:
            raise SolverFailure("solver has no stdout")
        buf = ""
        while True:
            line = out.readline()
            if not line:
                raise SolverFailure(
                    "solver closed its output"
                    + (f" (exit {self.proc.poll()})"
                       if self.proc.poll() is not None else ""))
            buf += line
            if buf.strip() and balanced(buf):
                reply = buf.strip()
                if reply.startswith("(error"):
                    raise SolverFailure(f"solver error: {reply}")
                return reply

    # commands

    def set_logic(self, logic: str) -> None:
        self.send(f"(set-logic {logic})")

    def declare_const(self, name: str, sort: str) -> None:
        self.send(f"(declare-const {format_atom(name)} {sort})")

    def declare_fun(self, name: str, param_sorts: list[str],
                    ret: str) -> None:
        params = " ".join(param_sorts)
        self.send(f"(declare-fun {format_atom(name)} ({params}) {ret})")

    def assert_text(self, formula: str) -> None:
        self.send(f"(assert {formula})")

    def push(self) -> None:
        self.send("(push 1)")

    def pop(self) -> None:
        self.send("(pop 1)")

    def check_sat(self) -> str:
        self.send("(check-sat)")
        reply = self._read_reply()
        if reply not in ("sat", "unsat", "unknown"):
            raise SolverFailure(f"unexpected check-sat reply: {reply}")
        return reply

    def get_values(self, names: list[str]) -> dict[str, Value]:
        if not names:
            return {}
        listing = " ".join(format_atom(n) for n in names)
        self.send(f"(get-value ({listing}))")
        reply = self._read_reply()
        parsed = parse_all(reply)
        if len(parsed) != 1 or not isinstance(parsed[0], list):
            raise SolverFailure(f"unexpected get-value reply: {reply}")
        out: dict[str, Value] = {}
        for pair in parsed[0]:
            if not (isinstance(pair, list) and len(pair) == 2
                    and isinstance(pair[0], str)):
                raise SolverFailure(f"unexpected get-value pair: {pair!r}")
            out[pair[0]] = parse_value(pair[1])
        return out

    def close(self) -> None:
        if self.proc.poll() is None:
            try:
                self.send("(exit)")
            except SolverFailure:
                pass
            try:
                self.proc.wait(timeout=2)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()
        if self.proc.stdin:
            self.proc.stdin.close()
        if self.proc.stdout:
            self.proc.stdout.close()

    def __enter__(self) -> "SmtSession":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
