"""Property verification over transition systems.

Two proof paths share one result vocabulary: bounded model checking plus
k-induction through an SMT solver subprocess, and an exhaustive
breadth-first search for systems whose inputs and state are all boolean.
Optional template invariants (mined from simulation, proved by Houdini-
style iterative weakening) strengthen the induction step.
"""

from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

from ..interp import Trace, Value
from ..lang import (Binary, Expr, IntLit, LangError, RealLit, Type, Var,
                    pretty_expr)
from ..smt import SmtSession, SolverFailure, resolve_solver_command
from ..tsys import INIT_FLAG, TransitionSystem
from .codegen import CompiledSystem, compile_system, eval_formula
from .encode import Unroller, logic_for

__all__ = [
    "EngineConfig", "Valid", "Falsified", "Unknown", "UnknownReason",
    "VerifyResult", "InvariantCandidate", "bmc", "kinduction",
    "generate_invariants", "verify_all", "simulate_system",
    "make_replayer", "result_to_json",
]


@dataclass
class EngineConfig:
    k_max: int = 20
    timeout: float = 300.0
    solver_command: Optional[str] = None
    use_invariants: bool = False
    parallel_properties: bool = False
    oracle_mode: bool = False
    incremental: bool = False  # one solver session with push/pop
    unique_states: bool = False  # path compression in the step check

    def __post_init__(self):
        if self.k_max < 1:
            raise ValueError("k_max must be at least 1")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


class UnknownReason(Enum):
    KMAX_REACHED = "KMaxReached"
    TIMEOUT = "Timeout"
    SOLVER_ERROR = "SolverError"
    NONLINEAR_SPURIOUS = "NonlinearSpurious"


@dataclass(frozen=True)
class Valid:
    k: int
    invariants_used: tuple[str, ...] = ()


@dataclass(frozen=True)
class Falsified:
    trace: Trace
    step: int


@dataclass(frozen=True)
class Unknown:
    reason: UnknownReason
    detail: str = ""


VerifyResult = Union[Valid, Falsified, Unknown]

# a replayer validates a candidate counterexample against concrete
# semantics: replay(trace, step) is True when the violation is real
Replayer = Callable[[Trace, int], bool]


class _Deadline:
    def __init__(self, seconds: float):
        self.end = time.monotonic() + seconds

    @property
    def expired(self) -> bool:
        return time.monotonic() >= self.end


def _new_session(cfg: EngineConfig, ts: TransitionSystem) -> SmtSession:
    s = SmtSession(resolve_solver_command(cfg.solver_command))
    s.set_logic(logic_for(ts))
    return s


# bounded search --------------------------------------------------------------

class _BaseChecker:
    """Base-case queries at increasing depths, optionally sharing one
    incremental solver session."""

    def __init__(self, un: Unroller, prop: Expr, invs: Sequence[Expr],
                 cfg: EngineConfig):
        self.un = un
        self.prop = prop
        self.invs = list(invs)
        self.cfg = cfg
        self.session: Optional[SmtSession] = None
        self.depth = -1  # last instant already asserted incrementally

    def close(self) -> None:
        if self.session is not None:
            self.session.close()
            self.session = None

    def _extend(self, s: SmtSession, t: int) -> None:
        self.un.declare_step(s, t)
        if t == 0:
            self.un.assert_init(s)
        else:
            self.un.assert_trans(s, t - 1)
        self.un.assert_instant(s, t)
        for inv in self.invs:
            s.assert_text(self.un.formula(inv, t))

    def check_depth(self, n: int) -> Union[str, Trace]:
        """'unsat', 'unknown', or a violating input trace of length n+1."""
        if self.cfg.incremental:
            if self.session is None:
                self.session = _new_session(self.cfg, self.un.ts)
                self.un.declare_externs(self.session)
            s = self.session
            while self.depth < n:
                self.depth += 1
                self._extend(s, self.depth)
            s.push()
            try:
                s.assert_text(f"(not {self.un.formula(self.prop, n)})")
                verdict = s.check_sat()
                if verdict == "sat":
                    return self.un.decode_inputs(s, n)
                return verdict
            finally:
                s.pop()
        with _new_session(self.cfg, self.un.ts) as s:
            self.un.declare_externs(s)
            for t in range(n + 1):
                self._extend(s, t)
            s.assert_text(f"(not {self.un.formula(self.prop, n)})")
            verdict = s.check_sat()
            if verdict == "sat":
                return self.un.decode_inputs(s, n)
            return verdict


def _step_check(un: Unroller, prop: Expr, invs: Sequence[Expr], k: int,
                cfg: EngineConfig) -> str:
    """Induction step at depth k: k property-satisfying instants and one
    transition force the property at instant k. Returns the verdict of
    the satisfiability query (unsat means the step holds)."""
    with _new_session(cfg, un.ts) as s:
        un.declare_externs(s)
        for t in range(k + 1):
            un.declare_step(s, t)
            un.assert_instant(s, t)
            if t > 0:
                un.assert_trans(s, t - 1)
            if t < k:
                s.assert_text(un.formula(prop, t))
            for inv in invs:
                s.assert_text(un.formula(inv, t))
        if cfg.unique_states:
            un.assert_distinct_states(s, k)
        s.assert_text(f"(not {un.formula(prop, k)})")
        return s.check_sat()


def _screen_cex(ts: TransitionSystem, trace: Trace, step: int,
                replay: Optional[Replayer]) -> VerifyResult:
    """Counterexamples that lean on uninterpreted nonlinear symbols may
    not survive concrete replay; validate when we can."""
    if ts.extern_symbols and replay is not None and not replay(trace, step):
        return Unknown(UnknownReason.NONLINEAR_SPURIOUS,
                       f"counterexample at step {step} does not replay; "
                       "consider adding refinement assertions for the "
                       "nonlinear terms")
    return Falsified(trace, step)


def bmc(ts: TransitionSystem, prop_id: str, k: int, cfg: EngineConfig,
        replay: Optional[Replayer] = None) -> VerifyResult:
    """Search for an assumption-satisfying path of length <= k ending in
    a property violation. Falsified carries the shortest such path;
    Unknown(KMaxReached) means clean up to k."""
    prop = ts.property_formula(prop_id)
    if cfg.oracle_mode:
        return _oracle_search(ts, prop_id, max_depth=k)
    deadline = _Deadline(cfg.timeout)
    checker = _BaseChecker(Unroller(ts), prop, [], cfg)
    try:
        for n in range(k + 1):
            if deadline.expired:
                return Unknown(UnknownReason.TIMEOUT,
                               f"timed out before depth {n}")
            outcome = checker.check_depth(n)
            if isinstance(outcome, Trace):
                return _screen_cex(ts, outcome, n, replay)
            if outcome == "unknown":
                return Unknown(UnknownReason.SOLVER_ERROR,
                               f"solver answered unknown at depth {n}")
    except SolverFailure as e:
        return Unknown(UnknownReason.SOLVER_ERROR, str(e))
    finally:
        checker.close()
    return Unknown(UnknownReason.KMAX_REACHED, f"no violation within {k}")


def kinduction(ts: TransitionSystem, prop_id: str, cfg: EngineConfig,
               replay: Optional[Replayer] = None,
               invariants: Optional[Sequence[Expr]] = None) -> VerifyResult:
    """k-induction sweep for k = 1..k_max with base cases checked
    incrementally along the way."""
    prop = ts.property_formula(prop_id)
    if cfg.oracle_mode:
        return _oracle_search(ts, prop_id, max_depth=None)
    deadline = _Deadline(cfg.timeout)
    invs: list[Expr] = list(invariants) if invariants else []
    if cfg.use_invariants and invariants is None:
        invs = _mine_invariants_for(ts, cfg, deadline)
    inv_texts = tuple(pretty_expr(e) for e in invs)
    checker = _BaseChecker(Unroller(ts), prop, invs, cfg)
    next_base = 0
    try:
        for k in range(1, cfg.k_max + 1):
            for n in range(next_base, k + 1):  # base: clean up to depth k
                if deadline.expired:
                    return Unknown(UnknownReason.TIMEOUT,
                                   f"timed out in base at depth {n}")
                outcome = checker.check_depth(n)
                if isinstance(outcome, Trace):
                    return _screen_cex(ts, outcome, n, replay)
                if outcome == "unknown":
                    return Unknown(UnknownReason.SOLVER_ERROR,
                                   f"solver answered unknown at depth {n}")
            next_base = k + 1
            if deadline.expired:
                return Unknown(UnknownReason.TIMEOUT,
                               f"timed out before step check k={k}")
            step = _step_check(Unroller(ts), prop, invs, k, cfg)
            if step == "unsat":
                return Valid(k, inv_texts)
    except SolverFailure as e:
        return Unknown(UnknownReason.SOLVER_ERROR, str(e))
    finally:
        checker.close()
    return Unknown(UnknownReason.KMAX_REACHED,
                   f"not inductive for any k <= {cfg.k_max}")


# exhaustive search for boolean systems ----------------------------------------

_ORACLE_STATE_BITS = 14
_ORACLE_INPUT_BITS = 10


def _oracle_system(ts: TransitionSystem) -> CompiledSystem:
    cs = compile_system(ts)
    if not (cs.bool_inputs_only() and cs.bool_state_only()):
        raise ValueError(
            "exhaustive search needs boolean inputs and state")
    if len(cs.state_names) > _ORACLE_STATE_BITS:
        raise ValueError(f"too many state bits ({len(cs.state_names)})")
    if len(cs.input_names) > _ORACLE_INPUT_BITS:
        raise ValueError(f"too many input bits ({len(cs.input_names)})")
    return cs


def _oracle_search(ts: TransitionSystem, prop_id: str,
                   max_depth: Optional[int]) -> VerifyResult:
    """Breadth-first reachability up to max_depth (None: to fixpoint).
    Shortest violations are found level by level, so the verdicts agree
    with bmc exactly."""
    cs = _oracle_system(ts)
    p = cs.prop_ids.index(prop_id)
    inputs = list(itertools.product((False, True),
                                    repeat=len(cs.input_names)))
    level = [s for s in itertools.product((False, True),
                                          repeat=len(cs.state_names))
             if cs.init_ok(s)]
    level.sort(key=lambda s: s != cs.default_state)  # defaults first
    visited = set(level)
    parent: dict[tuple, tuple] = {}
    depth = 0
    while level:
        if max_depth is not None and depth > max_depth:
            break
        nxt = []
        for state in level:
            for inp in inputs:
                s2, asm, props, _ = cs.step(state, inp)
                if not asm:
                    continue
                if not props[p]:
                    return Falsified(
                        _oracle_trace(cs, parent, state, inp, depth), depth)
                if s2 not in visited:
                    visited.add(s2)
                    parent[s2] = (state, inp)
                    nxt.append(s2)
        nxt.sort()
        level = nxt
        depth += 1
    if max_depth is not None:
        return Unknown(UnknownReason.KMAX_REACHED,
                       f"no violation within {max_depth}")
    return Valid(max(depth - 1, 1), ())


def _oracle_trace(cs: CompiledSystem, parent: dict, state: tuple,
                  last_input: tuple, depth: int) -> Trace:
    steps = [last_input]
    at = state
    while at in parent:
        at, inp = parent[at]
        steps.append(inp)
    steps.reverse()
    assert len(steps) == depth + 1
    return Trace({name: [step[i] for step in steps]
                  for i, name in enumerate(cs.input_names)})


# simulation and template invariants -------------------------------------------

def simulate_system(ts: TransitionSystem, steps: int, seed: int,
                    externs: Optional[dict[str, Callable]] = None,
                    retries: int = 40) -> list[dict[str, Value]]:
    """Random run of the compiled system from the default initial state.
    Inputs are resampled a bounded number of times to satisfy the
    assumptions; rows map every system variable to its value."""
    cs = compile_system(ts, externs)
    rng = random.Random(seed)
    types = ts.var_types()

    def sample(name: str) -> Value:
        ty = types[name]
        if ty is Type.BOOL:
            return rng.random() < 0.5
        if ty is Type.INT:
            return rng.randint(-8, 8)
        return Fraction(rng.randint(-800, 800), rng.choice((1, 2, 4, 100)))

    rows: list[dict[str, Value]] = []
    state = cs.default_state
    for _ in range(steps):
        for _ in range(retries):
            inp = tuple(sample(n) for n in cs.input_names)
            s2, asm, _, defs = cs.step(state, inp)
            if asm:
                break
        row: dict[str, Value] = {}
        row.update(zip(cs.state_names, state))
        row.update(zip(cs.input_names, inp))
        row.update(zip(cs.defined_names, defs))
        rows.append(row)
        state = s2
    return rows


@dataclass
class InvariantCandidate:
    shape: str  # BoolImplication | BoolEquality | IntervalBound
    expr: Expr
    status: str = "candidate"

    def text(self) -> str:
        return pretty_expr(self.expr)


_PAIR_SHAPE_CAP = 24


def _mine_candidates(ts: TransitionSystem,
                     rows: list[dict[str, Value]]) -> list[InvariantCandidate]:
    if not rows:
        return []
    types = ts.var_types()
    internal = [n for n, _ in ts.state_vars + ts.defined_vars]
    bools = [n for n in internal if types[n] is Type.BOOL]
    nums = [n for n in internal if types[n] is not Type.BOOL]
    out: list[InvariantCandidate] = []

    def bvar(n: str) -> Var:
        return Var(n, ty=Type.BOOL)

    if len(bools) <= _PAIR_SHAPE_CAP:
        for i, a in enumerate(bools):
            for b in bools[i + 1:]:
                if all(row[a] == row[b] for row in rows):
                    out.append(InvariantCandidate(
                        "BoolEquality",
                        Binary("=", bvar(a), bvar(b), ty=Type.BOOL),
                        "simulated-ok"))
                    continue
                if all(row[b] or not row[a] for row in rows):
                    out.append(InvariantCandidate(
                        "BoolImplication",
                        Binary("=>", bvar(a), bvar(b), ty=Type.BOOL),
                        "simulated-ok"))
                if all(row[a] or not row[b] for row in rows):
                    out.append(InvariantCandidate(
                        "BoolImplication",
                        Binary("=>", bvar(b), bvar(a), ty=Type.BOOL),
                        "simulated-ok"))
    for x in nums:
        lo = min(row[x] for row in rows)
        hi = max(row[x] for row in rows)
        ty = types[x]
        lit = (lambda v: IntLit(int(v), ty=Type.INT)) if ty is Type.INT \
            else (lambda v: RealLit(Fraction(v), ty=Type.REAL))
        xv = Var(x, ty=ty)
        out.append(InvariantCandidate(
            "IntervalBound",
            Binary("and",
                   Binary("<=", lit(lo), xv, ty=Type.BOOL),
                   Binary("<=", xv, lit(hi), ty=Type.BOOL),
                   ty=Type.BOOL),
            "simulated-ok"))
    return out


def _model_env(un: Unroller, s: SmtSession, t: int) -> dict[str, Value]:
    raw = s.get_values([f"{n}@{t}" for n in un.all_vars])
    env: dict[str, Value] = {}
    for n in un.all_vars:
        v = raw[f"{n}@{t}"]
        ty = un.types[n]
        env[n] = bool(v) if ty is Type.BOOL else (
            int(v) if ty is Type.INT else Fraction(v))
    return env


_HOUDINI_K = 2


def generate_invariants(ts: TransitionSystem,
                        sim_rows: list[dict[str, Value]],
                        cfg: EngineConfig,
                        deadline: Optional[_Deadline] = None) -> list[Expr]:
    """Template candidates that survive the simulation rows, then a
    joint 2-induction proof with iterative removal. Solver trouble
    degrades to no invariants."""
    if not sim_rows:
        raise ValueError("need at least one simulation row")
    alive = _mine_candidates(ts, sim_rows)
    if not alive:
        return []
    if deadline is None:
        deadline = _Deadline(cfg.timeout)
    un = Unroller(ts)
    try:
        alive = _houdini(un, alive, cfg, deadline)
    except (SolverFailure, ValueError):
        return []
    for c in alive:
        c.status = "proved"
    return [c.expr for c in alive]


def _houdini(un: Unroller, alive: list[InvariantCandidate],
             cfg: EngineConfig,
             deadline: _Deadline) -> list[InvariantCandidate]:
    k = _HOUDINI_K

    def drop_violated(s: SmtSession, t: int) -> bool:
        env = _model_env(un, s, t)
        dropped = False
        for c in alive[:]:
            if not eval_formula(c.expr, env):
                c.status = "rejected"
                alive.remove(c)
                dropped = True
        if not dropped:
            raise ValueError("model violates no candidate")
        return True

    changed = True
    while alive and changed:
        changed = False
        for d in range(k):  # base cases
            while alive:
                if deadline.expired:
                    raise ValueError("deadline")
                with _new_session(cfg, un.ts) as s:
                    un.declare_externs(s)
                    for t in range(d + 1):
                        un.declare_step(s, t)
                        if t == 0:
                            un.assert_init(s)
                        else:
                            un.assert_trans(s, t - 1)
                        un.assert_instant(s, t)
                    bad = " ".join(f"(not {un.formula(c.expr, d)})"
                                   for c in alive)
                    s.assert_text(f"(or {bad})" if len(alive) > 1 else bad)
                    verdict = s.check_sat()
                    if verdict == "unsat":
                        break
                    if verdict != "sat":
                        raise ValueError("solver unknown")
                    changed |= drop_violated(s, d)
        while alive:  # induction step
            if deadline.expired:
                raise ValueError("deadline")
            with _new_session(cfg, un.ts) as s:
                un.declare_externs(s)
                for t in range(k + 1):
                    un.declare_step(s, t)
                    un.assert_instant(s, t)
                    if t > 0:
                        un.assert_trans(s, t - 1)
                    if t < k:
                        for c in alive:
                            s.assert_text(un.formula(c.expr, t))
                bad = " ".join(f"(not {un.formula(c.expr, k)})"
                               for c in alive)
                s.assert_text(f"(or {bad})" if len(alive) > 1 else bad)
                verdict = s.check_sat()
                if verdict == "unsat":
                    break
                if verdict != "sat":
                    raise ValueError("solver unknown")
                changed |= drop_violated(s, k)
    return alive


def _mine_invariants_for(ts: TransitionSystem, cfg: EngineConfig,
                         deadline: _Deadline) -> list[Expr]:
    try:
        rows = []
        for seed in range(5):
            rows.extend(simulate_system(ts, steps=60, seed=seed))
    except (LangError, ZeroDivisionError):
        return []  # no concrete semantics for some extern; skip mining
    try:
        return generate_invariants(ts, rows, cfg, deadline)
    except ValueError:
        return []


# batch driver ------------------------------------------------------------------

def verify_all(tasks: Sequence[tuple[TransitionSystem, str]],
               cfg: EngineConfig,
               replays: Optional[dict[str, Replayer]] = None
               ) -> dict[str, VerifyResult]:
    """kinduction over each (system, property) task; results keyed by
    property id in task order, independent of scheduling."""
    ids = [prop for _, prop in tasks]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate property ids in task list")
    replays = replays or {}

    def run(item: tuple[TransitionSystem, str]) -> VerifyResult:
        ts, prop = item
        try:
            return kinduction(ts, prop, cfg, replay=replays.get(prop))
        except (LangError, KeyError, ValueError, SolverFailure) as e:
            return Unknown(UnknownReason.SOLVER_ERROR, str(e))

    if cfg.parallel_properties and len(tasks) > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=min(8, len(tasks))) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]
    return dict(zip(ids, results))


def make_replayer(tp, node: str, prop_id: str,
                  externs: Optional[dict] = None) -> Replayer:
    """Concrete-semantics validation of counterexample traces via the
    interpreter: true when the property is really false at the step and
    no assumption failed up to it."""
    from ..interp import simulate

    def replay(trace: Trace, step: int) -> bool:
        try:
            sim = simulate(tp, node, trace, trace.length, externs=externs)
        except Exception:
            return False
        if step >= sim.length:
            return False
        ok = sim.assertion_ok or [True] * sim.length
        return (sim.signals[prop_id][step] is False
                and all(ok[: step + 1]))

    return replay


def result_to_json(prop_id: str, result: VerifyResult,
                   time_ms: Optional[float] = None) -> dict:
    out: dict = {"property": prop_id}
    if isinstance(result, Valid):
        out["verdict"] = "valid"
        out["k"] = result.k
        out["invariants_used"] = list(result.invariants_used)
    elif isinstance(result, Falsified):
        out["verdict"] = "falsified"
        out["k"] = result.step
        out["trace"] = result.trace.to_json_obj()
    else:
        out["verdict"] = "unknown"
        out["reason"] = result.reason.value
        if result.detail:
            out["detail"] = result.detail
    if time_ms is not None:
        out["time_ms"] = round(time_ms, 3)
    return out
