"""Transition-system compiler tests.

The bisimulation check at the bottom evaluates the compiled formulas
with a small evaluator written here, independent of the interpreter's
recursive-descent machinery, and confirms the interpreter's deep trace
is a model of init, the definitions, and the transition relation.
"""

import random
from fractions import Fraction

import pytest

from synkit import tsys
from synkit.interp import Trace, init_state, simulate, step
from synkit.lang import (Binary, BoolLit, Call, Expr, IntLit, Ite, LangError,
                         RealLit, Type, Unary, Var, parse, typecheck)

F = Fraction


def build(src: str):
    return typecheck(parse(src))


COUNTER = build("""
node Counter(reset : bool) returns (c : int);
let
  c = 0 -> if reset then 0 else pre c + 1;
tel
""")


def test_counter_system_shape():
    ts = tsys.compile(COUNTER, "Counter")
    assert ts.input_vars == [("reset", Type.BOOL)]
    assert ts.state_vars == [("_init", Type.BOOL), ("_pre0", Type.INT)]
    assert ts.defined_vars == [("c", Type.INT)]
    trans = dict(ts.trans)
    assert trans["_init"] == BoolLit(False)
    assert trans["_pre0"] == Var("c")
    (init,) = ts.init
    assert init == Var("_init")
    (def_c,) = ts.definitions
    assert def_c[0] == "c"
    assert isinstance(def_c[1], Ite) and def_c[1].cond == Var("_init")


def test_gain_times_step_staying_linear():
    tp = build("""
node Lim(x, gain, dt : real) returns (y : real);
var band : real;
let
  band = gain * dt;
  y = if x > band then band else x;
tel

node Top(u : real) returns (y : real);
let
  y = Lim(u, 2.0, 0.1);
tel
""")
    ts = tsys.compile(tp, "Top")
    assert ts.extern_symbols == []
    band_def = dict(ts.definitions)["Lim.band"]
    assert band_def == RealLit(F(1, 5))


def test_variable_product_becomes_uninterpreted():
    tp = build("node M(a, b : real) returns (y : real); let y = a * b; tel")
    ts = tsys.compile(tp, "M")
    rhs = dict(ts.definitions)["y"]
    assert isinstance(rhs, Call) and rhs.callee == "_nlmul_real"
    assert ("_nlmul_real", (Type.REAL, Type.REAL), Type.REAL) \
        in ts.extern_symbols


def test_int_product_uses_int_symbol():
    tp = build("node M(a, b : int) returns (y : int); let y = a * b; tel")
    ts = tsys.compile(tp, "M")
    assert dict(ts.definitions)["y"].callee == "_nlmul_int"


def test_division_forms():
    tp = build("node D(a, b : real) returns (y : real); let y = a / b; tel")
    rhs = dict(tsys.compile(tp, "D").definitions)["y"]
    assert isinstance(rhs, Call) and rhs.callee == "_nldiv_real"

    tp = build("node D(a : real) returns (y : real); let y = a / 4.0; tel")
    rhs = dict(tsys.compile(tp, "D").definitions)["y"]
    assert rhs == Binary("*", Var("a"), RealLit(F(1, 4)))

    tp = build("node D(a : real) returns (y : real); let y = a / 0.0; tel")
    with pytest.raises(LangError) as exc:
        tsys.compile(tp, "D")
    assert "zero" in str(exc.value)


def test_declared_extern_carried_through():
    tp = build("""
extern sine(x : real) returns (y : real);
node N(x : real) returns (y : real);
let y = sine(x) + 1.0; tel
""")
    ts = tsys.compile(tp, "N")
    assert ("sine", (Type.REAL,), Type.REAL) in ts.extern_symbols


def test_namespacing_injective_and_instance_numbered():
    tp = build("""
node Sat(x : real) returns (y : real);
let y = if x > 1.0 then 1.0 else x; tel

node Top(a, b : real) returns (y : real);
let y = Sat(a) + Sat(b); tel
""")
    ts = tsys.compile(tp, "Top")
    names = [n for n, _ in ts.defined_vars]
    assert len(names) == len(set(names))
    assert "Sat1.y" in names and "Sat2.y" in names


def test_callee_asserts_become_assumptions():
    tp = build("""
node Pos(x : real) returns (y : real);
let
  assert x >= 0.0;
  y = x;
tel
node Top(u : real) returns (y : real);
let y = Pos(u); tel
""")
    ts = tsys.compile(tp, "Top")
    assert len(ts.assumptions) == 1
    assert "Pos.x" in tsys.vars_of(ts.assumptions[0])


def test_only_top_annotations_become_properties():
    tp = build("""
node Inner(x : bool) returns (ok : bool);
let
  --!PROPERTY: ok = true;
  ok = x or not x;
tel
node Outer(x : bool) returns (good : bool);
var t : bool;
let
  --!PROPERTY: good = true;
  t = Inner(x);
  good = t;
tel
""")
    ts = tsys.compile(tp, "Outer")
    assert [pid for pid, _ in ts.properties] == ["good"]


def test_slice_to_isolated_boolean():
    tp = build("""
node A(p, q : bool) returns (ok : bool; junk : bool);
let
  --!PROPERTY: ok = true;
  ok = p or not p;
  junk = q and q;
tel
""")
    ts = tsys.compile(tp, "A")
    sl = tsys.slice(ts, "ok")
    kept = {n for n, _ in sl.input_vars + sl.defined_vars}
    assert kept == {"p", "ok"}
    assert [pid for pid, _ in sl.properties] == ["ok"]
    with pytest.raises(KeyError):
        tsys.slice(ts, "nope")


def test_slice_idempotent():
    tp = build("""
node B(x : real) returns (ok : bool; y : real);
var acc : real;
let
  --!PROPERTY: ok = true;
  assert x >= 0.0;
  acc = 0.0 -> pre acc + x;
  y = acc * 2.0;
  ok = acc >= 0.0;
tel
""")
    ts = tsys.compile(tp, "B")
    s1 = tsys.slice(ts, "ok")
    s2 = tsys.slice(s1, "ok")
    assert [n for n, _ in s1.defined_vars] == [n for n, _ in s2.defined_vars]
    assert [n for n, _ in s1.state_vars] == [n for n, _ in s2.state_vars]
    assert len(s1.assumptions) == len(s2.assumptions) == 1
    assert all("y" != n for n, _ in s1.defined_vars)


def test_slice_keeps_assumptions_touching_cone():
    tp = build("""
node C(x, z : real) returns (ok : bool);
let
  --!PROPERTY: ok = true;
  assert x > 0.0;
  assert z > 0.0;
  ok = x > 0.0;
tel
""")
    ts = tsys.compile(tp, "C")
    sl = tsys.slice(ts, "ok")
    assert len(sl.assumptions) == 1
    assert {n for n, _ in sl.input_vars} == {"x"}


def test_concretize_and_errors():
    ts = tsys.compile(COUNTER, "Counter")
    steps = [
        {"reset": False, "_init": True, "_pre0": 0, "c": 0},
        {"reset": False, "_init": False, "_pre0": 0, "c": 1},
    ]
    tr = tsys.concretize(ts, steps)
    assert tr.signals["c"] == [0, 1]
    assert tr.length == 2
    assert tsys.concretize(ts, []).length == 0
    with pytest.raises(KeyError):
        tsys.concretize(ts, [{"reset": False}])


def test_seed_state_reproduces_midstream_run():
    # drive the counter two steps, then seed a fresh state from the
    # transition-system view of that instant and compare continuations
    st = init_state(COUNTER, "Counter")
    st, _, _ = step(COUNTER, "Counter", st, {"reset": False})
    st, out, _ = step(COUNTER, "Counter", st, {"reset": False})
    assert out["c"] == 1
    seeded = tsys.seed_state(COUNTER, "Counter",
                             {"_init": False, "_pre0": 1})
    s2, out2, _ = step(COUNTER, "Counter", seeded, {"reset": False})
    assert out2["c"] == 2
    st3, out3, _ = step(COUNTER, "Counter", st, {"reset": False})
    assert out3 == out2


def test_dump_mentions_every_variable():
    ts = tsys.compile(COUNTER, "Counter")
    text = tsys.dump(ts)
    for name in ("|reset|", "|_init|", "|_pre0|", "|c|"):
        assert name in text
    assert "trans._pre0" in text


# independent formula evaluator for the bisimulation check ---------------

_DEFAULT = {Type.BOOL: False, Type.INT: 0, Type.REAL: F(0)}

_EXTERN_EVAL = {
    "_nlmul_real": lambda a, b: a * b,
    "_nlmul_int": lambda a, b: a * b,
    "_nldiv_real": lambda a, b: F(a) / F(b),
}


def ev(e: Expr, env):
    if isinstance(e, (BoolLit, IntLit, RealLit)):
        return e.value
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Unary):
        v = ev(e.operand, env)
        return (not v) if e.op == "not" else -v
    if isinstance(e, Ite):
        return ev(e.then, env) if ev(e.cond, env) else ev(e.orelse, env)
    if isinstance(e, Call):
        return _EXTERN_EVAL[e.callee](*[ev(a, env) for a in e.args])
    assert isinstance(e, Binary)
    a, b = ev(e.left, env), ev(e.right, env)
    return {
        "+": lambda: a + b, "-": lambda: a - b, "*": lambda: a * b,
        "/": lambda: F(a) / F(b),
        "=": lambda: a == b, "<>": lambda: a != b, "<": lambda: a < b,
        "<=": lambda: a <= b, ">": lambda: a > b, ">=": lambda: a >= b,
        "and": lambda: bool(a and b), "or": lambda: bool(a or b),
        "=>": lambda: bool((not a) or b),
    }[e.op]()


BISIM_MODELS = [
    ("Counter", """
node Counter(reset : bool) returns (c : int);
let
  c = 0 -> if reset then 0 else pre c + 1;
tel
"""),
    ("Top", """
node Lag(x : real) returns (y : real);
let
  y = x -> 0.5 * x + 0.5 * pre y;
tel
node Top(u : real) returns (y, z : real);
let
  assert u >= -8.0;
  y = Lag(u);
  z = Lag(u + 1.0);
tel
"""),
    ("Latch", """
node Latch(set, clear : bool) returns (q : bool);
let
  q = set -> if clear then false else (set or pre q);
tel
"""),
    ("Mix", """
node Mix(a : real; k : int) returns (y : real; ok : bool);
var s : real;
let
  assert a <= 100.0;
  s = 0.0 -> pre s + a;
  y = if k > 3 then s else pre s;
  ok = s >= 0.0 or s < 0.0;
tel
"""),
]


def random_value(ty: Type, rng: random.Random):
    if ty is Type.BOOL:
        return rng.random() < 0.5
    if ty is Type.INT:
        return rng.randrange(-10, 11)
    return F(rng.randrange(-64, 65), 1 << rng.randrange(0, 3))


@pytest.mark.parametrize("node,src", BISIM_MODELS)
def test_interpreter_trace_models_compiled_system(node, src):
    tp = build(src)
    ts = tsys.compile(tp, node)
    types = ts.var_types()
    rng = random.Random(hash(node) & 0xFFFF)
    for trial in range(100):
        n = rng.randrange(1, 8)
        inputs = Trace({name: [random_value(ty, rng) for _ in range(n)]
                        for name, ty in ts.input_vars})
        trace = simulate(tp, node, inputs, n, deep=True)
        # reconstruct the state stream: defaults at 0, trans thereafter
        state = [{"_init": True}]
        for name, ty in ts.state_vars:
            if name != "_init":
                state[0][name] = _DEFAULT[ty]
        envs = []
        for t in range(n):
            env = dict(state[t])
            for name, _ in ts.input_vars:
                env[name] = inputs.signals[name][t]
            for name, _ in ts.defined_vars:
                env[name] = trace.signals[name][t]
            envs.append(env)
            state.append({name: ev(rhs, env) for name, rhs in ts.trans})
        for t, env in enumerate(envs):
            if t == 0:
                assert all(ev(f, env) for f in ts.init)
            for name, rhs in ts.definitions:
                assert env[name] == ev(rhs, env), (trial, t, name)
            assumed = all(ev(a, env) for a in ts.assumptions)
            assert assumed == trace.assertion_ok[t], (trial, t)
