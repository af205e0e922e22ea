import random
import subprocess
import sys
from fractions import Fraction
from itertools import product

import pytest

from synkit.smt import SmtSession, SolverFailure, parse_value, \
    resolve_solver_command
from synkit.smt import sat
from synkit.smt.sexpr import SExprError, balanced, format_atom, \
    format_sexpr, parse_all, parse_one
from synkit.smt.simplex import Conflict, Delta, Simplex
from synkit.smt.solver import SmtError, Solver, term_of

F = Fraction

BUNDLED = [sys.executable, "-m", "synkit.smt.bundled"]


# s-expressions ---------------------------------------------------------------

def test_sexpr_round_trip():
    text = '(assert (= |n@0| (- 1.5)) "a ""quoted"" string")'
    sx = parse_one(text)
    assert sx[1][1] == "n@0"
    assert parse_one(format_sexpr(sx)) == sx


def test_sexpr_comments_and_balance():
    assert parse_all("; hi\n(a b) ; bye\n(c)") == [["a", "b"], ["c"]]
    assert balanced("(a (b c))")
    assert not balanced("(a (b c)")
    assert not balanced("(a |unclosed")


def test_sexpr_errors():
    with pytest.raises(SExprError):
        parse_one("(a))")
    with pytest.raises(SExprError):
        parse_all("(a")


def test_format_atom_quotes_when_needed():
    assert format_atom("x") == "x"
    assert format_atom("n@0") == "n@0"  # @ is a plain symbol character
    assert format_atom("Pos.x@3") == "Pos.x@3"
    assert format_atom("a b") == "|a b|"
    assert format_atom("x#1") == "|x#1|"


# SAT core --------------------------------------------------------------------

def _cnf_solve(clauses, n_vars):
    s = sat.CDCL()
    for _ in range(n_vars):
        s.new_var()
    for c in clauses:
        s.add_clause(list(c))
    return s


def test_sat_simple():
    # (a or b) and (not a) and (not b) is unsat
    s = _cnf_solve([[0, 2], [1], [3]], 2)
    assert s.solve() == "unsat"
    s = _cnf_solve([[0, 2], [1, 2]], 2)
    assert s.solve() == "sat"
    assert s.value(2) == 1  # b must be true


def test_sat_pigeonhole_3_into_2():
    # p[i][j]: pigeon i sits in hole j
    s = sat.CDCL()
    p = [[s.new_var() << 1 for _ in range(2)] for _ in range(3)]
    for i in range(3):
        s.add_clause(p[i])
    for j in range(2):
        for i1 in range(3):
            for i2 in range(i1 + 1, 3):
                s.add_clause([sat.neg(p[i1][j]), sat.neg(p[i2][j])])
    assert s.solve() == "unsat"


def test_sat_differential_random_3sat():
    rng = random.Random(7)
    for _ in range(120):
        n = rng.randint(1, 6)
        m = rng.randint(1, 18)
        clauses = []
        for _ in range(m):
            width = rng.randint(1, 3)
            vs = rng.sample(range(n), min(width, n))
            clauses.append([(v << 1) | rng.randint(0, 1) for v in vs])
        want = any(
            all(any((lit & 1) == 1 - bits[lit >> 1] for lit in c)
                for c in clauses)
            for bits in product((0, 1), repeat=n))
        s = _cnf_solve(clauses, n)
        got = s.solve()
        assert got == ("sat" if want else "unsat"), clauses
        if got == "sat":
            for c in clauses:
                assert any(s.value(lit) == 1 for lit in c)


# simplex ---------------------------------------------------------------------

def test_delta_ordering():
    assert Delta(F(1)) < Delta(F(1), F(1))
    assert Delta(F(1), F(-1)) < Delta(F(1))
    assert Delta(F(0), F(5)) < Delta(F(1), F(-5))


def test_simplex_feasible_point():
    sx = Simplex()
    x, y = sx.new_var(), sx.new_var()
    s = sx.add_row({x: F(1), y: F(1)})
    sx.assert_bound(s, False, Delta(F(4)), 10)
    sx.assert_bound(x, True, Delta(F(1)), 12)
    sx.assert_bound(y, True, Delta(F(2)), 14)
    sx.check()
    m = sx.model()
    assert m[x] >= 1 and m[y] >= 2 and m[x] + m[y] <= 4


def test_simplex_conflict_reasons():
    sx = Simplex()
    x, y = sx.new_var(), sx.new_var()
    s = sx.add_row({x: F(1), y: F(1)})
    sx.assert_bound(x, False, Delta(F(1)), 10)
    sx.assert_bound(y, False, Delta(F(1)), 12)
    with pytest.raises(Conflict) as e:
        sx.assert_bound(s, True, Delta(F(3)), 14)
        sx.check()
    assert set(e.value.reasons) == {10, 12, 14}


def test_simplex_strict_bounds_delta_model():
    sx = Simplex()
    x = sx.new_var()
    sx.assert_bound(x, True, Delta(F(1), F(1)), 10)   # x > 1
    sx.assert_bound(x, False, Delta(F(2), F(-1)), 12)  # x < 2
    sx.check()
    m = sx.model()
    assert 1 < m[x] < 2


def test_simplex_undo_restores_bounds():
    sx = Simplex()
    x = sx.new_var()
    mark = sx.mark()
    sx.assert_bound(x, True, Delta(F(5)), 10)
    sx.undo_to(mark)
    sx.assert_bound(x, False, Delta(F(0)), 12)  # would clash with x >= 5
    sx.check()
    assert sx.model()[x] <= 0


# solver ----------------------------------------------------------------------

DECLS = {"x": ("const", "Int"), "y": ("const", "Int"),
         "r": ("const", "Real"), "q": ("const", "Real"),
         "p": ("const", "Bool"), "b": ("const", "Bool"),
         "f": ("fun", ("Int",), "Int")}


def _t(text):
    return term_of(parse_all(text)[0], DECLS)


def _solve(*texts):
    s = Solver([_t(x) for x in texts])
    verdict = s.check()
    if verdict == "sat":
        for x in texts:
            assert s.model_value(_t(x)) is True, x
    return s, verdict


def test_solver_propositional():
    assert _solve("(or p (not p))")[1] == "sat"
    assert _solve("(and p (not p))")[1] == "unsat"
    assert _solve("(= p (not b))", "(= p b)")[1] == "unsat"
    assert _solve("(xor p b)", "p")[1] == "sat"


def test_solver_real_strict():
    s, verdict = _solve("(< r 2.0)", "(> r 1.0)")
    assert verdict == "sat"
    assert 1 < s.model_value(_t("r")) < 2
    assert _solve("(< r 1.0)", "(> r 1.0)")[1] == "unsat"
    assert _solve("(<= r 1.0)", "(>= r 1.0)")[1] == "sat"


def test_solver_linear_system():
    s, verdict = _solve("(= (+ x y) 10)", "(= (- x y) 4)")
    assert verdict == "sat"
    assert s.model_value(_t("x")) == 7
    assert s.model_value(_t("y")) == 3


def test_solver_int_cuts():
    # x strictly between 0 and 1 has no integer solution
    assert _solve("(> x 0)", "(< x 1)")[1] == "unsat"
    assert _solve("(> (* 2 x) 1)", "(< (* 2 x) 2)")[1] == "unsat"
    assert _solve("(= (+ (* 2 x) (* 4 y)) 7)")[1] == "unsat"
    s, verdict = _solve("(= (+ (* 3 x) (* 5 y)) 11)", "(>= x 0)", "(>= y 0)")
    assert verdict == "sat"
    assert s.model_value(_t("x")) == 2 and s.model_value(_t("y")) == 1


def test_solver_ite_and_equality():
    assert _solve("(= x (ite p 3 4))", "(= x 4)", "p")[1] == "unsat"
    s, verdict = _solve("(= x (ite p 3 4))", "(= x 4)")
    assert verdict == "sat"
    assert s.model_value(_t("p")) is False


def test_solver_uf_congruence():
    assert _solve("(= x y)", "(not (= (f x) (f y)))")[1] == "unsat"
    s, verdict = _solve("(not (= x y))", "(= (f x) 1)", "(= (f y) 2)")
    assert verdict == "sat"
    assert s.model_value(_t("(f x)")) == 1


def test_solver_mixed_sorts_and_division():
    s, verdict = _solve("(= r (* 0.5 x))", "(= x 3)")
    assert verdict == "sat"
    assert s.model_value(_t("r")) == F(3, 2)
    s, verdict = _solve("(= q (/ x 4))", "(= x 1)")
    assert verdict == "sat"
    assert s.model_value(_t("q")) == F(1, 4)


def test_solver_rejects_nonlinear():
    with pytest.raises(SmtError):
        _solve("(= r (* x x))")
    with pytest.raises(SmtError):
        _solve("(= r (/ 1 x))")


def test_solver_let_and_distinct():
    assert _solve("(let ((a (+ x 1))) (and (= a 5) (= x 4)))")[1] == "sat"
    assert _solve("(let ((a (+ x 1))) (and (= a 5) (= x 3)))")[1] == "unsat"
    assert _solve("(distinct x y)", "(= x y)")[1] == "unsat"


def _eval_bool(sx, env):
    if isinstance(sx, str):
        if sx in env:
            return env[sx]
        return {"true": True, "false": False}[sx]
    op, args = sx[0], [_eval_bool(a, env) for a in sx[1:]]
    if op == "not":
        return not args[0]
    if op == "and":
        return all(args)
    if op == "or":
        return any(args)
    if op == "=>":
        return (not args[0]) or args[1]
    if op == "=":
        return args[0] == args[1]
    raise AssertionError(op)


def test_solver_differential_bool_formulas():
    rng = random.Random(11)
    names = ["p", "b", "c3", "c4"]
    decls = {n: ("const", "Bool") for n in names}

    def gen(depth):
        if depth == 0 or rng.random() < 0.3:
            return rng.choice(names + ["true", "false"])
        op = rng.choice(["not", "and", "or", "=>", "="])
        if op == "not":
            return ["not", gen(depth - 1)]
        return [op, gen(depth - 1), gen(depth - 1)]

    for _ in range(150):
        sx = gen(4)
        want = any(_eval_bool(sx, dict(zip(names, bits)))
                   for bits in product((False, True), repeat=len(names)))
        s = Solver([term_of(sx, decls)])
        assert s.check() == ("sat" if want else "unsat"), sx


def test_solver_differential_int_formulas():
    rng = random.Random(23)
    names = ["x", "y", "z"]
    decls = {n: ("const", "Int") for n in names}

    def atom():
        coeffs = [rng.randint(-3, 3) for _ in names]
        lhs = ["+"] + [["*", str(c) if c >= 0 else ["-", str(-c)], n]
                       for c, n in zip(coeffs, names)]
        op = rng.choice(["<", "<=", ">", ">=", "="])
        k = rng.randint(-4, 4)
        return [op, lhs, str(k) if k >= 0 else ["-", str(-k)]]

    def eval_atom(sx, env):
        def ev(e):
            if isinstance(e, str):
                return env.get(e, int(e) if e.lstrip("-").isdigit() else None)
            if e[0] == "-" and len(e) == 2:
                return -ev(e[1])
            if e[0] == "+":
                return sum(ev(a) for a in e[1:])
            if e[0] == "*":
                return ev(e[1]) * ev(e[2])
            raise AssertionError(e)
        a, b = ev(sx[1]), ev(sx[2])
        return {"<": a < b, "<=": a <= b, ">": a > b,
                ">=": a >= b, "=": a == b}[sx[0]]

    grid = range(-3, 4)
    for _ in range(60):
        atoms = [atom() for _ in range(rng.randint(1, 4))]
        sx = ["and"] + atoms if len(atoms) > 1 else atoms[0]
        want = any(all(eval_atom(a, dict(zip(names, pt))) for a in atoms)
                   for pt in product(grid, repeat=3))
        # restrict the solver to the same grid so verdicts line up
        box = [["and", ["<=", ["-", "3"], n], ["<=", n, "3"]]
               for n in names]
        s = Solver([term_of(["and", sx] + box, decls)])
        assert s.check() == ("sat" if want else "unsat"), sx


# bundled process and session --------------------------------------------------

def _pipe(script: str) -> str:
    out = subprocess.run(BUNDLED, input=script, capture_output=True,
                         text=True, timeout=120)
    return out.stdout


def test_bundled_basic_conversation():
    out = _pipe("""(set-logic QF_LIA)
(declare-const n Int)
(assert (> n 3))
(assert (< n 5))
(check-sat)
(get-value (n))
(exit)
""")
    lines = out.strip().splitlines()
    assert lines[0] == "sat"
    assert lines[1] == "((n 4))"


def test_bundled_unsat_and_recovery():
    out = _pipe("""(declare-const p Bool)
(assert p)
(assert (not p))
(check-sat)
(get-value (p))
(push 1)
(pop 1)
(echo "still here")
(exit)
""")
    lines = out.strip().splitlines()
    assert lines[0] == "unsat"
    assert lines[1].startswith('(error')
    assert lines[2] == "still here"


def test_bundled_error_then_continue():
    out = _pipe("""(declare-const x Widget)
(declare-const x Int)
(assert (= x 2))
(check-sat)
(get-model)
(exit)
""")
    lines = out.strip().splitlines()
    assert lines[0].startswith('(error')
    assert lines[1] == "sat"
    assert "(define-fun x () Int 2)" in out


def test_bundled_quoted_symbols_and_negatives():
    out = _pipe("""(declare-const |n@0| Int)
(declare-const r Real)
(assert (= |n@0| (- 7)))
(assert (= r (/ (- 3) 4)))
(check-sat)
(get-value (|n@0| r))
(exit)
""")
    lines = out.strip().splitlines()
    assert lines[0] == "sat"
    assert lines[1] == "((n@0 (- 7)) (r (- (/ 3.0 4.0))))"


def test_parse_value_forms():
    assert parse_value(parse_all("true")[0]) is True
    assert parse_value(parse_all("5")[0]) == 5
    assert parse_value(parse_all("(- 5)")[0]) == -5
    assert parse_value(parse_all("1.5")[0]) == F(3, 2)
    assert parse_value(parse_all("(/ 1 2)")[0]) == F(1, 2)
    assert parse_value(parse_all("(- (/ 1.0 3.0))")[0]) == F(-1, 3)
    assert parse_value(parse_all("(/ (- 1) 2)")[0]) == F(-1, 2)


def test_resolve_solver_command(monkeypatch):
    monkeypatch.delenv("SOLVER_CMD", raising=False)
    monkeypatch.setattr("shutil.which", lambda name: None)
    assert resolve_solver_command("mysolver --flag") == ["mysolver", "--flag"]
    assert resolve_solver_command() == BUNDLED
    monkeypatch.setenv("SOLVER_CMD", "other -in")
    assert resolve_solver_command() == ["other", "-in"]
    monkeypatch.delenv("SOLVER_CMD")
    monkeypatch.setattr("shutil.which", lambda name: "/opt/z3")
    assert resolve_solver_command() == ["/opt/z3", "-in"]


def test_session_round_trip():
    with SmtSession(BUNDLED) as s:
        s.set_logic("QF_LIRA")
        s.declare_const("n@0", "Int")
        s.declare_const("ok", "Bool")
        s.assert_text("(= |n@0| 41)")
        s.assert_text("(= ok (< |n@0| 42))")
        assert s.check_sat() == "sat"
        vals = s.get_values(["n@0", "ok"])
        assert vals == {"n@0": 41, "ok": True}
        s.push()
        s.assert_text("(not ok)")
        assert s.check_sat() == "unsat"
        s.pop()
        assert s.check_sat() == "sat"


def test_session_uf_and_error():
    with SmtSession(BUNDLED) as s:
        s.declare_fun("f", ["Int"], "Int")
        s.declare_const("a", "Int")
        s.declare_const("b", "Int")
        s.assert_text("(and (= a b) (not (= (f a) (f b))))")
        assert s.check_sat() == "unsat"
        with pytest.raises(SolverFailure):
            s.send("(assert (= a (* a a)))")
            s.check_sat()


def test_session_reports_dead_process():
    s = SmtSession(BUNDLED)
    s.proc.kill()
    s.proc.wait()
    with pytest.raises(SolverFailure):
        s.send("(check-sat)")
        s.check_sat()
    s.close()
