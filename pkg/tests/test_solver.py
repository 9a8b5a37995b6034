import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metagrammar.grammar import Grammar, NonTerminal, Operator, Terminal
from metagrammar.problem import parse_problem
from metagrammar.rules import default_metagrammar, materialize
from metagrammar.solver import (
    ERROR,
    INFEASIBLE,
    SOLVED,
    TIMEOUT,
    Builtin,
    External,
    RunLimits,
    enumerate_solve,
    parse_solution,
    run_batch,
    solve,
    verify,
)
from metagrammar.terms import BV, App, Lit, Var

from conftest import problem


def bv4_grammar(*prods):
    return Grammar((NonTerminal("Start", BV(4), tuple(prods)),))


X = Terminal(Var("x"))
PLUS = Operator("bvadd", ("Start", "Start"))


def test_double_solved_with_small_grammar(double):
    o = enumerate_solve(double, bv4_grammar(X, PLUS), 5, 10_000)
    assert o.status == SOLVED
    assert str(o.solution) == "(bvadd x x)"
    assert verify(o.solution, double)


def test_double_with_default_grammar(double):
    g = materialize(default_metagrammar(double.signature_sorts()), double)
    o = enumerate_solve(double, g, 6, 100_000)
    assert o.solved and verify(o.solution, double)


def test_identity_costs_one():
    p = problem("(constraint (= (f a) a))")
    o = enumerate_solve(p, bv4_grammar(X, PLUS), 5, 1000)
    assert (o.status, str(o.solution), o.cost) == (SOLVED, "x", 1)


def test_no_operators_is_infeasible(double):
    o = enumerate_solve(double, bv4_grammar(X), 3, 1000)
    assert o.status == INFEASIBLE


def test_contradiction_is_infeasible():
    p = problem("(constraint (= (f a) (bvadd a #x1)))(constraint (= (f a) a))")
    g = materialize(default_metagrammar(p.signature_sorts()), p)
    o = enumerate_solve(p, g, 4, 50_000)
    assert o.status == INFEASIBLE


def test_cost_is_deterministic(double):
    g = materialize(default_metagrammar(double.signature_sorts()), double)
    a = enumerate_solve(double, g, 6, 100_000)
    b = enumerate_solve(double, g, 6, 100_000)
    assert (a.cost, str(a.solution)) == (b.cost, str(b.solution))


def test_domain_too_large_is_error():
    p = parse_problem("(set-logic BV)(synth-fun f ((x (_ BitVec 32))) (_ BitVec 32))"
                      "(declare-var a (_ BitVec 32))(constraint (= (f a) a))(check-synth)")
    o = enumerate_solve(p, Grammar((NonTerminal("Start", BV(32), (X,)),)), 3, 100)
    assert o.status == ERROR and "too large" in o.message


def test_verify_counterexample(double):
    v = verify(Var("x"), double)
    assert not v and v.counterexample == {"a": 1}
    assert verify(App("bvadd", (Var("x"), Var("x"))), double)
    assert verify(App("bvshl", (Var("x"), Lit(BV(4), 1))), double)


def test_constraints_without_universal_vars():
    p = parse_problem("(set-logic BV)(synth-fun f ((x (_ BitVec 4))) (_ BitVec 4))"
                      "(constraint (= (f #x2) #x4))(constraint (= (f #x3) #x6))(check-synth)")
    o = enumerate_solve(p, bv4_grammar(X, PLUS), 4, 1000)
    assert o.solved and str(o.solution) == "(bvadd x x)"


def test_target_nested_in_its_own_argument():
    p = problem("(constraint (= (f (f a)) a))(constraint (distinct (f a) a))")
    g = materialize(default_metagrammar(p.signature_sorts()), p)
    o = enumerate_solve(p, g, 4, 50_000)
    assert o.solved and verify(o.solution, p)


def test_budget_exhaustion_reported():
    p = problem("(constraint (= (f a) (bvmul a (bvmul a (bvmul a a)))))")
    g = materialize(default_metagrammar(p.signature_sorts()), p)
    o = enumerate_solve(p, g, 9, 20)
    assert (o.status, o.cost, o.message) == (INFEASIBLE, 20, "candidate budget exhausted")


def test_deadline_gives_timeout(double):
    g = materialize(default_metagrammar(double.signature_sorts()), double)
    p = problem("(constraint (= (f a) (bvmul a (bvmul a (bvadd a #x7)))))")
    o = enumerate_solve(p, g, 12, 10**9, deadline=0.0)
    assert o.status == TIMEOUT


# --- random small specs: anything reported Solved is correct

ops = st.sampled_from(["bvadd", "bvsub", "bvand", "bvor", "bvxor", "bvshl", "bvlshr", "bvmul"])


def spec_terms(size):
    if size <= 1:
        return st.one_of(st.just(Var("a")), st.integers(0, 3).map(lambda v: Lit(BV(3), v)))
    unary = st.tuples(st.just("bvnot"), spec_terms(size - 1)).map(lambda t: App(t[0], t[1:]))
    if size == 2:
        return st.one_of(spec_terms(1), unary)
    return st.one_of(
        spec_terms(1),
        unary,
        st.integers(1, size - 2).flatmap(lambda k: st.tuples(ops, spec_terms(k), spec_terms(size - 1 - k)))
        .map(lambda t: App(t[0], t[1:])),
    )


@settings(max_examples=40, deadline=None)
@given(spec_terms(5))
def test_solutions_verify(t):
    text = (f"(set-logic BV)(synth-fun f ((x (_ BitVec 3))) (_ BitVec 3))(declare-var a (_ BitVec 3))"
            f"(constraint (= (f a) {t}))(check-synth)")
    p = parse_problem(text)
    g = materialize(default_metagrammar(p.signature_sorts()), p)
    o = enumerate_solve(p, g, 5, 20_000)
    if o.solved:
        assert verify(o.solution, p)


# --- solution parsing and external solvers

def test_parse_solution_variants(double):
    want = "(bvadd x x)"
    assert str(parse_solution("(define-fun f ((x (_ BitVec 4))) (_ BitVec 4) (bvadd x x))", double)) == want
    # wrapped, with renamed parameters
    out = "unsat\n((define-fun f ((q (_ BitVec 4))) (_ BitVec 4) (bvadd q q)))"
    assert str(parse_solution(out, double)) == want
    assert parse_solution("infeasible", double) is None


def test_external_command_requires_placeholder():
    with pytest.raises(ValueError):
        External("cvc5 --lang=sygus2")
    with pytest.raises(ValueError):
        External("solver {input} {input}")


def fake_solver(tmp_path, body):
    script = tmp_path / "fake.py"
    script.write_text("import sys, time\n" + body)
    return External(f"{sys.executable} {script} {{input}}")


def test_external_success(tmp_path, double):
    s = fake_solver(tmp_path, "print('(define-fun f ((x (_ BitVec 4))) (_ BitVec 4) (bvshl x #x1))')\n")
    o = solve(double, bv4_grammar(X), s)
    assert o.status == SOLVED and str(o.solution) == "(bvshl x #x1)"


def test_external_wrong_answer_is_error(tmp_path, double):
    s = fake_solver(tmp_path, "print('(define-fun f ((x (_ BitVec 4))) (_ BitVec 4) x)')\n")
    assert solve(double, bv4_grammar(X), s).status == ERROR


def test_external_failure_and_timeout(tmp_path, double):
    assert solve(double, bv4_grammar(X), External("false {input}")).status == ERROR
    assert solve(double, bv4_grammar(X), External("no-such-binary-xyz {input}")).status == ERROR
    slow = fake_solver(tmp_path, "time.sleep(30)\n")
    o = solve(double, bv4_grammar(X), slow, RunLimits(timeout_seconds=0.5))
    assert o.status == TIMEOUT and o.runtime_seconds < 5


def test_external_input_file(tmp_path, double):
    # the solver sees the problem with the grammar attached
    s = fake_solver(tmp_path, "text = open(sys.argv[1]).read()\n"
                              "assert '(Start (_ BitVec 4) (x))' in text, text\n"
                              "print('(define-fun f ((x (_ BitVec 4))) (_ BitVec 4) (bvadd x x))')\n")
    assert solve(double, bv4_grammar(X), s).status == SOLVED


def test_run_batch_order_and_isolation(tmp_path, double):
    small = bv4_grammar(X, PLUS)
    slow = fake_solver(tmp_path, "time.sleep(30)\n")
    jobs = [(double, small, Builtin(5, 1000)), (double, small, slow), (double, small, Builtin(5, 1000))]
    out = run_batch(jobs, RunLimits(timeout_seconds=0.5, max_parallel=3))
    assert [o.status for o in out] == [SOLVED, TIMEOUT, SOLVED]


def test_run_batch_many(double):
    identity = problem("(constraint (= (f a) a))")
    jobs = [((double if i % 2 else identity), bv4_grammar(X, PLUS), Builtin(5, 1000)) for i in range(40)]
    out = run_batch(jobs, RunLimits(max_parallel=20))
    assert len(out) == 40
    assert [str(o.solution) for o in out] == [("(bvadd x x)" if i % 2 else "x") for i in range(40)]
    seq = run_batch(jobs[:3], RunLimits(max_parallel=1))
    assert [str(o.solution) for o in seq] == ["x", "(bvadd x x)", "x"]


def test_run_batch_turns_exceptions_into_errors(double):
    out = run_batch([(double, None, Builtin())], RunLimits(max_parallel=1))
    assert out[0].status == ERROR
