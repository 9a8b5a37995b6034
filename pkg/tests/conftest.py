from pathlib import Path

import pytest

from metagrammar.problem import parse_problem

ROOT = Path(__file__).resolve().parent.parent
HANDWRITTEN = ROOT / "benchmarks" / "handwritten"
SYNTHETIC = ROOT / "benchmarks" / "synthetic"

DOUBLE = ("(set-logic BV)(synth-fun f ((x (_ BitVec 4))) (_ BitVec 4))"
          "(declare-var a (_ BitVec 4))(constraint (= (f a) (bvadd a a)))(check-synth)")


def problem(body: str, params="((x (_ BitVec 4)))", ret="(_ BitVec 4)", decls="(declare-var a (_ BitVec 4))", grammar=""):
    return parse_problem(f"(set-logic BV)(synth-fun f {params} {ret} {grammar}){decls}{body}(check-synth)")


@pytest.fixture
def double():
    return parse_problem(DOUBLE)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
