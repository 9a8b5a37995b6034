import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metagrammar.problem import parse_problem
from metagrammar.solver import verify
from metagrammar.terms import BV, App, Lit, Var
from metagrammar.vector import ConstraintChecker, DomainTooLarge, domain_arrays, dtype_for

from conftest import HANDWRITTEN


def test_domain_order():
    env, n = domain_arrays([("a", BV(2)), ("b", BV(1))])
    assert n == 8
    assert env["a"].tolist() == [0, 0, 1, 1, 2, 2, 3, 3]
    assert env["b"].tolist() == [0, 1] * 4


def test_domain_limits():
    with pytest.raises(DomainTooLarge):
        domain_arrays([("a", BV(9))])
    with pytest.raises(DomainTooLarge):
        domain_arrays([("a", BV(8)), ("b", BV(8)), ("c", BV(1))])
    assert domain_arrays([]) == ({}, 1)


def test_dtypes():
    assert dtype_for(BV(3)) == np.uint8 and dtype_for(BV(12)) == np.uint16 and dtype_for(BV(64)) == np.uint64


def table_term(table):
    """A nested ite over x that realizes ``table`` (width 3)."""
    t = Lit(BV(3), table[-1])
    for i in range(len(table) - 2, -1, -1):
        t = App("ite", (App("=", (Var("x"), Lit(BV(3), i))), Lit(BV(3), table[i]), t))
    return t


SPECS = [
    "(constraint (= (f (f a)) a))",
    "(constraint (bvule (f a) (bvadd a #b001)))(constraint (distinct (f #b000) #b111))",
    "(define-fun h ((v (_ BitVec 3))) (_ BitVec 3) (bvxor v (f v)))(constraint (= (h a) (h (bvnot a))))",
]


@settings(max_examples=150, deadline=None)
@given(st.sampled_from(SPECS), st.lists(st.integers(0, 7), min_size=8, max_size=8))
def test_checker_agrees_with_verify(spec, table):
    p = parse_problem("(set-logic BV)(synth-fun f ((x (_ BitVec 3))) (_ BitVec 3))"
                      f"(declare-var a (_ BitVec 3)){spec}(check-synth)")
    got = ConstraintChecker(p).holds(np.array(table, dtype=np.uint8))
    assert got == bool(verify(table_term(table), p))


def test_checker_batch_matches_single():
    p = parse_problem((HANDWRITTEN / "involution.sl").read_text())
    chk = ConstraintChecker(p)
    n = p.target.params[0][1].size
    rng = np.random.default_rng(0)
    tables = rng.integers(0, n, size=(20, n)).astype(dtype_for(p.target.return_sort))
    tables[3] = (~np.arange(n)) & (n - 1)
    batch = chk.holds_batch(tables)
    assert batch.tolist() == [chk.holds(t) for t in tables]
    assert batch[3]
