import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metagrammar.terms import (
    BOOL,
    BV,
    BV_BINARY,
    BV_PREDICATES,
    BV_UNARY,
    App,
    EvalError,
    FunctionDef,
    FunctionSignature,
    Lit,
    SortError,
    Var,
    apply_op,
    eval_term,
    format_literal,
    result_sort,
    sort_of,
    substitute,
    term_size,
)
from metagrammar.vector import vec_apply


def lit(w, v):
    return Lit(BV(w), v)


def ev(t, **env):
    return eval_term(t, env, sorts={k: BV(4) for k in env})


def test_literal_formatting():
    assert format_literal(BV(4), 3) == "#x3"
    assert format_literal(BV(3), 3) == "#b011"
    assert str(lit(8, 3)) == "#x03"
    assert str(Lit(BOOL, True)) == "true"


def test_literal_range_checked():
    with pytest.raises(ValueError):
        lit(4, 16)
    with pytest.raises(ValueError):
        lit(4, -1)


def test_wraparound():
    assert eval_term(App("bvadd", (lit(4, 15), lit(4, 1))), {}) == 0


def test_udiv_by_zero_is_all_ones():
    assert eval_term(App("bvudiv", (lit(4, 5), lit(4, 0))), {}) == 0b1111


def test_urem_by_zero_is_dividend():
    assert eval_term(App("bvurem", (lit(4, 5), lit(4, 0))), {}) == 5


def test_ite_true_branch():
    t = App("ite", (Lit(BOOL, True), Var("x"), Var("y")))
    assert ev(t, x=5, y=9) == 5


@pytest.mark.parametrize("op, a, b, want", [
    ("bvshl", 0b0011, 4, 0),
    ("bvshl", 0b0011, 1, 0b0110),
    ("bvlshr", 0b1000, 3, 1),
    ("bvlshr", 0b1000, 9, 0),
    ("bvashr", 0b1000, 1, 0b1100),
    ("bvashr", 0b1000, 7, 0b1111),
    ("bvashr", 0b0100, 7, 0),
    ("bvslt", 0b1000, 0b0111, True),
    ("bvult", 0b1000, 0b0111, False),
    ("bvsub", 0, 1, 15),
])
def test_operator_cases(op, a, b, want):
    assert eval_term(App(op, (lit(4, a), lit(4, b))), {}) == want


def test_variadic_bool_ops():
    t, f = Lit(BOOL, True), Lit(BOOL, False)
    assert eval_term(App("and", (t, t, f)), {}) is False
    assert eval_term(App("xor", (t, t, t)), {}) is True
    # => associates to the right
    assert eval_term(App("=>", (f, t, f)), {}) is True


def test_sort_errors():
    with pytest.raises(SortError):
        result_sort("bvadd", [BV(4), BV(8)])
    with pytest.raises(SortError):
        result_sort("ite", [BV(4), BV(4), BV(4)])
    with pytest.raises(EvalError):
        eval_term(App("bvadd", (lit(4, 1), lit(8, 1))), {})


def test_unbound_variable():
    with pytest.raises(EvalError, match="unbound"):
        ev(Var("z"), x=1)


def test_helper_and_candidate_application():
    sig = FunctionSignature("sq", (("v", BV(4)),), BV(4))
    sq = FunctionDef(sig, App("bvmul", (Var("v"), Var("v"))))
    target = FunctionSignature("f", (("x", BV(4)),), BV(4))
    body = App("bvadd", (Var("x"), App("sq", (Var("x"),))))
    t = App("f", (Var("a"),))
    assert eval_term(t, {"a": lit(4, 3)}, [sq], (target, body)) == (3 + 9) % 16


def test_signature_rejects_duplicate_params():
    with pytest.raises(ValueError):
        FunctionSignature("f", (("x", BV(4)), ("x", BV(4))), BV(4))


def test_size_and_substitute():
    t = App("bvadd", (Var("x"), App("bvnot", (Var("y"),))))
    assert term_size(t) == 4
    assert str(substitute(t, {"y": Var("x")})) == "(bvadd x (bvnot x))"
    assert sort_of(t, {"x": BV(4), "y": BV(4)}, {}) == BV(4)


def test_nullary_app_prints_bare():
    assert str(App("c", ())) == "c"


# --- vectorized path agrees with the scalar evaluator

widths = st.integers(1, 8)


@settings(max_examples=300, deadline=None)
@given(widths, st.sampled_from(BV_UNARY + BV_BINARY + BV_PREDICATES), st.data())
def test_vector_matches_scalar(w, op, data):
    n = 16
    xs = data.draw(st.lists(st.integers(0, (1 << w) - 1), min_size=n, max_size=n))
    ys = data.draw(st.lists(st.integers(0, (1 << w) - 1), min_size=n, max_size=n))
    dt = np.uint8
    args = [np.array(xs, dtype=dt)] if op in BV_UNARY else [np.array(xs, dtype=dt), np.array(ys, dtype=dt)]
    got = vec_apply(op, args, BV(w))
    for i in range(n):
        scalar_args = [xs[i]] if op in BV_UNARY else [xs[i], ys[i]]
        assert got[i] == apply_op(op, scalar_args, BV(w)), (op, w, scalar_args)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 8), st.integers(0, 255), st.integers(0, 255))
def test_bitwise_identities(w, a, b):
    m = (1 << w) - 1
    a, b = a & m, b & m
    s = BV(w)
    assert apply_op("bvsub", [a, b], s) == apply_op("bvadd", [a, apply_op("bvneg", [b], s)], s)
    assert apply_op("bvnot", [apply_op("bvnot", [a], s)], s) == a
    q, r = apply_op("bvudiv", [a, b], s), apply_op("bvurem", [a, b], s)
    if b:
        assert (q * b + r) & m == a


# --- an independent SMT solver as the semantic oracle, when installed

def test_semantics_against_cvc5():
    cvc5 = pytest.importorskip("cvc5")
    import itertools
    import random

    rng = random.Random(7)
    tm = cvc5.TermManager()
    solver = cvc5.Solver(tm)
    kinds = {
        "bvadd": cvc5.Kind.BITVECTOR_ADD, "bvsub": cvc5.Kind.BITVECTOR_SUB,
        "bvmul": cvc5.Kind.BITVECTOR_MULT, "bvudiv": cvc5.Kind.BITVECTOR_UDIV,
        "bvurem": cvc5.Kind.BITVECTOR_UREM, "bvshl": cvc5.Kind.BITVECTOR_SHL,
        "bvlshr": cvc5.Kind.BITVECTOR_LSHR, "bvashr": cvc5.Kind.BITVECTOR_ASHR,
        "bvand": cvc5.Kind.BITVECTOR_AND, "bvor": cvc5.Kind.BITVECTOR_OR,
        "bvxor": cvc5.Kind.BITVECTOR_XOR,
    }
    for (op, kind), w in itertools.product(kinds.items(), (3, 4)):
        for _ in range(12):
            a, b = rng.randrange(1 << w), rng.randrange(1 << w)
            if rng.random() < 0.25:
                b = 0
            t = tm.mkTerm(kind, tm.mkBitVector(w, a), tm.mkBitVector(w, b))
            want = int(solver.simplify(t).getBitVectorValue(10))
            assert apply_op(op, [a, b], BV(w)) == want, (op, w, a, b)
