"""Sorts, terms, the bitvector operator table and scalar evaluation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence, Union


@dataclass(frozen=True, order=True)
class Sort:
    kind: str  # "BitVec" or "Bool"
    width: int = 0

    def __post_init__(self):
        if self.kind == "BitVec":
            if self.width < 1:
                raise ValueError(f"bitvector width must be >= 1, got {self.width}")
        elif self.kind == "Bool":
            if self.width != 0:
                raise ValueError("Bool sort has no width")
        else:
            raise ValueError(f"unknown sort kind {self.kind!r}")

    @property
    def is_bv(self) -> bool:
        return self.kind == "BitVec"

    @property
    def size(self) -> int:
        """Number of values inhabiting the sort."""
        return 2 if self.kind == "Bool" else 1 << self.width

    def __str__(self):
        return f"(_ BitVec {self.width})" if self.is_bv else "Bool"


BOOL = Sort("Bool")


def BV(width: int) -> Sort:
    return Sort("BitVec", width)


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Lit:
    sort: Sort
    value: int | bool

    def __post_init__(self):
        if self.sort.is_bv:
            if isinstance(self.value, bool) or not 0 <= self.value < (1 << self.sort.width):
                raise ValueError(f"literal {self.value!r} does not fit {self.sort}")
        elif not isinstance(self.value, bool):
            raise ValueError(f"Bool literal must be True/False, got {self.value!r}")

    def __str__(self):
        return format_literal(self.sort, self.value)


@dataclass(frozen=True)
class App:
    op: str
    args: tuple

    def __str__(self):
        if not self.args:
            return self.op
        return f"({self.op} {' '.join(map(str, self.args))})"


Term = Union[Var, Lit, App]


def format_literal(sort: Sort, value) -> str:
    if not sort.is_bv:
        return "true" if value else "false"
    if sort.width % 4 == 0:
        return "#x" + format(value, f"0{sort.width // 4}x")
    return "#b" + format(value, f"0{sort.width}b")


# ---------------------------------------------------------------- operators

BV_UNARY = ("bvnot", "bvneg")
BV_BINARY = (
    "bvand", "bvor", "bvxor", "bvadd", "bvsub", "bvmul",
    "bvudiv", "bvurem", "bvshl", "bvlshr", "bvashr",
)
BV_PREDICATES = ("bvult", "bvule", "bvugt", "bvuge", "bvslt", "bvsle")
EQUALITY = ("=", "distinct")
BOOL_OPS = ("not", "and", "or", "xor", "=>")
# n-ary (left/right associative) in SMT-LIB; grammars only use them binary
VARIADIC = ("and", "or", "xor", "=>")

OPERATORS = frozenset(BV_UNARY + BV_BINARY + BV_PREDICATES + EQUALITY + BOOL_OPS + ("ite",))


class SortError(TypeError):
    pass


def result_sort(op: str, arg_sorts: Sequence[Sort]) -> Sort:
    """Sort of ``(op args...)``; raises SortError on arity or sort mismatch."""
    n = len(arg_sorts)

    def need(k):
        if n != k:
            raise SortError(f"{op} expects {k} argument(s), got {n}")

    def same_bv():
        if not arg_sorts[0].is_bv or any(s != arg_sorts[0] for s in arg_sorts):
            raise SortError(f"{op} expects bitvectors of equal width, got {', '.join(map(str, arg_sorts))}")

    if op in BV_UNARY:
        need(1)
        same_bv()
        return arg_sorts[0]
    if op in BV_BINARY:
        need(2)
        same_bv()
        return arg_sorts[0]
    if op in BV_PREDICATES:
        need(2)
        same_bv()
        return BOOL
    if op in EQUALITY:
        need(2)
        if arg_sorts[0] != arg_sorts[1]:
            raise SortError(f"{op} on mismatched sorts {arg_sorts[0]} and {arg_sorts[1]}")
        return BOOL
    if op == "not":
        need(1)
    elif op in VARIADIC:
        if n < 2:
            raise SortError(f"{op} expects at least 2 arguments, got {n}")
    elif op == "ite":
        need(3)
        if arg_sorts[0] != BOOL:
            raise SortError("ite condition must be Bool")
        if arg_sorts[1] != arg_sorts[2]:
            raise SortError(f"ite branches differ: {arg_sorts[1]} vs {arg_sorts[2]}")
        return arg_sorts[1]
    else:
        raise SortError(f"unknown operator {op!r}")
    if any(s != BOOL for s in arg_sorts):
        raise SortError(f"{op} expects Bool arguments")
    return BOOL


def _signed(x: int, w: int) -> int:
    return x - (1 << w) if x >> (w - 1) else x


def apply_op(op: str, args: Sequence, sort: Sort | None) -> int | bool:
    """Apply a theory operator to concrete values.

    ``sort`` is the sort of the first argument (needed for widths).
    """
    if op in BOOL_OPS:
        if op == "not":
            return not args[0]
        if op == "and":
            return all(args)
        if op == "or":
            return any(args)
        if op == "xor":
            acc = False
            for a in args:
                acc ^= bool(a)
            return acc
        acc = args[-1]  # => is right associative
        for a in reversed(args[:-1]):
            acc = (not a) or acc
        return acc
    if op == "ite":
        return args[1] if args[0] else args[2]
    if op == "=":
        return args[0] == args[1]
    if op == "distinct":
        return args[0] != args[1]
    w = sort.width
    mask = (1 << w) - 1
    a = args[0]
    if op == "bvnot":
        return ~a & mask
    if op == "bvneg":
        return -a & mask
    b = args[1]
    if op == "bvand":
        return a & b
    if op == "bvor":
        return a | b
    if op == "bvxor":
        return a ^ b
    if op == "bvadd":
        return (a + b) & mask
    if op == "bvsub":
        return (a - b) & mask
    if op == "bvmul":
        return (a * b) & mask
    if op == "bvudiv":
        return mask if b == 0 else a // b
    if op == "bvurem":
        return a if b == 0 else a % b
    if op == "bvshl":
        return 0 if b >= w else (a << b) & mask
    if op == "bvlshr":
        return 0 if b >= w else a >> b
    if op == "bvashr":
        return (_signed(a, w) >> min(b, w)) & mask
    if op == "bvult":
        return a < b
    if op == "bvule":
        return a <= b
    if op == "bvugt":
        return a > b
    if op == "bvuge":
        return a >= b
    if op == "bvslt":
        return _signed(a, w) < _signed(b, w)
    if op == "bvsle":
        return _signed(a, w) <= _signed(b, w)
    raise SortError(f"unknown operator {op!r}")


# ------------------------------------------------------------ functions

@dataclass(frozen=True)
class FunctionSignature:
    name: str
    params: tuple  # of (name, Sort)
    return_sort: Sort

    def __post_init__(self):
        names = [n for n, _ in self.params]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate parameter names in {self.name}")

    @property
    def param_names(self) -> tuple:
        return tuple(n for n, _ in self.params)

    @property
    def param_sorts(self) -> tuple:
        return tuple(s for _, s in self.params)


@dataclass(frozen=True)
class FunctionDef:
    """A ``define-fun``: a signature plus a closed body over its parameters."""

    signature: FunctionSignature
    body: Term

    @property
    def name(self) -> str:
        return self.signature.name


class EvalError(RuntimeError):
    pass


def eval_term(
    t: Term,
    env: Mapping[str, int | bool],
    helpers: Mapping[str, FunctionDef] | Sequence[FunctionDef] = (),
    candidate: tuple[FunctionSignature, Term] | None = None,
    sorts: Mapping[str, Sort] | None = None,
):
    """Evaluate ``t`` under SMT-LIB semantics.

    Environment values are either ``Lit`` objects or plain ints/bools whose
    sorts are given in ``sorts``. ``candidate`` binds the synthesis target to a
    body so applications of it can be evaluated.
    """
    if not isinstance(helpers, Mapping):
        helpers = {h.name: h for h in helpers}
    typed = {}
    for name, v in env.items():
        if isinstance(v, Lit):
            typed[name] = (v.value, v.sort)
        elif sorts is not None and name in sorts:
            typed[name] = (v, sorts[name])
        elif isinstance(v, bool):
            typed[name] = (v, BOOL)
        else:
            raise EvalError(f"no sort known for variable {name!r}")
    return _Evaluator(helpers, candidate).run(t, typed)


class _Evaluator:
    def __init__(self, helpers, candidate):
        self.helpers = helpers
        self.candidate = candidate

    def run(self, t, env):
        value, _ = self.eval(t, env)
        return value

    def eval(self, t, env) -> tuple:
        # returns (value, sort)
        if isinstance(t, Lit):
            return t.value, t.sort
        if isinstance(t, Var):
            if t.name not in env:
                raise EvalError(f"unbound symbol {t.name!r}")
            return env[t.name]
        if not isinstance(t, App):
            raise EvalError(f"not a term: {t!r}")
        vals = [self.eval(a, env) for a in t.args]
        fn = None
        if self.candidate is not None and t.op == self.candidate[0].name:
            fn = FunctionDef(*self.candidate)
        elif t.op in self.helpers:
            fn = self.helpers[t.op]
        if fn is not None:
            sig = fn.signature
            if len(vals) != len(sig.params):
                raise EvalError(f"{t.op} expects {len(sig.params)} argument(s), got {len(vals)}")
            inner = {n: (v, s) for (n, s), (v, _) in zip(sig.params, vals)}
            value, _ = self.eval(fn.body, inner)
            return value, sig.return_sort
        if t.op not in OPERATORS:
            raise EvalError(f"unbound symbol {t.op!r}")
        sorts = [s for _, s in vals]
        try:
            rs = result_sort(t.op, sorts)
        except SortError as e:
            raise EvalError(str(e)) from None
        return apply_op(t.op, [v for v, _ in vals], sorts[0] if sorts else None), rs


def term_size(t: Term) -> int:
    if isinstance(t, App):
        return 1 + sum(term_size(a) for a in t.args)
    return 1


def walk(t: Term):
    """Pre-order traversal of all subterms."""
    stack = [t]
    while stack:
        u = stack.pop()
        yield u
        if isinstance(u, App):
            stack.extend(reversed(u.args))


def substitute(t: Term, mapping: Mapping[str, Term]) -> Term:
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    if isinstance(t, App):
        return App(t.op, tuple(substitute(a, mapping) for a in t.args))
    return t


def sort_of(
    t: Term,
    var_sorts: Mapping[str, Sort],
    functions: Mapping[str, FunctionSignature] = {},
) -> Sort:
    """Type-check ``t``; raises SortError if ill-sorted."""
    if isinstance(t, Lit):
        return t.sort
    if isinstance(t, Var):
        if t.name not in var_sorts:
            raise SortError(f"unbound symbol {t.name!r}")
        return var_sorts[t.name]
    arg_sorts = [sort_of(a, var_sorts, functions) for a in t.args]
    if t.op in functions:
        sig = functions[t.op]
        if tuple(arg_sorts) != sig.param_sorts:
            raise SortError(f"{t.op} applied to ({' '.join(map(str, arg_sorts))}), expects "
                            f"({' '.join(map(str, sig.param_sorts))})")
        return sig.return_sort
    return result_sort(t.op, arg_sorts)

