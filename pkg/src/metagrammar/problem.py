"""SyGuS-IF v2 problems: parsing, printing and literal extraction.

Supported fragment: ``set-logic``, ``synth-fun`` (optionally with a grammar
whose productions are terminals or single operator applications over
nonterminals), ``declare-var``, ``define-fun``, ``constraint`` and
``check-synth``, over ``Bool`` and ``(_ BitVec w)``. ``set-option`` and
``set-info`` are accepted and dropped. Anything else raises
:class:`UnsupportedError` so corpus scans can skip it.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace

from .grammar import Grammar, GrammarError, NonTerminal, Operator, Terminal
from .sexpr import Atom, ParseError, SList, UnsupportedError, position, read_all
from .terms import (
    BOOL,
    BV,
    OPERATORS,
    App,
    FunctionDef,
    FunctionSignature,
    Lit,
    Sort,
    SortError,
    Term,
    Var,
    sort_of,
    walk,
)

__all__ = [
    "SynthProblem",
    "ParseError",
    "UnsupportedError",
    "parse_problem",
    "print_problem",
    "extract_literals",
    "parse_term",
    "problem_id",
]


@dataclass(frozen=True)
class SynthProblem:
    logic: str
    target: FunctionSignature
    universal_vars: tuple  # of (name, Sort)
    helper_defs: tuple  # of FunctionDef
    constraints: tuple  # of Bool terms
    attached_grammar: Grammar | None = None

    @property
    def var_sorts(self) -> dict[str, Sort]:
        return dict(self.universal_vars)

    @property
    def helpers(self) -> dict[str, FunctionDef]:
        return {h.name: h for h in self.helper_defs}

    def functions(self) -> dict[str, FunctionSignature]:
        fns = {h.name: h.signature for h in self.helper_defs}
        fns[self.target.name] = self.target
        return fns

    def signature_sorts(self) -> set[Sort]:
        return set(self.target.param_sorts) | {self.target.return_sort}

    def with_grammar(self, grammar: Grammar | None) -> "SynthProblem":
        return replace(self, attached_grammar=grammar)

    def validate(self) -> None:
        fns = self.functions()
        vs = self.var_sorts
        for name in fns:
            if name in OPERATORS:
                raise ParseError(f"function name {name!r} shadows a theory operator")
        for h in self.helper_defs:
            if sort_of(h.body, dict(h.signature.params), fns) != h.signature.return_sort:
                raise ParseError(f"body of {h.name} does not have its declared sort")
        for c in self.constraints:
            if sort_of(c, vs, fns) != BOOL:
                raise ParseError(f"constraint {c} is not Bool")
        if self.attached_grammar is not None:
            g = self.attached_grammar
            if g.start_sort != self.target.return_sort:
                raise ParseError("grammar start sort differs from the return sort")
            try:
                g.validate(dict(self.target.params))
            except GrammarError as e:
                raise ParseError(str(e)) from None


# ------------------------------------------------------------------ parsing

def _sym(x, what="symbol") -> str:
    if not isinstance(x, Atom) or x.startswith('"'):
        raise ParseError(f"expected {what}", position(x))
    return str(x)


def parse_sort(x) -> Sort:
    if isinstance(x, Atom):
        if x == "Bool":
            return BOOL
        if x in ("Int", "Real", "String"):
            raise UnsupportedError(f"unsupported sort {x}", x.pos)
        raise UnsupportedError(f"unknown sort {x}", x.pos)
    if len(x) == 3 and x[0] == "_" and x[1] == "BitVec":
        try:
            width = int(x[2])
        except ValueError:
            raise ParseError("bad bitvector width", position(x)) from None
        if width < 1:
            raise ParseError("bitvector width must be positive", position(x))
        return BV(width)
    raise UnsupportedError(f"unsupported sort {_show(x)}", position(x))


def _literal(a: Atom) -> Lit | None:
    if a == "true":
        return Lit(BOOL, True)
    if a == "false":
        return Lit(BOOL, False)
    if a.startswith("#b"):
        digits = a[2:]
        if not digits or set(digits) - {"0", "1"}:
            raise ParseError(f"bad binary literal {a}", a.pos)
        return Lit(BV(len(digits)), int(digits, 2))
    if a.startswith("#x"):
        digits = a[2:]
        try:
            return Lit(BV(4 * len(digits)), int(digits, 16))
        except ValueError:
            raise ParseError(f"bad hex literal {a}", a.pos) from None
    if a[0].isdigit():
        raise UnsupportedError(f"integer literal {a}", a.pos)
    if a.startswith('"'):
        raise UnsupportedError("string literal", a.pos)
    return None


def parse_term(x, scope: dict, functions: dict) -> Term:
    """Parse an s-expression into a term; ``let`` bindings are expanded in place.

    ``scope`` maps in-scope names to either a ``Sort`` (a variable) or a
    ``Term`` (a let binding).
    """
    if isinstance(x, Atom):
        lit = _literal(x)
        if lit is not None:
            return lit
        if x in scope:
            v = scope[x]
            return v if not isinstance(v, Sort) else Var(str(x))
        if x in functions and not functions[x].params:
            return App(str(x), ())
        raise ParseError(f"unbound symbol {x!r}", x.pos)
    if not x:
        raise ParseError("empty application", position(x))
    head = x[0]
    if isinstance(head, SList):
        if len(head) == 3 and head[0] == "_" and isinstance(head[1], Atom) and head[1].startswith("bv"):
            # (_ bvN w) is a single literal, not an application
            raise ParseError("indexed literal applied to arguments", position(x))
        raise UnsupportedError(f"unsupported indexed operator {_show(head)}", position(x))
    if head == "_":
        if len(x) == 3 and isinstance(x[1], Atom) and x[1].startswith("bv") and x[1][2:].isdigit():
            w = int(x[2])
            v = int(x[1][2:])
            if v >= 1 << w:
                raise ParseError(f"literal {v} does not fit width {w}", position(x))
            return Lit(BV(w), v)
        raise UnsupportedError(f"unsupported indexed term {_show(x)}", position(x))
    if head == "let":
        if len(x) != 3 or not isinstance(x[1], SList):
            raise ParseError("malformed let", position(x))
        inner = dict(scope)
        for b in x[1]:
            if not isinstance(b, SList) or len(b) != 2:
                raise ParseError("malformed let binding", position(b))
            inner[_sym(b[0])] = parse_term(b[1], scope, functions)
        return parse_term(x[2], inner, functions)
    if head in ("forall", "exists", "!"):
        raise UnsupportedError(f"unsupported binder {head}", position(x))
    op = _sym(head, "operator")
    if op not in OPERATORS and op not in functions:
        raise UnsupportedError(f"unsupported or unknown operator {op!r}", position(x))
    return App(op, tuple(parse_term(a, scope, functions) for a in x[1:]))


def _params(x) -> tuple:
    if not isinstance(x, SList):
        raise ParseError("expected parameter list", position(x))
    out = []
    for p in x:
        if not isinstance(p, SList) or len(p) != 2:
            raise ParseError("expected (name sort)", position(p))
        out.append((_sym(p[0]), parse_sort(p[1])))
    return tuple(out)


def _parse_grammar(decls, rules, sig: FunctionSignature) -> Grammar:
    if not isinstance(decls, SList) or not isinstance(rules, SList):
        raise ParseError("malformed grammar", position(decls))
    declared = []
    for d in decls:
        if not isinstance(d, SList) or len(d) != 2:
            raise ParseError("malformed nonterminal declaration", position(d))
        declared.append((_sym(d[0]), parse_sort(d[1])))
    names = [n for n, _ in declared]
    if len(rules) != len(declared):
        raise ParseError("grammar rule list does not match declarations", position(rules))
    params = dict(sig.params)
    nts = []
    for (name, sort), r in zip(declared, rules):
        if not isinstance(r, SList) or len(r) != 3 or r[0] != name or parse_sort(r[1]) != sort:
            raise ParseError(f"grammar rule for {name} malformed or out of order", position(r))
        prods = []
        for p in r[2]:
            if isinstance(p, Atom):
                if p in names:
                    raise UnsupportedError("chain productions are not supported", p.pos)
                lit = _literal(p)
                if lit is not None:
                    prods.append(Terminal(lit))
                elif p in params:
                    prods.append(Terminal(Var(str(p))))
                else:
                    raise UnsupportedError(f"unsupported grammar terminal {p!r}", p.pos)
                continue
            if p and p[0] == "_":
                prods.append(Terminal(parse_term(p, {}, {})))
                continue
            if p and p[0] in ("Constant", "Variable"):
                raise UnsupportedError(f"{p[0]} grammar terms are not supported", position(p))
            op = _sym(p[0], "operator")
            if op not in OPERATORS:
                raise UnsupportedError(f"unsupported grammar operator {op!r}", position(p))
            operands = []
            for o in p[1:]:
                if not isinstance(o, Atom) or o not in names:
                    raise UnsupportedError("nested grammar productions are not supported", position(o))
                operands.append(str(o))
            prods.append(Operator(op, tuple(operands)))
        nts.append(NonTerminal(name, sort, tuple(prods)))
    return Grammar(tuple(nts))


def _show(x) -> str:
    if isinstance(x, list):
        return "(" + " ".join(_show(y) for y in x) + ")"
    return str(x)


def parse_problem(text: str) -> SynthProblem:
    """Parse and validate SyGuS-IF v2 text.

    Raises ParseError for malformed input and its subclass UnsupportedError
    for constructs outside the supported fragment.
    """
    try:
        return _parse_problem(text)
    except ParseError:
        raise
    except ValueError as e:  # sort/literal/signature constructors
        raise ParseError(str(e)) from None


def _parse_problem(text: str) -> SynthProblem:
    logic = None
    target = None
    grammar = None
    uvars: list = []
    helpers: list = []
    constraints: list = []
    functions: dict[str, FunctionSignature] = {}
    scope: dict = {}
    checked = False
    for cmd in read_all(text):
        if not isinstance(cmd, SList) or not cmd or not isinstance(cmd[0], Atom):
            raise ParseError("expected a command", position(cmd))
        if checked:
            raise ParseError("command after check-synth", cmd.pos)
        name = cmd[0]
        if name == "set-logic":
            if len(cmd) != 2:
                raise ParseError("malformed set-logic", cmd.pos)
            logic = _sym(cmd[1])
            if logic not in ("BV", "QF_BV", "ALL"):
                raise UnsupportedError(f"unsupported logic {logic}", cmd.pos)
        elif name in ("set-option", "set-info", "set-feature"):
            continue
        elif name == "synth-fun":
            if target is not None:
                raise UnsupportedError("multiple synth-fun commands", cmd.pos)
            if len(cmd) not in (4, 6):
                raise ParseError("malformed synth-fun", cmd.pos)
            target = FunctionSignature(_sym(cmd[1]), _params(cmd[2]), parse_sort(cmd[3]))
            if len(cmd) == 6:
                grammar = _parse_grammar(cmd[4], cmd[5], target)
            functions[target.name] = target
        elif name == "declare-var":
            if len(cmd) != 3:
                raise ParseError("malformed declare-var", cmd.pos)
            v = _sym(cmd[1])
            if v in scope:
                raise ParseError(f"variable {v} declared twice", cmd.pos)
            s = parse_sort(cmd[2])
            uvars.append((v, s))
            scope[v] = s
        elif name == "define-fun":
            if len(cmd) != 5:
                raise ParseError("malformed define-fun", cmd.pos)
            sig = FunctionSignature(_sym(cmd[1]), _params(cmd[2]), parse_sort(cmd[3]))
            body = parse_term(cmd[4], dict(sig.params), functions)
            helpers.append(FunctionDef(sig, body))
            functions[sig.name] = sig
        elif name == "constraint":
            if len(cmd) != 2:
                raise ParseError("malformed constraint", cmd.pos)
            constraints.append(parse_term(cmd[1], scope, functions))
        elif name == "check-synth":
            checked = True
        elif name in ("inv-constraint", "synth-inv", "declare-datatype", "declare-datatypes",
                      "declare-primed-var", "declare-fun", "oracle-constraint", "declare-oracle-fun",
                      "assume", "chc-constraint", "optimize-synth"):
            raise UnsupportedError(f"unsupported command {name}", cmd.pos)
        else:
            raise ParseError(f"unknown command {name}", cmd.pos)
    if not checked:
        raise ParseError("missing check-synth")
    if target is None:
        raise ParseError("missing synth-fun")
    p = SynthProblem(
        logic=logic or "BV",
        target=target,
        universal_vars=tuple(uvars),
        helper_defs=tuple(helpers),
        constraints=tuple(constraints),
        attached_grammar=grammar,
    )
    try:
        p.validate()
    except SortError as e:
        raise ParseError(f"ill-sorted term: {e}") from None
    return p


# ----------------------------------------------------------------- printing

def _params_text(params) -> str:
    return "(" + " ".join(f"({n} {s})" for n, s in params) + ")"


def print_problem(p: SynthProblem) -> str:
    lines = [f"(set-logic {p.logic})"]
    for h in p.helper_defs:
        sig = h.signature
        lines.append(f"(define-fun {sig.name} {_params_text(sig.params)} {sig.return_sort} {h.body})")
    t = p.target
    head = f"(synth-fun {t.name} {_params_text(t.params)} {t.return_sort}"
    if p.attached_grammar is None:
        lines.append(head + ")")
    else:
        lines.append(head + "\n" + p.attached_grammar.render() + ")")
    for n, s in p.universal_vars:
        lines.append(f"(declare-var {n} {s})")
    for c in p.constraints:
        lines.append(f"(constraint {c})")
    lines.append("(check-synth)")
    return "\n".join(lines) + "\n"


def extract_literals(p: SynthProblem) -> set[tuple[Sort, int | bool]]:
    """All literal occurrences in constraints and helper bodies, deduplicated by (sort, value)."""
    found = set()
    for root in list(p.constraints) + [h.body for h in p.helper_defs]:
        for t in walk(root):
            if isinstance(t, Lit):
                found.add((t.sort, t.value))
    return found


def problem_id(p: SynthProblem) -> str:
    """Content hash of the canonical printed form."""
    return hashlib.sha256(print_problem(p).encode()).hexdigest()[:16]
