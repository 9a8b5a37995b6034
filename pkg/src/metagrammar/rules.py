"""Rules, metagrammars, grammar materialization and smaller neighbors.

A rule maps a synthesis problem to a set of productions; a metagrammar is a
set of rules whose union, applied to a problem, gives its concrete grammar.

Metagrammar files are s-expressions::

    (metagrammar <id>
      (<rule-id> <kind> <item>...)
      ...)

where ``kind`` is one of ``arguments``, ``constants`` (items ``0``/``1``),
``operators`` (bitvector operators or ``ite``), ``predicates``,
``bool-core`` (``true false not and or``) or ``constants-from-spec``.
Lines starting with ``;`` are comments.
"""
from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field

from .grammar import Grammar, NonTerminal, Operator, Terminal, production_key
from .problem import SynthProblem, extract_literals
from .sexpr import Atom, ParseError, SList, read_all
from .terms import (
    BOOL,
    BOOL_OPS,
    BV_BINARY,
    BV_PREDICATES,
    BV_UNARY,
    EQUALITY,
    Lit,
    Sort,
    Var,
)

log = logging.getLogger(__name__)

KINDS = ("arguments", "constants", "operators", "predicates", "bool-core", "constants-from-spec")
_CONST_ITEMS = ("0", "1")
_BOOL_CORE_ITEMS = ("true", "false") + BOOL_OPS
_OPERATOR_ITEMS = BV_UNARY + BV_BINARY + ("ite",)
_PREDICATE_ITEMS = EQUALITY + BV_PREDICATES

DEFAULT_LITERAL_CAP = 64


@dataclass(frozen=True)
class Rule:
    id: str
    kind: str
    items: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown rule kind {self.kind!r}")
        allowed = {
            "constants": _CONST_ITEMS,
            "operators": _OPERATOR_ITEMS,
            "predicates": _PREDICATE_ITEMS,
            "bool-core": _BOOL_CORE_ITEMS,
        }.get(self.kind, ())
        bad = [i for i in self.items if i not in allowed]
        if bad:
            raise ValueError(f"rule {self.id}: items {bad} not allowed for kind {self.kind}")

    def render(self) -> str:
        return " ".join(("(" + self.id, self.kind) + tuple(self.items)) + ")"


@dataclass(frozen=True)
class Metagrammar:
    id: str
    rules: tuple = field(default=())

    def __post_init__(self):
        rules = tuple(sorted(self.rules, key=lambda r: r.id))
        ids = [r.id for r in rules]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate rule ids in metagrammar {self.id}")
        object.__setattr__(self, "rules", rules)

    def __len__(self):
        return len(self.rules)

    @property
    def rule_ids(self) -> tuple:
        return tuple(r.id for r in self.rules)

    @property
    def fingerprint(self) -> str:
        """Hash of the rule contents; independent of the metagrammar id."""
        body = "\n".join(r.render() for r in self.rules)
        return hashlib.sha256(body.encode()).hexdigest()[:12]

    def without(self, rule_id: str) -> "Metagrammar":
        return Metagrammar(f"{self.id}/-{rule_id}", tuple(r for r in self.rules if r.id != rule_id))


# --------------------------------------------------------------- catalogs

def default_metagrammar(problem_sorts=frozenset({Sort("BitVec", 8)})) -> Metagrammar:
    """Rules reproducing a solver-style default grammar, split into removable groups."""
    if not problem_sorts:
        raise ValueError("problem_sorts must be nonempty")
    rules = [
        Rule("args", "arguments"),
        Rule("const01", "constants", _CONST_ITEMS),
        Rule("bool-core", "bool-core", ("true", "false", "not", "and", "or")),
        Rule("predicates-eq", "predicates", ("=",)),
    ]
    if any(s.is_bv for s in problem_sorts):
        rules += [
            Rule("bv-arith", "operators", ("bvadd", "bvsub", "bvmul", "bvudiv", "bvurem")),
            Rule("bv-bitwise", "operators", ("bvnot", "bvand", "bvor", "bvxor")),
            Rule("bv-shifts", "operators", ("bvshl", "bvlshr", "bvashr")),
            Rule("ite", "operators", ("ite",)),
            Rule("predicates-cmp", "predicates", ("bvult", "bvule", "bvslt", "bvsle")),
        ]
    return Metagrammar("default", tuple(rules))


def enhanced_metagrammar(problem_sorts=frozenset({Sort("BitVec", 8)})) -> Metagrammar:
    base = default_metagrammar(problem_sorts)
    return Metagrammar("enhanced", base.rules + (Rule("constants-from-spec", "constants-from-spec"),))


def reduced_metagrammar() -> Metagrammar:
    """A small learned rule set: arguments, the constant 1, six operators,
    two predicates and a trimmed Boolean core."""
    return Metagrammar("reduced", (
        Rule("args", "arguments"),
        Rule("const-one", "constants", ("1",)),
        Rule("ops", "operators", ("ite", "bvnot", "bvor", "bvadd", "bvlshr", "bvshl")),
        Rule("preds", "predicates", ("=", "bvult")),
        Rule("bool-core", "bool-core", ("true", "not", "and", "or")),
    ))


BUILTIN = {
    "default": default_metagrammar,
    "enhanced": enhanced_metagrammar,
    "reduced": reduced_metagrammar,
}


# --------------------------------------------------------- materialization

class MaterializationError(ValueError):
    pass


def nonterminal_names(p: SynthProblem) -> list[tuple[str, Sort]]:
    """``Start`` for the return sort, ``BV<w>`` for other widths, ``B`` for Bool."""
    ret = p.target.return_sort
    out = [("Start", ret)]
    widths = sorted({s.width for s in p.signature_sorts() if s.is_bv and s != ret})
    out += [(f"BV{w}", Sort("BitVec", w)) for w in widths]
    if ret != BOOL:
        out.append(("B", BOOL))
    return out


def _const(sort: Sort, item: str) -> Lit:
    if sort.is_bv:
        return Lit(sort, int(item))
    return Lit(BOOL, item == "1")


def materialize(m: Metagrammar, p: SynthProblem, literal_cap: int = DEFAULT_LITERAL_CAP) -> Grammar:
    nts = nonterminal_names(p)
    name_of = {s: n for n, s in nts}
    bv_nts = [n for n, s in nts if s.is_bv]
    b = name_of[BOOL]
    relevant = p.signature_sorts()
    prods: dict[str, set] = {n: set() for n, _ in nts}

    for rule in m.rules:
        if rule.kind == "arguments":
            for name, s in p.target.params:
                prods[name_of[s]].add(Terminal(Var(name)))
        elif rule.kind == "constants":
            for n, s in nts:
                for item in rule.items:
                    prods[n].add(Terminal(_const(s, item)))
        elif rule.kind == "operators":
            for n in bv_nts:
                for op in rule.items:
                    if op == "ite":
                        prods[n].add(Operator("ite", (b, n, n)))
                    elif op in BV_UNARY:
                        prods[n].add(Operator(op, (n,)))
                    else:
                        prods[n].add(Operator(op, (n, n)))
        elif rule.kind == "predicates":
            for n, s in nts:
                if s not in relevant:
                    continue
                for op in rule.items:
                    if s.is_bv or op in EQUALITY:
                        prods[b].add(Operator(op, (n, n)))
        elif rule.kind == "bool-core":
            for item in rule.items:
                if item in ("true", "false"):
                    prods[b].add(Terminal(Lit(BOOL, item == "true")))
                elif item == "not":
                    prods[b].add(Operator("not", (b,)))
                else:
                    prods[b].add(Operator(item, (b, b)))
        elif rule.kind == "constants-from-spec":
            by_sort: dict[Sort, list] = {}
            for s, v in extract_literals(p):
                if s in name_of:
                    by_sort.setdefault(s, []).append(v)
            for s, values in by_sort.items():
                for v in sorted(values)[:literal_cap]:
                    prods[name_of[s]].add(Terminal(Lit(s, v)))

    full = Grammar(tuple(NonTerminal(n, s, tuple(sorted(prods[n], key=production_key))) for n, s in nts))
    # drop what derives no finite term, then what is no longer reachable
    live = full.productive()
    empty = [n for n in full.reachable() if n not in live]
    if full.start not in live:
        raise MaterializationError(f"empty nonterminal(s): {', '.join(empty)}")
    if empty:
        log.debug("dropping unproductive nonterminal(s) %s", empty)
    pruned = Grammar(tuple(
        NonTerminal(nt.name, nt.sort, tuple(
            p for p in nt.productions if isinstance(p, Terminal) or all(o in live for o in p.operands)))
        for nt in full.nonterminals if nt.name in live
    ))
    keep = pruned.reachable()
    g = Grammar(tuple(nt for nt in pruned.nonterminals if nt.name in keep))
    g.validate(dict(p.target.params))
    return g


def neighbors(m: Metagrammar) -> list[Metagrammar]:
    """Every metagrammar missing exactly one rule of ``m``, in canonical rule order."""
    return [m.without(r.id) for r in m.rules]


# ----------------------------------------------------------- serialization

def dumps_metagrammar(m: Metagrammar) -> str:
    lines = [f"(metagrammar {m.id}"]
    lines += [f"  {r.render()}" for r in m.rules]
    return "\n".join(lines) + ")\n"


def loads_metagrammar(text: str) -> Metagrammar:
    forms = read_all(text)
    if len(forms) != 1 or not isinstance(forms[0], SList) or len(forms[0]) < 2 or forms[0][0] != "metagrammar":
        raise ParseError("expected a single (metagrammar <id> rule...) form")
    form = forms[0]
    rules = []
    for r in form[2:]:
        if not isinstance(r, SList) or len(r) < 2 or not all(isinstance(a, Atom) for a in r):
            raise ParseError("malformed rule", getattr(r, "pos", None))
        try:
            rules.append(Rule(str(r[0]), str(r[1]), tuple(str(a) for a in r[2:])))
        except ValueError as e:
            raise ParseError(str(e), r.pos) from None
    try:
        return Metagrammar(str(form[1]), tuple(rules))
    except ValueError as e:
        raise ParseError(str(e), form.pos) from None
