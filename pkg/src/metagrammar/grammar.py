"""Concrete grammars: nonterminals with production lists."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .terms import Lit, Sort, SortError, Var, result_sort


@dataclass(frozen=True)
class Terminal:
    term: Var | Lit

    def __str__(self):
        return str(self.term)


@dataclass(frozen=True)
class Operator:
    op: str
    operands: tuple  # nonterminal names

    def __str__(self):
        return f"({self.op} {' '.join(self.operands)})"


Production = Terminal | Operator


def production_key(p: Production) -> tuple:
    """Canonical order: variables by name, literals by value, then operators by name."""
    if isinstance(p, Terminal):
        t = p.term
        if isinstance(t, Var):
            return (0, t.name, ())
        return (1, int(t.value), ())
    return (2, p.op, p.operands)


@dataclass(frozen=True)
class NonTerminal:
    name: str
    sort: Sort
    productions: tuple


class GrammarError(ValueError):
    pass


@dataclass(frozen=True)
class Grammar:
    """The first nonterminal is the start symbol, as in SyGuS-IF v2."""

    nonterminals: tuple

    @property
    def start(self) -> str:
        return self.nonterminals[0].name

    @property
    def start_sort(self) -> Sort:
        return self.nonterminals[0].sort

    @property
    def productions(self) -> dict[str, tuple]:
        return {nt.name: nt.productions for nt in self.nonterminals}

    def sorts(self) -> dict[str, Sort]:
        return {nt.name: nt.sort for nt in self.nonterminals}

    def __getitem__(self, name: str) -> NonTerminal:
        for nt in self.nonterminals:
            if nt.name == name:
                return nt
        raise KeyError(name)

    def validate(self, var_sorts: Mapping[str, Sort]) -> None:
        """Check that every production type-checks against the nonterminal sorts."""
        if not self.nonterminals:
            raise GrammarError("grammar has no nonterminals")
        nts = self.sorts()
        if len(nts) != len(self.nonterminals):
            raise GrammarError("duplicate nonterminal names")
        for nt in self.nonterminals:
            if not nt.productions:
                raise GrammarError(f"empty nonterminal {nt.name}")
            for p in nt.productions:
                if isinstance(p, Terminal):
                    t = p.term
                    s = t.sort if isinstance(t, Lit) else var_sorts.get(t.name)
                    if s is None:
                        raise GrammarError(f"{nt.name}: unknown variable {t.name!r}")
                else:
                    missing = [o for o in p.operands if o not in nts]
                    if missing:
                        raise GrammarError(f"{nt.name}: undeclared nonterminal(s) {missing}")
                    try:
                        s = result_sort(p.op, [nts[o] for o in p.operands])
                    except SortError as e:
                        raise GrammarError(f"{nt.name}: {e}") from None
                if s != nt.sort:
                    raise GrammarError(f"{nt.name}: production {p} has sort {s}, expected {nt.sort}")

    def reachable(self) -> list[str]:
        seen = [self.start]
        prods = self.productions
        i = 0
        while i < len(seen):
            for p in prods[seen[i]]:
                if isinstance(p, Operator):
                    for o in p.operands:
                        if o not in seen:
                            seen.append(o)
            i += 1
        return seen

    def productive(self) -> set[str]:
        """Nonterminals that derive at least one finite term."""
        done: set[str] = set()
        changed = True
        while changed:
            changed = False
            for nt in self.nonterminals:
                if nt.name in done:
                    continue
                if any(isinstance(p, Terminal) or all(o in done for o in p.operands) for p in nt.productions):
                    done.add(nt.name)
                    changed = True
        return done

    def production_set(self) -> set[tuple[str, str]]:
        return {(nt.name, str(p)) for nt in self.nonterminals for p in nt.productions}

    def render(self, indent: str = "  ") -> str:
        """SyGuS-IF v2 grammar block: predeclaration list then grouped rule list."""
        decls = " ".join(f"({nt.name} {nt.sort})" for nt in self.nonterminals)
        rules = f"\n{indent} ".join(
            f"({nt.name} {nt.sort} ({' '.join(map(str, nt.productions))}))" for nt in self.nonterminals
        )
        return f"{indent}({decls})\n{indent}({rules})"
