"""Solving grammar-restricted synthesis problems.

Two back ends: an external SyGuS-IF v2 solver run as a subprocess, and a
built-in bottom-up enumerator that prunes by observational equivalence over
the target's full (small) input domain. ``run_batch`` runs many jobs with
bounded parallelism.
"""
from __future__ import annotations

import hashlib
import itertools
import logging
import os
import shlex
import subprocess
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grammar import Grammar, Operator, Terminal
from .problem import SynthProblem, parse_term, print_problem
from .sexpr import ParseError, SList, read_all
from .terms import App, Term, Var, eval_term, substitute
from .vector import ConstraintChecker, DomainTooLarge, constant, domain_arrays, vec_apply

log = logging.getLogger(__name__)

SOLVED, TIMEOUT, ERROR, INFEASIBLE = "solved", "timeout", "error", "infeasible"
KILL_GRACE_SECONDS = 2.0
MAX_BANK_BYTES = 1 << 30  # stored candidate values per enumeration


@dataclass(frozen=True)
class RunLimits:
    timeout_seconds: float = 300.0
    max_parallel: int = 20

    def __post_init__(self):
        if self.timeout_seconds <= 0:
            raise ValueError("timeout_seconds must be positive")
        if self.max_parallel < 1:
            raise ValueError("max_parallel must be >= 1")


@dataclass(frozen=True)
class Builtin:
    max_term_size: int = 9
    max_candidates: int = 200_000

    def __post_init__(self):
        if self.max_term_size < 1 or self.max_candidates < 1:
            raise ValueError("builtin budgets must be positive")

    @property
    def id(self) -> str:
        return f"builtin(size={self.max_term_size},candidates={self.max_candidates})"


@dataclass(frozen=True)
class External:
    command: str
    dialect: str = "sygus-v2"
    keep_files: bool = False

    def __post_init__(self):
        if self.command.count("{input}") != 1:
            raise ValueError("command template must contain exactly one {input} placeholder")

    @property
    def id(self) -> str:
        return f"external({self.command})"


SolverSpec = Builtin | External


@dataclass(frozen=True)
class SolveOutcome:
    status: str
    runtime_seconds: float = 0.0
    cost: int = 0
    solution: Term | None = None
    message: str = ""

    @property
    def solved(self) -> bool:
        return self.status == SOLVED


# ------------------------------------------------------------ verification

@dataclass(frozen=True)
class Verdict:
    counterexample: dict | None = None

    @property
    def ok(self) -> bool:
        return self.counterexample is None

    def __bool__(self):
        return self.ok


def verify(candidate: Term, p: SynthProblem) -> Verdict:
    """Check every constraint at every assignment of the universal variables.

    Uses the scalar evaluator, independently of the enumerator's vectorized
    path. Returns the first failing assignment in lexicographic order.
    """
    domain_arrays(p.universal_vars)  # enforces the size precondition
    names = [n for n, _ in p.universal_vars]
    sorts = p.var_sorts
    ranges = [range(s.size) for _, s in p.universal_vars]
    helpers = p.helpers
    for values in itertools.product(*ranges):
        env = {
            n: (bool(v) if sorts[n].kind == "Bool" else v) for n, v in zip(names, values)
        }
        for c in p.constraints:
            if not eval_term(c, env, helpers, (p.target, candidate), sorts=sorts):
                return Verdict(env)
    return Verdict()


# ------------------------------------------------------------- enumeration

def _compositions(total: int, parts: int):
    """Ordered ways to write ``total`` as ``parts`` positive integers, lexicographic."""
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def enumerate_solve(
    p: SynthProblem,
    g: Grammar,
    max_term_size: int = 9,
    max_candidates: int = 200_000,
    deadline: float | None = None,
) -> SolveOutcome:
    """Bottom-up enumeration by term size with observational-equivalence pruning.

    Within a size, nonterminals and their productions are visited in grammar
    order and operand sizes in lexicographic order. ``cost`` counts every
    term constructed, pruned or not, up to and including the solution.
    """
    t0 = time.monotonic()
    try:
        params, n = domain_arrays(p.target.params)
        checker = ConstraintChecker(p)
    except DomainTooLarge as e:
        return SolveOutcome(ERROR, time.monotonic() - t0, 0, None, str(e))

    keep = g.reachable()
    nts = [nt for nt in g.nonterminals if nt.name in keep]
    sorts = {nt.name: nt.sort for nt in nts}
    start = g.start
    # bank[nt][size] = (terms, values) with values of shape (len(terms), n)
    bank: dict[str, dict[int, tuple]] = {nt.name: {} for nt in nts}
    seen: dict[str, set] = {nt.name: set() for nt in nts}
    max_arity = max((len(pr.operands) for nt in nts for pr in nt.productions if isinstance(pr, Operator)), default=0)
    cost = 0
    last_new = 0
    stored = 0

    def done(status, solution=None, message=""):
        return SolveOutcome(status, time.monotonic() - t0, cost, solution, message)

    for size in range(1, max_term_size + 1):
        fresh: dict[str, tuple[list, list]] = {}
        for nt in nts:
            terms, values = fresh.setdefault(nt.name, ([], []))
            known = seen[nt.name]
            for prod in nt.productions:
                for build, block in _expand(prod, size, bank, sorts, params, n):
                    if deadline is not None and time.monotonic() > deadline:
                        return done(TIMEOUT, message="deadline reached")
                    exhausted = len(block) > max_candidates - cost
                    if exhausted:
                        block = block[: max_candidates - cost]
                    new = []
                    for i, key in enumerate(_row_keys(block)):
                        if key not in known:
                            known.add(key)
                            new.append(i)
                    if new:
                        last_new = size
                        rows = block[new]
                        if nt.name == start:
                            hits = np.flatnonzero(checker.holds_batch(rows))
                            if len(hits):
                                i = new[hits[0]]
                                cost += i + 1
                                term = _to_term((build, i))
                                if not verify(term, p):
                                    return done(ERROR, message=f"internal: enumerated {term} failed verification")
                                return done(SOLVED, term)
                        terms.extend((build, i) for i in new)
                        values.append(rows)
                        stored += rows.nbytes
                        if stored > MAX_BANK_BYTES:
                            return done(INFEASIBLE, message="memory budget exhausted")
                    cost += len(block)
                    if exhausted:
                        return done(INFEASIBLE, message="candidate budget exhausted")
        for name, (terms, values) in fresh.items():
            if terms:
                bank[name][size] = (terms, np.concatenate(values))
        if size >= 1 + max_arity * last_new:
            return done(INFEASIBLE, message="search space exhausted")
    return done(INFEASIBLE, message="term size budget exhausted")


def _row_keys(block: np.ndarray) -> list:
    block = np.ascontiguousarray(block)
    width = block.dtype.itemsize * block.shape[1]
    if width > _DIGEST_OVER:
        # wide rows are keyed by digest to keep the seen-sets small
        return [hashlib.blake2b(row.tobytes(), digest_size=16).digest() for row in block]
    return block.view(np.dtype((np.void, width))).ravel().tolist()


_DIGEST_OVER = 64


def _to_term(ref) -> Term:
    """Bank entries are lazy ``(build, row)`` references; resolve one to a term."""
    build, i = ref
    node = build(i)
    if isinstance(node, tuple):
        op, children = node
        return App(op, tuple(_to_term(c) for c in children))
    return node


_CHUNK = 1 << 15  # elements per vectorized block


def _expand(prod, size, bank, sorts, params, n):
    """Yield ``(build, block)``: ``block`` holds one candidate's values per row
    and ``build(i)`` gives row ``i`` as a terminal or an ``(op, operand refs)`` pair."""
    if isinstance(prod, Terminal):
        if size == 1:
            t = prod.term
            value = params[t.name] if isinstance(t, Var) else constant(t, n)
            yield (lambda i: t), value[None, :]
        return
    k = len(prod.operands)
    first_sort = sorts[prod.operands[0]]
    for comp in _compositions(size - 1, k):
        pools = [bank[o].get(s) for o, s in zip(prod.operands, comp)]
        if not all(pools):
            continue
        counts = [len(terms) for terms, _ in pools]
        # split the first pool so blocks stay bounded
        rest = max(1, int(np.prod(counts[1:])) * n)
        step = max(1, _CHUNK // rest)
        for lo in range(0, counts[0], step):
            hi = min(counts[0], lo + step)
            shape = [hi - lo] + counts[1:]
            args = []
            for j, (_, vals) in enumerate(pools):
                v = vals[lo:hi] if j == 0 else vals
                view = [1] * k + [n]
                view[j] = v.shape[0]
                args.append(v.reshape(view))
            block = np.broadcast_to(vec_apply(prod.op, args, first_sort), shape + [n]).reshape(-1, n)
            yield _builder(prod.op, pools, lo, shape), block


def _builder(op, pools, lo, shape):
    def build(i):
        idx = np.unravel_index(i, shape)
        picks = [pools[0][0][lo + idx[0]]] + [pools[j][0][idx[j]] for j in range(1, len(pools))]
        return (op, tuple(picks))
    return build


# ---------------------------------------------------------------- external

def parse_solution(text: str, p: SynthProblem) -> Term | None:
    """Extract the target's body from SyGuS v2 answer text.

    Accepts ``(define-fun f (...) S body)`` optionally wrapped in an extra
    pair of parentheses; bare status atoms are ignored. Returns None if the
    solver reported ``infeasible``.
    """
    forms = read_all(text)
    candidates = []
    for f in forms:
        if not isinstance(f, SList):
            if str(f) == "infeasible":
                return None
            continue
        if f and f[0] == "define-fun":
            candidates.append(f)
        else:
            candidates.extend(x for x in f if isinstance(x, SList) and x and x[0] == "define-fun")
    for f in candidates:
        if len(f) == 5 and f[1] == p.target.name:
            names = [str(q[0]) for q in f[2]]
            if len(names) != len(p.target.params):
                raise ParseError("answer has the wrong number of parameters", f.pos)
            scope = {a: s for a, (_, s) in zip(names, p.target.params)}
            body = parse_term(f[4], scope, {h.name: h.signature for h in p.helper_defs})
            return substitute(body, {a: Var(b) for a, b in zip(names, p.target.param_names)})
    raise ParseError(f"no define-fun for {p.target.name} in solver output")


def _solve_external(p: SynthProblem, g: Grammar, spec: External, limits: RunLimits) -> SolveOutcome:
    fd, path = tempfile.mkstemp(suffix=".sl", prefix="mg-")
    with os.fdopen(fd, "w") as fh:
        fh.write(print_problem(p.with_grammar(g)))
    argv = [tok.replace("{input}", path) for tok in shlex.split(spec.command)]
    t0 = time.monotonic()
    try:
        proc = subprocess.Popen(argv, stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    except OSError as e:
        return SolveOutcome(ERROR, 0.0, 0, None, f"cannot launch solver: {e}")
    try:
        try:
            out, err = proc.communicate(timeout=limits.timeout_seconds)
        except subprocess.TimeoutExpired:
            proc.terminate()
            try:
                proc.communicate(timeout=KILL_GRACE_SECONDS)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.communicate()
            return SolveOutcome(TIMEOUT, time.monotonic() - t0, 0, None, "deadline reached")
        runtime = time.monotonic() - t0
        if proc.returncode != 0:
            return SolveOutcome(ERROR, runtime, 0, None, f"solver exited with {proc.returncode}: {err.strip()[:200]}")
        try:
            solution = parse_solution(out, p)
        except ParseError as e:
            return SolveOutcome(ERROR, runtime, 0, None, f"unparseable solver output: {e}")
        if solution is None:
            return SolveOutcome(INFEASIBLE, runtime, 0, None, "solver reported infeasible")
        try:
            verdict = verify(solution, p)
        except DomainTooLarge:
            verdict = None
        if verdict is not None and not verdict:
            return SolveOutcome(ERROR, runtime, 0, solution, f"solution fails at {verdict.counterexample}")
        return SolveOutcome(SOLVED, runtime, 0, solution)
    finally:
        if spec.keep_files:
            log.info("kept solver input %s", path)
        else:
            os.unlink(path)


def solve(p: SynthProblem, g: Grammar, spec: SolverSpec, limits: RunLimits = RunLimits()) -> SolveOutcome:
    if isinstance(spec, External):
        return _solve_external(p, g, spec, limits)
    deadline = time.monotonic() + limits.timeout_seconds
    return enumerate_solve(p, g, spec.max_term_size, spec.max_candidates, deadline)


def _guarded(job, limits):
    p, g, spec = job
    try:
        return solve(p, g, spec, limits)
    except Exception as e:  # one bad job must not sink the batch
        log.exception("solver job failed")
        return SolveOutcome(ERROR, 0.0, 0, None, f"{type(e).__name__}: {e}")


def run_batch(jobs: Sequence[tuple], limits: RunLimits = RunLimits()) -> list[SolveOutcome]:
    """Solve ``(problem, grammar, solver)`` jobs; results follow input order."""
    jobs = list(jobs)
    if limits.max_parallel == 1 or len(jobs) <= 1:
        return [_guarded(j, limits) for j in jobs]
    with ThreadPoolExecutor(max_workers=min(limits.max_parallel, len(jobs))) as pool:
        return list(pool.map(lambda j: _guarded(j, limits), jobs))
