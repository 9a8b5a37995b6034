"""Scoring metagrammars against their neighbors, and greedy rule-removal descent."""
from __future__ import annotations

import json
import logging
import math
import statistics
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .problem import SynthProblem, parse_term, problem_id
from .rules import MaterializationError, Metagrammar, materialize, neighbors
from .sexpr import read_all
from .solver import ERROR, Builtin, RunLimits, SolveOutcome, SolverSpec, run_batch

log = logging.getLogger(__name__)

WALL_CLOCK = "wall_clock"
DETERMINISTIC = "deterministic_cost"


@dataclass(frozen=True)
class SearchConfig:
    cost_mode: str = WALL_CLOCK
    limits: RunLimits = field(default_factory=RunLimits)
    unsolved_penalty: float = 10.0
    aggregate: str = "sum"

    def __post_init__(self):
        if self.cost_mode not in (WALL_CLOCK, DETERMINISTIC):
            raise ValueError(f"unknown cost_mode {self.cost_mode!r}")
        if self.unsolved_penalty <= 0:
            raise ValueError("unsolved_penalty must be positive")
        if self.aggregate not in ("sum", "mean"):
            raise ValueError(f"unknown aggregate {self.aggregate!r}")


def measure(outcome: SolveOutcome, cost_mode: str) -> float:
    return float(outcome.cost) if cost_mode == DETERMINISTIC else outcome.runtime_seconds


# ----------------------------------------------------------------- scoring

@dataclass(frozen=True)
class ScoreContext:
    """Results of one benchmark across a comparison set (a parent and its neighbors).

    ``measures`` maps metagrammar id to runtime (or cost), None when unsolved.
    """

    benchmark_id: str
    measures: Mapping[str, float | None]

    @classmethod
    def from_outcomes(cls, benchmark_id, outcomes: Mapping[str, SolveOutcome], cost_mode=WALL_CLOCK):
        return cls(benchmark_id, {k: (measure(o, cost_mode) if o.solved else None) for k, o in outcomes.items()})

    @property
    def solved(self) -> dict[str, float]:
        return {k: v for k, v in self.measures.items() if v is not None}

    @property
    def sigma(self) -> float:
        """Population standard deviation over solved members, 0 if fewer than two."""
        vals = list(self.solved.values())
        return statistics.pstdev(vals) if len(vals) >= 2 else 0.0

    def neighbor_mean(self, m_id: str) -> float | None:
        others = [v for k, v in self.solved.items() if k != m_id]
        return statistics.fmean(others) if others else None


def score_benchmark(m_id: str, ctx: ScoreContext, penalty: float = 10.0) -> float:
    """Lower is better: ``penalty`` if unsolved, else runtime minus the mean of
    the solved siblings, in units of the comparison set's standard deviation."""
    r = ctx.measures[m_id]
    if r is None:
        return penalty
    sigma = ctx.sigma
    mean = ctx.neighbor_mean(m_id)
    if mean is None or sigma == 0:
        return 0.0
    return (r - mean) / sigma


def score_metagrammar(per_benchmark: Sequence[float], aggregate: str = "sum") -> float:
    if not per_benchmark:
        raise ValueError("cannot score a metagrammar on an empty training set")
    total = math.fsum(per_benchmark)
    return total if aggregate == "sum" else total / len(per_benchmark)


# -------------------------------------------------------------- evaluation

class MemoryCache:
    """In-process result cache; ``bench.ResultsCache`` is the persistent one."""

    def __init__(self):
        self._d = {}

    def get(self, key):
        return self._d.get(key)

    def put(self, key, record):
        self._d[key] = record


def cache_key(benchmark_id: str, m: Metagrammar, solver: SolverSpec, cfg: SearchConfig) -> tuple:
    return (benchmark_id, m.fingerprint, solver.id, cfg.limits.timeout_seconds, cfg.cost_mode)


def outcome_record(outcome: SolveOutcome) -> dict:
    return {
        "status": outcome.status,
        "runtime_seconds": outcome.runtime_seconds,
        "cost": outcome.cost,
        "solution_text": None if outcome.solution is None else str(outcome.solution),
        "message": outcome.message,
    }


def record_outcome(record: Mapping, problem: SynthProblem) -> SolveOutcome:
    solution = None
    if record.get("solution_text"):
        scope = dict(problem.target.params)
        helpers = {h.name: h.signature for h in problem.helper_defs}
        solution = parse_term(read_all(record["solution_text"])[0], scope, helpers)
    return SolveOutcome(record["status"], record["runtime_seconds"], record["cost"], solution, record.get("message", ""))


def evaluate(
    metagrammars: Sequence[Metagrammar],
    benchmarks: Sequence[tuple[str, SynthProblem]],
    solver: SolverSpec,
    cfg: SearchConfig,
    cache=None,
) -> tuple[dict[tuple[str, str], SolveOutcome], int]:
    """Outcome of every (metagrammar, benchmark) pair keyed by ``(m.id, benchmark_id)``,
    plus the number of solver runs actually issued (cache misses)."""
    cache = MemoryCache() if cache is None else cache
    out: dict[tuple[str, str], SolveOutcome] = {}
    pending = []
    for m in metagrammars:
        for bid, p in benchmarks:
            key = cache_key(bid, m, solver, cfg)
            hit = cache.get(key)
            if hit is not None:
                out[(m.id, bid)] = record_outcome(hit, p)
                continue
            try:
                g = materialize(m, p)
            except MaterializationError as e:
                o = SolveOutcome(ERROR, 0.0, 0, None, str(e))
                cache.put(key, {**outcome_record(o), "metagrammar_id": m.id})
                out[(m.id, bid)] = o
                continue
            pending.append((m, bid, p, g, key))
    results = run_batch([(p, g, solver) for _, _, p, g, _ in pending], cfg.limits)
    for (m, bid, _, _, key), o in zip(pending, results):
        cache.put(key, {**outcome_record(o), "metagrammar_id": m.id})
        out[(m.id, bid)] = o
    return out, len(pending)


# ------------------------------------------------------------------ descent

@dataclass
class Candidate:
    metagrammar: Metagrammar
    outcomes: dict  # benchmark id -> SolveOutcome
    scores: dict  # benchmark id -> float
    aggregate: float
    solved: int
    mean_measure: float | None


@dataclass
class Level:
    parent: Candidate
    neighbors: list
    chosen: Candidate | None
    solver_runs: int
    stop_reason: str | None = None


@dataclass
class SearchTrace:
    start: Metagrammar
    benchmark_ids: list
    config: SearchConfig
    solver_id: str
    levels: list = field(default_factory=list)
    final: Metagrammar | None = None


def _summarize(m, bids, outcomes, comparison, cfg) -> Candidate:
    mine = {b: outcomes[(m.id, b)] for b in bids}
    scores = {}
    for b in bids:
        ctx = ScoreContext.from_outcomes(b, {c.id: outcomes[(c.id, b)] for c in comparison}, cfg.cost_mode)
        scores[b] = score_benchmark(m.id, ctx, cfg.unsolved_penalty)
    solved = [measure(o, cfg.cost_mode) for o in mine.values() if o.solved]
    return Candidate(
        metagrammar=m,
        outcomes=mine,
        scores=scores,
        aggregate=score_metagrammar([scores[b] for b in bids], cfg.aggregate),
        solved=len(solved),
        mean_measure=statistics.fmean(solved) if solved else None,
    )


def _rank(c: Candidate) -> tuple:
    mean = math.inf if c.mean_measure is None else c.mean_measure
    return (c.aggregate, -c.solved, mean, c.metagrammar.id)


def descend(
    start: Metagrammar,
    training: Sequence[SynthProblem],
    solver: SolverSpec = Builtin(),
    cfg: SearchConfig = SearchConfig(),
    cache=None,
    ids: Sequence[str] | None = None,
) -> SearchTrace:
    """Repeatedly replace the current metagrammar by its best-scoring smaller neighbor.

    Each level evaluates the parent and all of its neighbors on every training
    benchmark; scores are normalized within that comparison set. Stops when
    the chosen neighbor has no rules left or no neighbor solves anything.
    """
    if len(start) < 1:
        raise ValueError("start metagrammar must have at least one rule")
    if not training:
        raise ValueError("training set is empty")
    ids = list(ids) if ids is not None else [problem_id(p) for p in training]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate training benchmark ids")
    benchmarks = list(zip(ids, training))
    cache = MemoryCache() if cache is None else cache
    trace = SearchTrace(start, ids, cfg, solver.id)

    parent = start
    while True:
        kids = neighbors(parent)
        comparison = [parent] + kids
        outcomes, runs = evaluate(comparison, benchmarks, solver, cfg, cache)
        parent_c = _summarize(parent, ids, outcomes, comparison, cfg)
        kid_cs = [_summarize(k, ids, outcomes, comparison, cfg) for k in kids]
        level = Level(parent_c, kid_cs, None, runs)
        trace.levels.append(level)
        if not any(c.solved for c in kid_cs):
            level.stop_reason = "no neighbor solves any benchmark"
        else:
            level.chosen = min(kid_cs, key=_rank)
            if len(level.chosen.metagrammar) == 0:
                level.stop_reason = "all rules removed"
        log.info(
            "level %d: parent %s (%d rules) -> %s, %d solver runs",
            len(trace.levels), parent.id, len(parent),
            level.chosen.metagrammar.id if level.chosen else None, runs,
        )
        if level.stop_reason:
            break
        parent = level.chosen.metagrammar
    trace.final = select_final(trace)
    return trace


def select_final(trace: SearchTrace) -> Metagrammar:
    """Most training benchmarks solved, then lowest mean runtime (or cost) over
    solved ones, among the start and every level's chosen candidate. Earlier
    candidates win exact ties."""
    if not trace.levels:
        raise ValueError("empty trace")
    pool = [trace.levels[0].parent] + [lv.chosen for lv in trace.levels if lv.chosen is not None]

    def key(c: Candidate):
        return (-c.solved, math.inf if c.mean_measure is None else c.mean_measure)

    return min(pool, key=key).metagrammar


# ------------------------------------------------------------ serialization

def trace_records(trace: SearchTrace) -> list[dict]:
    """One header record, then one record per evaluated candidate per benchmark
    and one summary record per candidate. Wall-clock times are omitted in
    deterministic mode so traces are reproducible byte for byte."""
    cfg = trace.config
    timed = cfg.cost_mode == WALL_CLOCK
    out = [{
        "type": "header",
        "start": trace.start.id,
        "start_rules": list(trace.start.rule_ids),
        "solver": trace.solver_id,
        "cost_mode": cfg.cost_mode,
        "timeout_seconds": cfg.limits.timeout_seconds,
        "unsolved_penalty": cfg.unsolved_penalty,
        "aggregate": cfg.aggregate,
        "comparison_set": "parent+neighbors",
        "sigma": "population, solved members only, including the scored metagrammar",
        "benchmarks": trace.benchmark_ids,
    }]
    for depth, lv in enumerate(trace.levels, 1):
        for role, c in [("parent", lv.parent)] + [("neighbor", k) for k in lv.neighbors]:
            m = c.metagrammar
            for b in trace.benchmark_ids:
                o = c.outcomes[b]
                out.append({
                    "type": "run",
                    "level": depth,
                    "role": role,
                    "metagrammar_id": m.id,
                    "benchmark_id": b,
                    "status": o.status,
                    "runtime_seconds": o.runtime_seconds if timed else None,
                    "cost": o.cost,
                    "score": c.scores[b],
                })
            out.append({
                "type": "candidate",
                "level": depth,
                "role": role,
                "metagrammar_id": m.id,
                "fingerprint": m.fingerprint,
                "rules": list(m.rule_ids),
                "aggregate_score": c.aggregate,
                "solved": c.solved,
                "mean_measure": c.mean_measure,
            })
        out.append({
            "type": "level",
            "level": depth,
            "parent": lv.parent.metagrammar.id,
            "chosen": lv.chosen.metagrammar.id if lv.chosen else None,
            "solver_runs": lv.solver_runs if timed else None,
            "stop_reason": lv.stop_reason,
        })
    out.append({"type": "final", "metagrammar_id": trace.final.id if trace.final else None,
                "rules": list(trace.final.rule_ids) if trace.final else None})
    return out


def dumps_trace(trace: SearchTrace) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in trace_records(trace))
