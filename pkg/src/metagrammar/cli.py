"""Command-line entry points.

Exit status: 0 on success, 1 on usage or input errors, 2 on internal errors.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import time
import traceback
from pathlib import Path

from .bench import (
    ResultsCache,
    format_report,
    load_problems,
    read_manifest,
    report,
    report_csv,
    scan_corpus,
    stratified_sample,
)
from .problem import parse_problem, print_problem, problem_id
from .rules import BUILTIN, Metagrammar, default_metagrammar, dumps_metagrammar, loads_metagrammar, materialize
from .search import DETERMINISTIC, WALL_CLOCK, SearchConfig, cache_key, descend, dumps_trace, evaluate
from .sexpr import ParseError
from .solver import Builtin, External, RunLimits, solve

log = logging.getLogger("metagrammar")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def load_metagrammar(spec: str) -> Metagrammar:
    if spec in BUILTIN:
        return BUILTIN[spec]()
    path = Path(spec)
    if not path.exists():
        raise UsageError(f"no such metagrammar: {spec!r} (builtins: {', '.join(BUILTIN)})")
    return loads_metagrammar(path.read_text())


def solver_from_args(args):
    cmd = args.solver or os.environ.get("MG_SOLVER_CMD") or "builtin"
    if cmd == "builtin":
        return Builtin(args.max_term_size, args.max_candidates)
    try:
        return External(cmd, keep_files=args.keep_files)
    except ValueError as e:
        raise UsageError(str(e)) from None


def config_from_args(args) -> SearchConfig:
    return SearchConfig(
        cost_mode=args.cost_mode,
        limits=RunLimits(float(args.timeout), args.max_parallel),
        unsolved_penalty=args.penalty,
    )


def _read_problem(path):
    try:
        return parse_problem(Path(path).read_text())
    except OSError as e:
        raise UsageError(str(e)) from None


def _corpus(args):
    manifest = read_manifest(args.manifest) if args.manifest else {}
    return scan_corpus(args.corpus, manifest)


# ---------------------------------------------------------------- commands

def cmd_parse(args):
    sys.stdout.write(print_problem(_read_problem(args.file)))


def cmd_emit(args):
    p = _read_problem(args.file)
    g = materialize(load_metagrammar(args.metagrammar), p, args.literal_cap)
    sys.stdout.write(print_problem(p.with_grammar(g)))


def cmd_run(args):
    p = _read_problem(args.file)
    m = load_metagrammar(args.metagrammar)
    solver = solver_from_args(args)
    cfg = config_from_args(args)
    o = solve(p, materialize(m, p, args.literal_cap), solver, cfg.limits)
    bid = problem_id(p)
    record = {
        "benchmark_id": bid,
        "metagrammar_id": m.id,
        "metagrammar_hash": m.fingerprint,
        "solver_id": solver.id,
        "timeout": cfg.limits.timeout_seconds,
        "cost_mode": cfg.cost_mode,
        "status": o.status,
        "runtime_seconds": o.runtime_seconds,
        "cost": o.cost,
        "solution_text": None if o.solution is None else str(o.solution),
        "message": o.message,
        "timestamp": time.time(),
    }
    print(json.dumps(record, sort_keys=True))


def _split_json(training, holdout) -> str:
    return json.dumps({
        "training": [dataclasses.asdict(m) for m in training],
        "holdout": [dataclasses.asdict(m) for m in holdout],
    }, indent=1, sort_keys=True) + "\n"


def cmd_sample(args):
    training, holdout = stratified_sample(_corpus(args), args.per_category, args.seed)
    sys.stdout.write(_split_json(training, holdout))


def cmd_train(args):
    metas = _corpus(args)
    training, holdout = stratified_sample(metas, args.per_category, args.seed)
    if not training:
        raise UsageError("no parseable benchmarks in the corpus")
    problems = load_problems(args.corpus, training)
    if args.start in (None, "default"):
        sorts = set().union(*(p.signature_sorts() for _, p in problems))
        start = default_metagrammar(sorts)
    else:
        start = load_metagrammar(args.start)
    cache = ResultsCache(args.cache) if args.cache else None
    trace = descend(
        start,
        [p for _, p in problems],
        solver_from_args(args),
        config_from_args(args),
        cache=cache,
        ids=[bid for bid, _ in problems],
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "trace.jsonl").write_text(dumps_trace(trace))
    (out / "final.mg").write_text(dumps_metagrammar(trace.final))
    (out / "split.json").write_text(_split_json(training, holdout))
    print(f"levels: {len(trace.levels)}")
    print(f"start: {start.id} ({len(start)} rules)")
    print(f"final: {trace.final.id} ({len(trace.final)} rules: {' '.join(trace.final.rule_ids)})")
    print(f"wrote {out / 'trace.jsonl'}, {out / 'final.mg'}, {out / 'split.json'}")


def _eval_metas(args):
    metas = [m for m in _corpus(args) if m.ok]
    if args.split:
        keep = {m["path"] for m in json.loads(Path(args.split).read_text())["holdout"]}
        metas = [m for m in metas if m.path in keep]
    return metas


def _emit_report(args, rows, title):
    text = format_report(rows, title)
    sys.stdout.write(text)
    if args.csv:
        Path(args.csv).write_text(report_csv(rows))


def cmd_eval(args):
    metas = _eval_metas(args)
    problems = load_problems(args.corpus, metas)
    cand, base = load_metagrammar(args.metagrammar), load_metagrammar(args.baseline)
    cache = ResultsCache(args.cache)
    solver = solver_from_args(args)
    cfg = config_from_args(args)
    outcomes, runs = evaluate([cand, base], problems, solver, cfg, cache)
    print(f"solver runs: {runs}", file=sys.stderr)
    ids = [bid for bid, _ in problems]
    cats = {m.id: m.category for m in metas}
    rows = report({b: outcomes[(cand.id, b)] for b in ids}, {b: outcomes[(base.id, b)] for b in ids}, cats)
    _emit_report(args, rows, f"{cand.id} vs baseline {base.id} ({cfg.cost_mode})")


def cmd_report(args):
    metas = _eval_metas(args)
    cand, base = load_metagrammar(args.metagrammar), load_metagrammar(args.baseline)
    cache = ResultsCache(args.cache)
    solver = solver_from_args(args)
    cfg = config_from_args(args)
    picked = {cand.id: {}, base.id: {}}
    missing = 0
    for meta in metas:
        for m in (cand, base):
            r = cache.records.get(cache_key(meta.id, m, solver, cfg))
            if r is None:
                missing += 1
            else:
                picked[m.id][meta.id] = r
    if missing:
        raise UsageError(f"{missing} result(s) missing from {args.cache}; run `eval` first")
    rows = report(picked[cand.id], picked[base.id], {m.id: m.category for m in metas})
    _emit_report(args, rows, f"{cand.id} vs baseline {base.id} ({cfg.cost_mode})")


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="metagrammar", description="Learn default SyGuS grammars by rule-removal descent.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def solver_opts(p):
        p.add_argument("--solver", help="'builtin' or a command template containing {input} "
                                        "(default: $MG_SOLVER_CMD, else builtin)")
        p.add_argument("--timeout", type=float, default=300.0)
        p.add_argument("--max-parallel", type=int, default=20)
        p.add_argument("--max-term-size", type=int, default=9)
        p.add_argument("--max-candidates", type=int, default=200_000)
        p.add_argument("--cost-mode", choices=[WALL_CLOCK, DETERMINISTIC], default=WALL_CLOCK)
        p.add_argument("--penalty", type=float, default=10.0, help="score of an unsolved benchmark")
        p.add_argument("--keep-files", action="store_true", help="keep solver input files")

    def corpus_opts(p):
        p.add_argument("--corpus", required=True)
        p.add_argument("--manifest")

    p = sub.add_parser("parse", help="validate a problem and print its normalized form")
    p.add_argument("file")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("emit", help="print a problem with a materialized grammar attached")
    p.add_argument("file")
    p.add_argument("--metagrammar", default="default")
    p.add_argument("--literal-cap", type=int, default=64)
    p.set_defaults(func=cmd_emit)

    p = sub.add_parser("run", help="solve one problem and print a run record")
    p.add_argument("file")
    p.add_argument("--metagrammar", default="default")
    p.add_argument("--literal-cap", type=int, default=64)
    solver_opts(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sample", help="print a stratified training/holdout split")
    corpus_opts(p)
    p.add_argument("--per-category", type=int, default=48)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("train", help="run the descent and save trace and final metagrammar")
    corpus_opts(p)
    p.add_argument("--per-category", type=int, default=48)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start", help="starting metagrammar (default: derived default)")
    p.add_argument("--out", required=True)
    p.add_argument("--cache", help="JSON-lines results cache")
    solver_opts(p)
    p.set_defaults(func=cmd_train)

    for name, fn, text in (("eval", cmd_eval, "evaluate a metagrammar against a baseline"),
                           ("report", cmd_report, "report from cached results only")):
        p = sub.add_parser(name, help=text)
        corpus_opts(p)
        p.add_argument("--metagrammar", required=True)
        p.add_argument("--baseline", default="default")
        p.add_argument("--split", help="split.json from train/sample; restricts to the holdout")
        p.add_argument("--cache", default="mg_results.jsonl")
        p.add_argument("--csv", help="also write the report as CSV here")
        solver_opts(p)
        p.set_defaults(func=fn)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (UsageError, ParseError, FileNotFoundError, NotADirectoryError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
