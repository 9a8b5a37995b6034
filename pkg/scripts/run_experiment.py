"""Desk-scale version of the full pipeline.

Trains on the synthetic corpus with the deterministic cost measure, then
compares default, reduced, enhanced and the learned metagrammar against the
default on a held-out corpus (the handwritten set by default). Writes the
trace, the learned metagrammar and CSV reports under --out.

    python scripts/run_experiment.py --out runs/exp1
    MG_SOLVER_CMD="python scripts/cvc5_sygus.py {input}" python scripts/run_experiment.py --eval-solver external
"""
import argparse
import logging
import os
from pathlib import Path

from metagrammar.bench import ResultsCache, format_report, load_problems, read_manifest, report, report_csv, scan_corpus
from metagrammar.rules import BUILTIN, default_metagrammar, dumps_metagrammar
from metagrammar.search import DETERMINISTIC, WALL_CLOCK, SearchConfig, descend, dumps_trace, evaluate
from metagrammar.solver import Builtin, External, RunLimits
from metagrammar.synthetic import write_synthetic_corpus

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="runs/experiment")
    ap.add_argument("--holdout", default=str(ROOT / "benchmarks" / "handwritten"))
    ap.add_argument("--eval-solver", choices=["builtin", "external"], default="builtin")
    ap.add_argument("--timeout", type=float, default=20.0)
    ap.add_argument("--max-parallel", type=int, default=os.cpu_count() or 1)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train_root = write_synthetic_corpus(out / "synthetic")
    train = load_problems(train_root, scan_corpus(train_root))

    solver = Builtin(7, 20_000)
    cfg = SearchConfig(cost_mode=DETERMINISTIC, limits=RunLimits(60.0, args.max_parallel))
    start = default_metagrammar(set().union(*(p.signature_sorts() for _, p in train)))
    trace = descend(start, [p for _, p in train], solver, cfg, ids=[b for b, _ in train])
    (out / "trace.jsonl").write_text(dumps_trace(trace))
    (out / "learned.mg").write_text(dumps_metagrammar(trace.final))
    print(f"learned: {trace.final.id} -> {' '.join(trace.final.rule_ids)}")

    holdout = Path(args.holdout)
    metas = [m for m in scan_corpus(holdout, read_manifest(holdout / "manifest.csv")) if m.ok]
    problems = load_problems(holdout, metas)
    if args.eval_solver == "external":
        eval_solver = External(os.environ["MG_SOLVER_CMD"])
        eval_cfg = SearchConfig(cost_mode=WALL_CLOCK, limits=RunLimits(args.timeout, args.max_parallel))
    else:
        eval_solver = Builtin()
        eval_cfg = SearchConfig(cost_mode=DETERMINISTIC, limits=RunLimits(args.timeout, args.max_parallel))
    sorts = set().union(*(p.signature_sorts() for _, p in problems))
    baseline = default_metagrammar(sorts)
    contenders = [baseline, BUILTIN["reduced"](), BUILTIN["enhanced"](sorts), trace.final]
    outcomes, runs = evaluate(contenders, problems, eval_solver, eval_cfg, ResultsCache(out / "results.jsonl"))
    print(f"solver runs: {runs}")
    ids = [b for b, _ in problems]
    cats = {m.id: m.category for m in metas}
    for m in contenders:
        rows = report({b: outcomes[(m.id, b)] for b in ids}, {b: outcomes[(baseline.id, b)] for b in ids}, cats)
        print(format_report(rows, f"{m.id} vs {baseline.id}"))
        (out / f"report-{m.id.replace('/', '_')}.csv").write_text(report_csv(rows))


if __name__ == "__main__":
    main()
