"""Benchmark corpora, stratified splits, the results cache and solved/time reports."""
from __future__ import annotations

import csv
import fcntl
import hashlib
import io
import json
import logging
import os
import random
import statistics
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .problem import SynthProblem, UnsupportedError, parse_problem
from .sexpr import ParseError

log = logging.getLogger(__name__)

UNCATEGORIZED = "uncategorized"


@dataclass(frozen=True)
class BenchmarkMeta:
    id: str
    path: str
    category: str
    parse_status: str  # ok | unsupported | error
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.parse_status == "ok"


def content_id(data: bytes) -> str:
    """Hash of the file with line endings and trailing whitespace normalized."""
    text = data.decode("utf-8", errors="replace").replace("\r\n", "\n")
    norm = "\n".join(line.rstrip() for line in text.strip().split("\n"))
    return hashlib.sha256(norm.encode()).hexdigest()[:16]


def read_manifest(path: str | os.PathLike | None) -> dict[str, str]:
    """CSV rows of ``(path, category)``; an optional ``path,category`` header is skipped."""
    if path is None:
        return {}
    out = {}
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].startswith("#"):
                continue
            if len(row) < 2:
                raise ValueError(f"manifest row needs path and category: {row}")
            if row[0].strip() == "path" and row[1].strip() == "category":
                continue
            out[Path(row[0].strip()).as_posix()] = row[1].strip()
    return out


def scan_corpus(root, manifest: Mapping[str, str] | None = None) -> list[BenchmarkMeta]:
    """Parse every ``.sl`` file under ``root`` (sorted by relative path)."""
    root = Path(root)
    if not root.is_dir():
        raise NotADirectoryError(f"not a directory: {root}")
    manifest = manifest or {}
    metas = []
    for path in sorted(root.rglob("*.sl")):
        rel = path.relative_to(root).as_posix()
        data = path.read_bytes()
        status, message = "ok", ""
        try:
            parse_problem(data.decode("utf-8"))
        except UnsupportedError as e:
            status, message = "unsupported", str(e)
        except (ParseError, UnicodeDecodeError) as e:
            status, message = "error", str(e)
        metas.append(BenchmarkMeta(content_id(data), rel, manifest.get(rel, UNCATEGORIZED), status, message))
    return metas


def load_problems(root, metas: Iterable[BenchmarkMeta]) -> list[tuple[str, SynthProblem]]:
    root = Path(root)
    return [(m.id, parse_problem((root / m.path).read_text())) for m in metas if m.ok]


def stratified_sample(
    metas: Sequence[BenchmarkMeta], per_category: int, seed: int = 0
) -> tuple[list[BenchmarkMeta], list[BenchmarkMeta]]:
    """Draw ``per_category`` parseable benchmarks from each category without
    replacement; everything else parseable is the holdout."""
    if per_category < 1:
        raise ValueError("per_category must be positive")
    rng = random.Random(seed)
    by_cat: dict[str, list[BenchmarkMeta]] = {}
    for m in sorted(metas, key=lambda m: m.path):
        if m.ok:
            by_cat.setdefault(m.category, []).append(m)
    training = []
    for cat in sorted(by_cat):
        pool = by_cat[cat]
        if len(pool) < per_category:
            log.warning("category %s has only %d benchmarks (< %d); using all", cat, len(pool), per_category)
            training += pool
        else:
            training += rng.sample(pool, per_category)
    chosen = {m.path for m in training}
    holdout = [m for cat in sorted(by_cat) for m in by_cat[cat] if m.path not in chosen]
    return training, holdout


# ------------------------------------------------------------ results cache

@dataclass(frozen=True)
class RunRecord:
    benchmark_id: str
    metagrammar_id: str
    metagrammar_hash: str
    solver_id: str
    timeout: float
    cost_mode: str
    status: str
    runtime_seconds: float
    cost: int
    solution_text: str | None = None
    message: str = ""
    timestamp: float = 0.0

    @property
    def key(self) -> tuple:
        return (self.benchmark_id, self.metagrammar_hash, self.solver_id, self.timeout, self.cost_mode)

    @property
    def solved(self) -> bool:
        return self.status == "solved"


class ResultsCache:
    """Append-only JSON-lines file of RunRecords; appends hold an exclusive lock.

    Implements the ``get``/``put`` protocol used by ``search.evaluate``.
    """

    def __init__(self, path):
        self.path = Path(path)
        self.records: dict[tuple, RunRecord] = {}
        self.misses = 0
        if self.path.exists():
            with open(self.path) as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        r = RunRecord(**json.loads(line))
                        self.records.setdefault(r.key, r)

    def get(self, key):
        r = self.records.get(key)
        if r is None:
            self.misses += 1
            return None
        return asdict(r)

    def put(self, key, record):
        bid, mhash, solver_id, timeout, cost_mode = key
        r = RunRecord(
            benchmark_id=bid,
            metagrammar_id=record.get("metagrammar_id", ""),
            metagrammar_hash=mhash,
            solver_id=solver_id,
            timeout=timeout,
            cost_mode=cost_mode,
            status=record["status"],
            runtime_seconds=record["runtime_seconds"],
            cost=record["cost"],
            solution_text=record.get("solution_text"),
            message=record.get("message", ""),
            timestamp=time.time(),
        )
        if key in self.records:
            return
        self.records[key] = r
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a") as fh:
            fcntl.flock(fh, fcntl.LOCK_EX)
            try:
                fh.write(json.dumps(asdict(r), sort_keys=True) + "\n")
                fh.flush()
            finally:
                fcntl.flock(fh, fcntl.LOCK_UN)


# ----------------------------------------------------------------- reports

@dataclass(frozen=True)
class ReportRow:
    category: str
    total: int
    solved: int
    unique_vs_baseline: int
    avg_time_seconds: float | None
    avg_cost: float | None


def report(
    candidate: Mapping[str, object],
    baseline: Mapping[str, object],
    categories: Mapping[str, str],
) -> list[ReportRow]:
    """Per-category rows plus a ``Total`` row.

    ``candidate``/``baseline`` map benchmark id to an outcome-like object with
    ``solved``, ``runtime_seconds`` and ``cost``. Averages are over solved
    benchmarks only; ``unique`` counts those solved here but not by the baseline.
    """
    if set(candidate) != set(baseline):
        raise ValueError("candidate and baseline cover different benchmarks")
    groups: dict[str, list[str]] = {}
    for bid in sorted(candidate):
        groups.setdefault(categories.get(bid, UNCATEGORIZED), []).append(bid)

    def row(name, bids):
        solved = [b for b in bids if candidate[b].solved]
        unique = [b for b in solved if not baseline[b].solved]
        times = [candidate[b].runtime_seconds for b in solved]
        costs = [candidate[b].cost for b in solved]
        return ReportRow(
            name, len(bids), len(solved), len(unique),
            statistics.fmean(times) if times else None,
            statistics.fmean(costs) if costs else None,
        )

    rows = [row(cat, groups[cat]) for cat in sorted(groups)]
    rows.append(row("Total", sorted(candidate)))
    return rows


def _fmt(v, unit=""):
    return "-" if v is None else f"{v:.1f}{unit}"


def format_report(rows: Sequence[ReportRow], title: str = "") -> str:
    header = ("Set", "total", "solved", "unique", "avg. time", "avg. cost")
    body = [
        (r.category, str(r.total), str(r.solved), str(r.unique_vs_baseline), _fmt(r.avg_time_seconds, "s"), _fmt(r.avg_cost))
        for r in rows
    ]
    widths = [max(len(x[i]) for x in [header] + body) for i in range(len(header))]

    def line(cells):
        return " | ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(cells, widths)))

    out = [title] if title else []
    out += [line(header), "-+-".join("-" * w for w in widths)]
    out += [line(b) for b in body]
    return "\n".join(out) + "\n"


def report_csv(rows: Sequence[ReportRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["category", "total", "solved", "unique_vs_baseline", "avg_time_seconds", "avg_cost"])
    for r in rows:
        w.writerow([r.category, r.total, r.solved, r.unique_vs_baseline,
                    "" if r.avg_time_seconds is None else f"{r.avg_time_seconds:.6f}",
                    "" if r.avg_cost is None else f"{r.avg_cost:.6f}"])
    return buf.getvalue()
