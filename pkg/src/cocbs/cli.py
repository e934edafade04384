"""Command-line entry points: solve one instance, or run a benchmark batch.

``cocbs solve INSTANCE.json`` prints the solution JSON and exits with 0 when
solved, 2 on timeout and 3 when the instance is not well-formed.

``cocbs bench --map M.map --scen DIR --tasks 6 8 10`` runs every
(scenario, task count, variant) combination and writes one CSV row per run,
followed by an aggregate report on standard error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from collections import defaultdict
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .grid_map import GridMap, load_map
from .oracle import validate_solution
from .scenario import (
    Instance,
    ScenarioError,
    build_instance,
    load_instance,
    parse_scen,
    random_scen_entries,
)
from .search import VARIANTS, CoCBS
from .wellformed import is_well_formed

SCHEMA_VERSION = 1
EXIT_SOLVED, EXIT_ERROR, EXIT_TIMEOUT, EXIT_NOT_WELL_FORMED = 0, 1, 2, 3


@dataclass
class RunRecord:
    """One (instance, variant) run. ``status`` is solved, timeout, unsolvable or rejected."""

    map: str
    scen: str
    k: int
    variant: str
    solved: bool
    soc: int | None
    time_ms: float
    meeting_sets: int
    first_set_solved: bool
    roots_expanded: int
    regulars_expanded: int
    planner_calls: int
    status: str

    def __post_init__(self) -> None:
        if self.solved and self.soc is None:
            raise ValueError("a solved record needs a sum of costs")

    def row(self) -> list[str]:
        out = []
        for value in asdict(self).values():
            if value is None:
                out.append("")
            elif isinstance(value, bool):
                out.append(str(int(value)))
            elif isinstance(value, float):
                out.append(f"{value:.3f}")
            else:
                out.append(str(value))
        return out


COLUMNS = [f.name for f in fields(RunRecord)]


@dataclass
class BenchConfig:
    map_path: str
    scen: list[str]
    tasks: list[int]
    variants: list[str]
    timeout_ms: int = 120_000
    seed: int = 0
    queries: int = 25
    jobs: int = 1
    allow_ill_formed: bool = False
    validate: bool = True
    verbose: bool = False


# -- benchmark ----------------------------------------------------------------


def _scen_files(paths: Sequence[str]) -> list[Path]:
    files: list[Path] = []
    for p in map(Path, paths):
        if p.is_dir():
            files += sorted(p.glob("*.scen"))
        elif p.exists():
            files.append(p)
        else:
            raise FileNotFoundError(f"no such scenario file or directory: {p}")
    return files


def benchmark_queries(config: BenchConfig, grid: GridMap) -> list[tuple[str, list]]:
    """``(scen name, entries)`` pairs in a fixed order.

    With no scenario paths, ``config.queries`` random scenarios are drawn from
    ``config.seed``; otherwise the first ``config.queries`` files are used.
    """
    if config.scen:
        files = _scen_files(config.scen)[: config.queries]
        return [(f.name, parse_scen(f.read_text())) for f in files]
    n_rows = 2 * max(config.tasks, default=0)
    out = []
    for q in range(config.queries):
        rng = np.random.default_rng([config.seed, q])
        out.append((f"{grid.name}-seed{config.seed}-{q + 1}", random_scen_entries(grid, n_rows, rng)))
    return out


def _run_one(job: tuple[Instance, str, str, int, str, float, bool, bool]) -> RunRecord:
    instance, map_name, scen_name, k, variant, timeout_s, allow_ill, validate = job
    base = dict(map=map_name, scen=scen_name, k=k, variant=variant)
    empty = dict(soc=None, time_ms=0.0, meeting_sets=0, first_set_solved=False,
                 roots_expanded=0, regulars_expanded=0, planner_calls=0)
    if not allow_ill and not is_well_formed(instance):
        return RunRecord(**base, solved=False, status="rejected", **empty)
    result = CoCBS(instance, timeout=timeout_s, **VARIANTS[variant]).solve()
    stats = result.stats
    time_ms = stats.time_s * 1000
    solved = result.solved and time_ms <= timeout_s * 1000
    status = "solved" if solved else ("timeout" if result.status in ("timeout", "solved") else result.status)
    if solved and validate:
        sol = result.solution
        problems = validate_solution(instance, sol.meetings, [p.cells for p in sol.paths])
        if problems:
            raise RuntimeError(f"{scen_name} k={k} {variant}: invalid solution: {problems[0]}")
    return RunRecord(
        **base,
        solved=solved,
        soc=result.cost if solved else None,
        time_ms=min(time_ms, timeout_s * 1000),
        meeting_sets=stats.meeting_sets,
        first_set_solved=solved and stats.first_set_solved,
        roots_expanded=stats.roots_expanded,
        regulars_expanded=stats.regulars_expanded,
        planner_calls=stats.planner_calls,
        status=status,
    )


def run_benchmark(config: BenchConfig) -> list[RunRecord]:
    """Run every (scenario, k, variant) combination; records come back in input order."""
    grid = load_map(config.map_path)
    jobs = []
    for scen_name, entries in benchmark_queries(config, grid):
        for k in config.tasks:
            try:
                instance = build_instance(grid, entries, k, name=f"{scen_name}-k{k}")
            except ScenarioError as exc:
                raise ScenarioError(f"{scen_name}: {exc}") from None
            for variant in config.variants:
                jobs.append((instance, grid.name, scen_name, k, variant,
                             config.timeout_ms / 1000, config.allow_ill_formed, config.validate))
    if config.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(config.jobs) as pool:
            runs = pool.map(_run_one, jobs)
            return [_progress(rec, config.verbose) for rec in runs]
    return [_progress(_run_one(job), config.verbose) for job in jobs]


def _progress(rec: RunRecord, verbose: bool) -> RunRecord:
    if verbose:
        print(f"{rec.scen} k={rec.k} {rec.variant}: {rec.status} soc={rec.soc} "
              f"{rec.time_ms:.0f} ms", file=sys.stderr, flush=True)
    return rec


def records_to_csv(records: Iterable[RunRecord]) -> str:
    buf = io.StringIO()
    buf.write(f"# cocbs-bench schema v{SCHEMA_VERSION}: {','.join(COLUMNS)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for rec in records:
        writer.writerow(rec.row())
    return buf.getvalue()


def read_records(text: str) -> list[RunRecord]:
    """Inverse of :func:`records_to_csv`."""
    lines = [line for line in text.splitlines() if not line.startswith("#")]
    out = []
    for row in csv.DictReader(lines):
        out.append(
            RunRecord(
                map=row["map"],
                scen=row["scen"],
                k=int(row["k"]),
                variant=row["variant"],
                solved=row["solved"] == "1",
                soc=int(row["soc"]) if row["soc"] else None,
                time_ms=float(row["time_ms"]),
                meeting_sets=int(row["meeting_sets"]),
                first_set_solved=row["first_set_solved"] == "1",
                roots_expanded=int(row["roots_expanded"]),
                regulars_expanded=int(row["regulars_expanded"]),
                planner_calls=int(row["planner_calls"]),
                status=row["status"],
            )
        )
    return out


def aggregate(records: Iterable[RunRecord]) -> list[dict]:
    """Per (k, variant): success rate over non-rejected runs, mean meeting sets and eta.

    Mean meeting sets and eta (share solved with the first meeting set) are
    taken over solved runs only.
    """
    groups: dict[tuple[int, str], list[RunRecord]] = defaultdict(list)
    for rec in records:
        groups[rec.k, rec.variant].append(rec)
    order = {v: i for i, v in enumerate(VARIANTS)}
    report = []
    for (k, variant), recs in sorted(groups.items(), key=lambda kv: (kv[0][0], order.get(kv[0][1], 99))):
        attempted = [r for r in recs if r.status != "rejected"]
        solved = [r for r in attempted if r.solved]
        report.append(
            {
                "k": k,
                "variant": variant,
                "attempted": len(attempted),
                "rejected": len(recs) - len(attempted),
                "solved": len(solved),
                "success_rate": len(solved) / len(attempted) if attempted else None,
                "mean_meeting_sets": float(np.mean([r.meeting_sets for r in solved])) if solved else None,
                "eta": sum(r.first_set_solved for r in solved) / len(solved) if solved else None,
            }
        )
    return report


def format_report(report: list[dict]) -> str:
    def fmt(x):
        return "-" if x is None else f"{x:.3f}" if isinstance(x, float) else str(x)

    head = ["k", "variant", "attempted", "rejected", "solved", "success_rate", "mean_meeting_sets", "eta"]
    lines = ["\t".join(head)]
    lines += ["\t".join(fmt(row[h]) for h in head) for row in report]
    return "\n".join(lines) + "\n"


# -- argument handling ----------------------------------------------------------


def _solve_cmd(args: argparse.Namespace) -> int:
    try:
        instance = load_instance(args.instance)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    verdict = is_well_formed(instance)
    if args.check_well_formed_only:
        print(json.dumps({"well_formed": verdict.ok, "clause": verdict.clause,
                          "task": verdict.task, "message": verdict.message}))
        if not verdict:
            print(f"not well-formed ({verdict.clause}): {verdict.message}", file=sys.stderr)
        return EXIT_SOLVED if verdict else EXIT_NOT_WELL_FORMED
    if not verdict and not args.allow_ill_formed:
        print(f"not well-formed ({verdict.clause}): {verdict.message}", file=sys.stderr)
        return EXIT_NOT_WELL_FORMED
    result = CoCBS(instance, timeout=args.timeout_ms / 1000, **VARIANTS[args.variant]).solve()
    if result.status == "timeout":
        print(f"timeout after {args.timeout_ms} ms", file=sys.stderr)
        print(json.dumps({"cost": None, "stats": result.stats.to_json()}))
        return EXIT_TIMEOUT
    if not result.solved:
        print(f"no solution: {result.status}", file=sys.stderr)
        return EXIT_ERROR
    print(json.dumps(result.solution.to_json(result.stats), indent=args.indent))
    return EXIT_SOLVED


def _bench_wellformed(config: BenchConfig) -> str:
    grid = load_map(config.map_path)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["map", "scen", "k", "well_formed", "clause", "task", "message"])
    for scen_name, entries in benchmark_queries(config, grid):
        for k in config.tasks:
            v = is_well_formed(build_instance(grid, entries, k))
            writer.writerow([grid.name, scen_name, k, int(v.ok), v.clause or "",
                             "" if v.task is None else v.task, v.message])
    return buf.getvalue()


def _bench_cmd(args: argparse.Namespace) -> int:
    config = BenchConfig(
        map_path=args.map,
        scen=args.scen or [],
        tasks=args.tasks,
        variants=args.variant or list(VARIANTS),
        timeout_ms=args.timeout_ms,
        seed=args.seed,
        queries=args.queries,
        jobs=args.jobs,
        allow_ill_formed=args.allow_ill_formed,
        verbose=args.verbose,
    )
    try:
        if args.check_well_formed_only:
            text = _bench_wellformed(config)
        else:
            records = run_benchmark(config)
            report = aggregate(records)
            if args.format == "json":
                text = json.dumps({"schema": SCHEMA_VERSION,
                                   "records": [asdict(r) for r in records],
                                   "report": report}, indent=2) + "\n"
            else:
                text = records_to_csv(records)
            if args.report:
                Path(args.report).write_text(json.dumps(report, indent=2) + "\n")
            print(format_report(report), file=sys.stderr, end="")
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_SOLVED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cocbs", description="Optimal Co-MAPF solver.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--timeout-ms", type=int, default=120_000)
        p.add_argument("--check-well-formed-only", action="store_true",
                       help="report the well-formedness verdict and stop")
        p.add_argument("--allow-ill-formed", action="store_true",
                       help="search instances that fail the well-formedness test")

    p = sub.add_parser("solve", help="solve one JSON instance")
    p.add_argument("instance")
    p.add_argument("--variant", choices=list(VARIANTS), default="pc-le")
    p.add_argument("--indent", type=int, default=None)
    common(p)
    p.set_defaults(func=_solve_cmd)

    p = sub.add_parser("bench", help="run a benchmark batch")
    p.add_argument("--map", required=True)
    p.add_argument("--scen", nargs="*", help="scenario files or directories (default: random)")
    p.add_argument("--tasks", type=int, nargs="+", required=True)
    p.add_argument("--variant", choices=list(VARIANTS), action="append")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--queries", type=int, default=25)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out")
    p.add_argument("--report", help="also write the aggregate report as JSON")
    p.add_argument("-v", "--verbose", action="store_true", help="log each run to standard error")
    common(p)
    p.set_defaults(func=_bench_cmd)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
