"""Summarize the random-32-32-20 benchmark runs stored in ``bench_results/``.

Produce them first with ``bench_results/run.sh`` (several hours on one core).
This script prints success rate per task count, the mean number of meeting
sets generated, the share of instances solved with the first meeting set,
and how often lazy expansion saved planner calls.

Run from the repository root::

    python demos/benchmark_summary.py
"""

from pathlib import Path

import numpy as np

from cocbs.cli import aggregate, format_report, read_records

RESULTS = Path(__file__).resolve().parent.parent / "bench_results"

# %% Load every stored CSV
records = []
for path in sorted(RESULTS.glob("*.csv")):
    records += read_records(path.read_text())
print(f"{len(records)} runs from {RESULTS}")

# %% Success rate, mean meeting sets and eta per (k, variant)
print(format_report(aggregate(records)))

# %% Lazy expansion against eager root planning, on instances both solved
keyed = {(r.scen, r.k, r.variant): r for r in records}
ratios = []
for (scen, k, variant), pc in keyed.items():
    le = keyed.get((scen, k, "pc-le"))
    if variant == "pc" and pc.solved and le is not None and le.solved and pc.meeting_sets > 1:
        ratios.append(le.planner_calls / pc.planner_calls)
if ratios:
    ratios = np.array(ratios)
    print(f"LE/eager planner calls over {len(ratios)} multi-root instances: "
          f"median {np.median(ratios):.2f}, fewer on {np.mean(ratios < 1):.0%}")

# %% Wall time of solved runs
for variant in ("basic", "pc", "pc-le"):
    times = np.array([r.time_ms for r in records if r.variant == variant and r.solved])
    if times.size:
        print(f"{variant:6s} solved-run time ms: median {np.median(times):.0f}, "
              f"90th pct {np.percentile(times, 90):.0f}")
