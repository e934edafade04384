"""Generate the stand-in benchmark maps and scenario files under ``data/``.

The two maps are generated, not downloaded: a seeded 32x32 grid with 20%
obstacles, and a 57x27 warehouse-style layout. Each gets 25 scenario files
with 44 rows, enough for up to 22 tasks under consecutive row pairing.

Run from the repository root::

    python demos/make_benchmark_data.py
"""

from pathlib import Path

import numpy as np

from cocbs.grid_map import random_grid, warehouse_grid
from cocbs.scenario import random_scen_entries, render_scen

DATA = Path(__file__).resolve().parent.parent / "data"
QUERIES, ROWS = 25, 44

# %% maps
maps = {
    "random-32-32-20": random_grid(32, 32, 0.20, np.random.default_rng(20), name="random-32-32-20"),
    "warehouse-57-27": warehouse_grid(name="warehouse-57-27"),
}
(DATA / "maps").mkdir(parents=True, exist_ok=True)
for name, grid in maps.items():
    (DATA / "maps" / f"{name}.map").write_text(grid.render())
    print(f"{name}: {grid.height}x{grid.width}, {grid.num_free} free cells")

# %% scenarios: one seed per (map, query) so files are reproducible one by one
for m, (name, grid) in enumerate(maps.items()):
    out = DATA / "scens" / name
    out.mkdir(parents=True, exist_ok=True)
    for q in range(QUERIES):
        rng = np.random.default_rng([m, q])
        entries = random_scen_entries(grid, ROWS, rng)
        (out / f"{name}-random-{q + 1:02d}.scen").write_text(render_scen(entries))
    print(f"{name}: wrote {QUERIES} scenario files to {out}")
