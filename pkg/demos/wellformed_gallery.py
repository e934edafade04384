"""Which instances are well-formed, and what that guarantees.

An instance is well-formed when each pair can meet somewhere that no agent
needs to occupy forever, reachable without crossing such resting cells. Every
well-formed instance is solvable; the converse fails, as the first example
shows.

Run from the repository root::

    python demos/wellformed_gallery.py
"""

from pathlib import Path

import numpy as np

from cocbs.grid_map import random_grid
from cocbs.oracle import solve_exhaustive
from cocbs.scenario import load_instance, random_instance
from cocbs.search import solve
from cocbs.wellformed import is_well_formed

DATA = Path(__file__).resolve().parent.parent / "data"

# %% Two hand-made 3x3 instances
for name in ("fig2a", "fig2b"):
    inst = load_instance(DATA / f"{name}.json")
    verdict = is_well_formed(inst)
    optimum = solve_exhaustive(inst, cost_bound=50)
    print(f"{name}: well-formed={verdict.ok} {verdict.clause or ''} -> optimum {optimum.cost}")

# %% How often random instances pass, by obstacle density
rng = np.random.default_rng(0)
for ratio in (0.0, 0.1, 0.2, 0.3):
    passed = 0
    for _ in range(200):
        inst = random_instance(random_grid(8, 8, ratio, rng), 3, rng)
        passed += bool(is_well_formed(inst))
    print(f"8x8, {ratio:.0%} obstacles, 3 tasks: {passed / 200:.0%} well-formed")

# %% Well-formed instances always come back solved
rng = np.random.default_rng(1)
solved = total = 0
while total < 50:
    inst = random_instance(random_grid(8, 8, 0.2, rng), 3, rng)
    if is_well_formed(inst):
        total += 1
        solved += solve(inst, use_pc=True, use_le=True).solved
print(f"solved {solved}/{total} well-formed instances")
