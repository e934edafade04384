"""Shared fixtures data and brute-force helpers for the test suite.

Everything here is written independently of the package internals: distances
come from a local breadth-first search and timed paths from plain recursion.
"""

from __future__ import annotations

import itertools
import time
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from cocbs.grid_map import GridMap, random_grid
from cocbs.mdd import ConflictClass
from cocbs.oracle import solve_exhaustive
from cocbs.scenario import Instance, load_instance, random_instance
from cocbs.search import VARIANTS, CoCBS
from cocbs.wellformed import is_well_formed

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"
MOVES = ((0, 0), (-1, 0), (1, 0), (0, -1), (0, 1))


def fig3() -> Instance:
    return load_instance(DATA / "fig3.json")


def fig2a() -> Instance:
    return load_instance(DATA / "fig2a.json")


def fig2b() -> Instance:
    return load_instance(DATA / "fig2b.json")


def bfs(grid: GridMap, source) -> dict:
    """Distances from ``source`` to every reachable cell."""
    dist = {source: 0}
    queue = deque([source])
    while queue:
        r, c = queue.popleft()
        for dr, dc in MOVES[1:]:
            w = (r + dr, c + dc)
            if grid.is_free(w) and w not in dist:
                dist[w] = dist[(r, c)] + 1
                queue.append(w)
    return dist


def timed_paths(grid: GridMap, start, length: int, terminal, forbidden=frozenset(), banned_edges=frozenset()):
    """Every sequence of ``length`` moves (waits included) from ``start`` ending at ``terminal``.

    ``forbidden`` holds ``(cell, t)`` pairs and ``banned_edges`` holds
    ``(u, v, t)`` moves into ``v`` at time ``t``. Manhattan distance prunes
    branches that cannot reach ``terminal`` in time.
    """
    out = []

    def rec(path):
        t = len(path) - 1
        u = path[-1]
        if t == length:
            if u == terminal:
                out.append(tuple(path))
            return
        for dr, dc in MOVES:
            w = (u[0] + dr, u[1] + dc)
            if not grid.is_free(w) or (w, t + 1) in forbidden or (u, w, t + 1) in banned_edges:
                continue
            if abs(w[0] - terminal[0]) + abs(w[1] - terminal[1]) > length - t - 1:
                continue
            path.append(w)
            rec(path)
            path.pop()

    if grid.is_free(start) and (start, 0) not in forbidden:
        rec([start])
    return out


# -- the seeded random corpus shared by several acceptance criteria ----------------


def well_formed_corpus(n: int = 240, seed: int = 2024) -> list[Instance]:
    """``n`` well-formed instances on 6x6 to 8x8 grids with 10-20% obstacles and 1-2 tasks."""
    rng = np.random.default_rng(seed)
    out: list[Instance] = []
    while len(out) < n:
        size = int(rng.integers(6, 9))
        ratio = float(rng.uniform(0.10, 0.20))
        k = int(rng.integers(1, 3))
        grid = random_grid(size, size, ratio, rng)
        try:
            inst = random_instance(grid, k, rng, name=f"corpus-{len(out)}")
        except ValueError:
            continue
        if is_well_formed(inst):
            out.append(inst)
    return out


@dataclass
class CorpusRun:
    instance: Instance
    oracle_cost: int | None
    oracle_s: float
    costs: dict[str, int | None] = field(default_factory=dict)
    wall_s: dict[str, float] = field(default_factory=dict)
    cardinal_splits: int = 0
    cardinal_violations: list[str] = field(default_factory=list)


@lru_cache(maxsize=1)
def corpus_runs() -> tuple[CorpusRun, ...]:
    """Oracle and all three variants on every corpus instance (computed once per session)."""
    runs = []
    for inst in well_formed_corpus():
        t0 = time.perf_counter()
        oracle = solve_exhaustive(inst, cost_bound=float("inf"))
        run = CorpusRun(inst, oracle.cost, time.perf_counter() - t0)
        for variant, opts in VARIANTS.items():

            def on_split(node, conflict, cls, children, run=run, variant=variant):
                if cls != ConflictClass.CARDINAL:
                    return
                run.cardinal_splits += 1
                for child in children:
                    if child is not None and child.cost <= node.cost:
                        run.cardinal_violations.append(
                            f"{inst.name} {variant}: child cost {child.cost} <= parent {node.cost}"
                        )

            t0 = time.perf_counter()
            result = CoCBS(inst, timeout=60, on_split=on_split, **opts).solve()
            run.wall_s[variant] = time.perf_counter() - t0
            run.costs[variant] = result.cost
        runs.append(run)
    return tuple(runs)


def all_cells(grid: GridMap) -> list:
    return [c for c in itertools.product(range(grid.height), range(grid.width)) if grid.is_free(c)]
