"""Single-agent distance fields and constrained space-time planning.

Leader paths must pick the task up (visit the task start) and then be at the
meeting cell exactly at the meeting time. Follower paths must be at the
meeting cell at the meeting time and then reach the task goal as early as
possible, after which the follower disappears.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from collections.abc import Iterable
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .grid_map import Cell, GridMap
from .scenario import Instance

INF = math.inf


class DistanceField:
    """Unit-cost shortest distances from ``source`` to every cell (``inf`` if unreachable)."""

    __slots__ = ("source", "dist", "rows")

    def __init__(self, source: Cell, dist: np.ndarray):
        self.source = source
        self.dist = dist
        self.dist.setflags(write=False)
        self.rows: list[list[float]] = dist.tolist()

    def __getitem__(self, cell: Cell) -> float:
        return self.rows[cell[0]][cell[1]]


def distance_field(grid: GridMap, source: Cell) -> DistanceField:
    """Breadth-first distances from ``source``."""
    if not grid.is_free(source):
        raise ValueError(f"source {source} is not traversable")
    dist = np.full((grid.height, grid.width), INF)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        du = dist[u] + 1
        for w in grid.neighbors(u):
            if dist[w] == INF:
                dist[w] = du
                queue.append(w)
    return DistanceField(source, dist)


class FieldCache:
    """Memoized distance fields over one map."""

    def __init__(self, grid: GridMap):
        self.grid = grid
        self._fields: dict[Cell, DistanceField] = {}
        self._moves: dict[Cell, tuple[Cell, ...]] = {}

    def __call__(self, source: Cell) -> DistanceField:
        field = self._fields.get(source)
        if field is None:
            field = self._fields[source] = distance_field(self.grid, source)
        return field

    def moves(self, cell: Cell) -> tuple[Cell, ...]:
        """Successor cells in planner preference order: left, right, up, down, wait."""
        out = self._moves.get(cell)
        if out is None:
            nbrs = self.grid.neighbors(cell)
            order = {(0, -1): 0, (0, 1): 1, (-1, 0): 2, (1, 0): 3}
            ranked = sorted(nbrs, key=lambda w: order[(w[0] - cell[0], w[1] - cell[1])])
            out = self._moves[cell] = (*ranked, cell)
        return out


class Constraint(NamedTuple):
    """Forbid ``agent`` from being at ``v`` at time ``t``.

    With ``u`` set it is an edge constraint: the agent may not move from
    ``u`` (at ``t - 1``) to ``v`` (at ``t``).
    """

    agent: int
    v: Cell
    t: int
    u: Cell | None = None

    @property
    def is_edge(self) -> bool:
        return self.u is not None


class ConstraintTable:
    """Per-agent lookup of vertex and edge prohibitions."""

    __slots__ = ("vertices", "edges", "max_t")

    def __init__(self, constraints: Iterable[Constraint] = ()):
        self.vertices: set[tuple[Cell, int]] = set()
        self.edges: set[tuple[Cell, Cell, int]] = set()
        self.max_t = -1
        for con in constraints:
            if con.u is None:
                self.vertices.add((con.v, con.t))
            else:
                self.edges.add((con.u, con.v, con.t))
            self.max_t = max(self.max_t, con.t)

    def __len__(self) -> int:
        return len(self.vertices) + len(self.edges)

    def allows(self, u: Cell, v: Cell, t: int) -> bool:
        """Whether moving (or waiting) from ``u`` to ``v``, arriving at ``t``, is permitted."""
        return (v, t) not in self.vertices and (u, v, t) not in self.edges


@dataclass(frozen=True)
class Path:
    """``cells[t]`` is the agent's location at time ``t``; the agent leaves the map after the last step."""

    cells: tuple[Cell, ...]

    @property
    def finish_time(self) -> int:
        return len(self.cells) - 1

    def __len__(self) -> int:
        return len(self.cells)

    def __getitem__(self, t: int) -> Cell:
        return self.cells[t]


def _as_table(constraints) -> ConstraintTable:
    if isinstance(constraints, ConstraintTable):
        return constraints
    return ConstraintTable(constraints or ())


def _rebuild(parents: dict, key) -> Path:
    cells = []
    while key is not None:
        cells.append(key[0])
        key = parents[key]
    return Path(tuple(reversed(cells)))


def plan_leader_path(
    instance: Instance,
    task: int,
    meeting,
    constraints=None,
    fields: FieldCache | None = None,
) -> Path | None:
    """A path of exactly ``meeting.t + 1`` steps that visits the task start and ends at the meeting cell.

    Returns ``None`` when no such timed path respects ``constraints``.
    """
    fields = fields or FieldCache(instance.grid)
    table = _as_table(constraints)
    pickup = instance.tasks[task].start
    loc, deadline = tuple(meeting[0]), meeting[1]
    to_pickup = fields(pickup).rows
    to_meeting = fields(loc).rows
    pickup_to_meeting = to_pickup[loc[0]][loc[1]]

    def h(cell: Cell, picked: int) -> float:
        if picked:
            return to_meeting[cell[0]][cell[1]]
        return to_pickup[cell[0]][cell[1]] + pickup_to_meeting

    start = instance.leader_starts[task]
    picked0 = int(start == pickup)
    if (start, 0) in table.vertices or h(start, picked0) > deadline:
        return None
    root = (start, 0, picked0)
    parents = {root: None}
    heap = [(h(start, picked0), 0, 0, root)]
    seq = 0
    goal = (loc, deadline, 1)
    vertices, edges = table.vertices, table.edges
    while heap:
        _, _, _, state = heapq.heappop(heap)
        if state == goal:
            return _rebuild(parents, state)
        cell, t, picked = state
        nt = t + 1
        if nt > deadline:
            continue
        for nxt in fields.moves(cell):
            if (nxt, nt) in vertices or (cell, nxt, nt) in edges:
                continue
            np_ = 1 if picked or nxt == pickup else 0
            f = nt + h(nxt, np_)
            if f > deadline:
                continue
            key = (nxt, nt, np_)
            if key in parents:
                continue
            parents[key] = state
            seq += 1
            heapq.heappush(heap, (f, -nt, seq, key))
    return None


def plan_follower_path(
    instance: Instance,
    task: int,
    meeting,
    constraints=None,
    fields: FieldCache | None = None,
) -> Path | None:
    """Earliest-finishing path through ``(meeting.loc, meeting.t)`` ending at the task goal.

    The follower finishes on its first arrival at the goal after the meeting.
    Returns ``None`` when the constraints make this impossible.
    """
    fields = fields or FieldCache(instance.grid)
    table = _as_table(constraints)
    goal_cell = instance.tasks[task].goal
    loc, when = tuple(meeting[0]), meeting[1]
    to_loc = fields(loc).rows
    to_goal = fields(goal_cell).rows
    pre_f = when + to_goal[loc[0]][loc[1]]
    if pre_f == INF:
        return None
    # Past the last constrained step every time is equivalent; collapse them.
    settle = max(when, table.max_t) + 1
    horizon = settle + instance.grid.num_free

    start = instance.follower_starts[task]
    if (start, 0) in table.vertices or to_loc[start[0]][start[1]] > when:
        return None
    met0 = int(start == loc and when == 0)
    root = (start, 0, met0)
    if met0 and start == goal_cell:
        return Path((start,))
    parents = {root: None}
    closed: set = set()
    heap = [(pre_f if not met0 else to_goal[start[0]][start[1]], 0, 0, root)]
    seq = 0
    vertices, edges = table.vertices, table.edges
    while heap:
        _, _, _, state = heapq.heappop(heap)
        cell, t, met = state
        if met and cell == goal_cell:
            return _rebuild(parents, state)
        ckey = (cell, min(t, settle), met)
        if ckey in closed:
            continue
        closed.add(ckey)
        nt = t + 1
        if nt > horizon:
            continue
        for nxt in fields.moves(cell):
            if (nxt, nt) in vertices or (cell, nxt, nt) in edges:
                continue
            if met:
                f = nt + to_goal[nxt[0]][nxt[1]]
                nmet = 1
            else:
                if nt + to_loc[nxt[0]][nxt[1]] > when:
                    continue
                nmet = 1 if nt == when else 0
                f = pre_f
            if (nxt, min(nt, settle), nmet) in closed:
                continue
            key = (nxt, nt, nmet)
            if key in parents:
                continue
            parents[key] = state
            seq += 1
            heapq.heappush(heap, (f, -nt, seq, key))
    return None
