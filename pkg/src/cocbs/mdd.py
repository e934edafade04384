"""Multi-value decision diagrams with intermediate goals, and conflict prioritization.

An MDD of cost ``c`` holds, layer by layer, every cell an agent can occupy at
time ``t`` on some valid timed path of exactly ``c`` moves:

* leader MDDs keep only cells on paths that visit the task start, found by
  flagging task-start nodes with their descendants (forward) and their
  ancestors (backward) and dropping unflagged nodes;
* follower MDDs force the meeting-time layer to the single meeting cell.
"""

from __future__ import annotations

import enum
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass

from .grid_map import Cell
from .pathfinding import ConstraintTable, FieldCache, _as_table
from .scenario import Instance


class ConflictClass(enum.IntEnum):
    CARDINAL = 0
    SEMI_CARDINAL = 1
    NON_CARDINAL = 2


@dataclass(frozen=True)
class MDD:
    role: str
    cost: int
    layers: tuple[frozenset[Cell], ...]
    edges: tuple[frozenset[tuple[Cell, Cell]], ...]

    @property
    def empty(self) -> bool:
        return not self.layers or not self.layers[0]

    def width(self, t: int) -> int:
        return len(self.layers[t]) if 0 <= t < len(self.layers) else 0

    def num_nodes(self) -> int:
        return sum(len(layer) for layer in self.layers)

    def is_singleton(self, t: int, cell: Cell) -> bool:
        return 0 <= t < len(self.layers) and self.layers[t] == {cell}

    def dump(self) -> str:
        """One line per layer: ``t: (r,c) (r,c) ...`` with cells sorted."""
        lines = []
        for t, layer in enumerate(self.layers):
            cells = " ".join(f"({r},{c})" for r, c in sorted(layer))
            lines.append(f"{t}: {cells}".rstrip())
        return "\n".join(lines)


def _empty(role: str, cost: int) -> MDD:
    n = max(cost + 1, 0)
    return MDD(role, cost, tuple(frozenset() for _ in range(n)),
               tuple(frozenset() for _ in range(max(n - 1, 0))))


def _two_pass(
    fields: FieldCache,
    start: Cell,
    terminal: Cell,
    cost: int,
    table: ConstraintTable,
    allowed_at: Callable[[Cell, int], bool],
) -> tuple[list[set[Cell]], list[set[tuple[Cell, Cell]]]]:
    to_term = fields(terminal).rows
    fwd: list[set[Cell]] = [set() for _ in range(cost + 1)]
    if (
        (start, 0) not in table.vertices
        and allowed_at(start, 0)
        and to_term[start[0]][start[1]] <= cost
    ):
        fwd[0].add(start)
    for t in range(cost):
        nt, layer = t + 1, fwd[t + 1]
        for u in fwd[t]:
            for w in fields.moves(u):
                if w in layer or to_term[w[0]][w[1]] > cost - nt:
                    continue
                if table.allows(u, w, nt) and allowed_at(w, nt):
                    layer.add(w)
    keep: list[set[Cell]] = [set() for _ in range(cost + 1)]
    edges: list[set[tuple[Cell, Cell]]] = [set() for _ in range(cost)]
    keep[cost] = fwd[cost] & {terminal}
    for t in range(cost - 1, -1, -1):
        nxt = keep[t + 1]
        for u in fwd[t]:
            for w in fields.moves(u):
                if w in nxt and table.allows(u, w, t + 1):
                    keep[t].add(u)
                    edges[t].add((u, w))
    return keep, edges


def _freeze(role, cost, layers, edges) -> MDD:
    if not layers[0]:
        return _empty(role, cost)
    return MDD(role, cost, tuple(map(frozenset, layers)), tuple(map(frozenset, edges)))


def build_leader_mdd(
    instance: Instance,
    task: int,
    meeting,
    constraints=None,
    cost: int | None = None,
    fields: FieldCache | None = None,
) -> MDD:
    """All cells on leader paths of ``cost`` moves (default: the meeting time) through the task start."""
    fields = fields or FieldCache(instance.grid)
    table = _as_table(constraints)
    loc, when = tuple(meeting[0]), meeting[1]
    cost = when if cost is None else cost
    pickup = instance.tasks[task].start
    start = instance.leader_starts[task]
    if cost < 0:
        return _empty("leader", cost)
    keep, edges = _two_pass(fields, start, loc, cost, table, lambda cell, t: True)

    valid_fwd: list[set[Cell]] = [set() for _ in range(cost + 1)]
    for t in range(cost + 1):
        if pickup in keep[t]:
            valid_fwd[t].add(pickup)
        if t:
            valid_fwd[t] |= {w for u, w in edges[t - 1] if u in valid_fwd[t - 1]}
    valid_bwd: list[set[Cell]] = [set() for _ in range(cost + 1)]
    for t in range(cost, -1, -1):
        if pickup in keep[t]:
            valid_bwd[t].add(pickup)
        if t < cost:
            valid_bwd[t] |= {u for u, w in edges[t] if w in valid_bwd[t + 1]}
    layers = [valid_fwd[t] | valid_bwd[t] for t in range(cost + 1)]
    kept_edges = [
        {(u, w) for u, w in edges[t] if u in valid_fwd[t] or w in valid_bwd[t + 1]}
        for t in range(cost)
    ]
    return _freeze("leader", cost, layers, kept_edges)


def build_follower_mdd(
    instance: Instance,
    task: int,
    meeting,
    constraints=None,
    cost: int | None = None,
    fields: FieldCache | None = None,
) -> MDD:
    """All cells on follower paths of ``cost`` moves meeting at ``meeting`` and first reaching the goal at ``cost``."""
    fields = fields or FieldCache(instance.grid)
    table = _as_table(constraints)
    loc, when = tuple(meeting[0]), meeting[1]
    goal = instance.tasks[task].goal
    if cost is None:
        cost = when + int(fields(goal)[loc])
    start = instance.follower_starts[task]
    if cost < when:
        return _empty("follower", cost)

    def allowed_at(cell: Cell, t: int) -> bool:
        if t == when:
            return cell == loc and not (loc == goal and when < cost)
        return not (when < t < cost and cell == goal)

    keep, edges = _two_pass(fields, start, goal, cost, table, allowed_at)
    return _freeze("follower", cost, keep, edges)


def classify_conflict(conflict, mdd_a: MDD | None, mdd_b: MDD | None) -> ConflictClass:
    """Cardinality from MDD layer widths.

    A vertex conflict at ``(v, t)`` is cardinal for an agent when its layer
    ``t`` is exactly ``{v}``. For an edge conflict the agent's layers ``t-1``
    and ``t`` must be the two endpoints of its move. Missing MDDs or layers
    count as wide.
    """
    t, v, u = conflict.t, conflict.v, conflict.u
    if u is None:
        a_hit = mdd_a is not None and mdd_a.is_singleton(t, v)
        b_hit = mdd_b is not None and mdd_b.is_singleton(t, v)
    else:
        a_hit = mdd_a is not None and mdd_a.is_singleton(t - 1, u) and mdd_a.is_singleton(t, v)
        b_hit = mdd_b is not None and mdd_b.is_singleton(t - 1, v) and mdd_b.is_singleton(t, u)
    if a_hit and b_hit:
        return ConflictClass.CARDINAL
    if a_hit or b_hit:
        return ConflictClass.SEMI_CARDINAL
    return ConflictClass.NON_CARDINAL


def select_conflict(
    conflicts: Sequence,
    mdds: Mapping[int, MDD] | Callable[[int], MDD | None],
) -> tuple[object, ConflictClass]:
    """Pick the earliest cardinal conflict, else the earliest semi-cardinal, else the first.

    ``conflicts`` must be in time order. ``mdds`` maps an agent id to its MDD
    and may be a callable so diagrams are only built when needed.
    """
    if not conflicts:
        raise ValueError("no conflicts to select from")
    lookup = mdds if callable(mdds) else mdds.get
    best, best_cls = conflicts[0], ConflictClass.NON_CARDINAL
    for conflict in conflicts:
        cls = classify_conflict(conflict, lookup(conflict.a1), lookup(conflict.a2))
        if cls == ConflictClass.CARDINAL:
            return conflict, cls
        if cls < best_cls:
            best, best_cls = conflict, cls
    return best, best_cls


def mdd_nodes(mdd: MDD) -> set[tuple[Cell, int]]:
    return {(cell, t) for t, layer in enumerate(mdd.layers) for cell in layer}


def path_nodes(paths: Iterable[Sequence[Cell]]) -> set[tuple[Cell, int]]:
    return {(cell, t) for p in paths for t, cell in enumerate(p)}
