"""Well-formedness of Co-MAPF instances.

Endpoints are all agent starts plus every task start and goal. Two cells are
*connected* when some path joins them whose interior cells are all
non-endpoints. An instance is well-formed iff for every task:

* (C1) some non-endpoint cell is connected to the task start, the task goal
  and the follower's start; and
* (C2) the task start is connected to the leader's start.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grid_map import Cell
from .meetings import MeetingTable
from .scenario import Instance


@dataclass(frozen=True)
class WellFormedness:
    ok: bool
    clause: str | None = None
    task: int | None = None
    message: str = ""

    def __bool__(self) -> bool:
        return self.ok


def endpoints(instance: Instance) -> frozenset[Cell]:
    cells = set(instance.agent_starts)
    for task in instance.tasks:
        cells.add(task.start)
        cells.add(task.goal)
    return frozenset(cells)


def _interior_components(instance: Instance, eps: frozenset[Cell]) -> np.ndarray:
    grid = instance.grid
    interior = ~grid.blocked
    for r, c in eps:
        interior[r, c] = False
    labels, _ = ndimage.label(interior)
    return labels


def _touching(instance: Instance, labels: np.ndarray, cell: Cell) -> set[int]:
    """Labels of the non-endpoint components adjacent to ``cell``."""
    return {int(labels[w]) for w in instance.grid.neighbors(cell) if labels[w]}


def is_well_formed(instance: Instance) -> WellFormedness:
    """Check both clauses for every task in ``O(|V|)`` after one component labelling."""
    eps = endpoints(instance)
    labels = _interior_components(instance, eps)
    grid = instance.grid
    for i, task in enumerate(instance.tasks):
        near_pickup = _touching(instance, labels, task.start)
        shared = (
            near_pickup
            & _touching(instance, labels, task.goal)
            & _touching(instance, labels, instance.follower_starts[i])
        )
        if not shared:
            return WellFormedness(
                False, "C1", i,
                f"task {i}: no non-endpoint cell is connected to its start, its goal "
                f"and follower {i}'s start",
            )
        lead = instance.leader_starts[i]
        linked = (
            lead == task.start
            or lead in grid.neighbors(task.start)
            or bool(near_pickup & _touching(instance, labels, lead))
        )
        if not linked:
            return WellFormedness(
                False, "C2", i,
                f"task {i}: its start is not connected to leader {i}'s start "
                "through non-endpoint cells",
            )
    return WellFormedness(True)


def has_nonendpoint_meeting(instance: Instance, tables: list[MeetingTable]) -> bool:
    """Fast pre-filter: every task can meet at some non-endpoint cell, ignoring other agents.

    This uses unrestricted shortest paths, so it is necessary but not
    sufficient for :func:`is_well_formed`.
    """
    eps = endpoints(instance)
    for table in tables:
        if not any(table.cost(v, table.earliest(v)) < float("inf")
                   for v in instance.grid.free_cells() if v not in eps):
            return False
    return True
