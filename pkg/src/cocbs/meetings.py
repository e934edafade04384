"""Meeting costs, per-task meetings tables and best-first meeting streams.

For task ``i`` a meeting at cell ``v`` and time ``t`` costs::

    C_i(v, t) = 2 * t + d(v, g_i)        if t >= earliest(v)
              = inf                      otherwise

    earliest(v) = max(d(leader_start, s_i) + d(s_i, v), d(follower_start, v))

The leader contributes ``t`` (it disappears after the meeting) and the
follower contributes ``t + d(v, g_i)``.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import NamedTuple

from .grid_map import Cell
from .pathfinding import INF, DistanceField, FieldCache
from .scenario import Instance


class UnsolvableTaskError(ValueError):
    """A task has no finite-cost meeting even when planned in isolation."""


class Meeting(NamedTuple):
    loc: Cell
    t: int


class MeetingTable:
    """Heap of candidate meetings for one task, ordered by ``(cost, row, col, time)``.

    Each cell starts at its earliest feasible time. Popping a meeting puts the
    same cell back one time step later, so the heap never empties and the
    popped costs never decrease.

    Popped meetings are also remembered in order, so a meeting set can refer
    to "the j-th best meeting of task i" via :meth:`meeting_at` while the heap
    itself is only ever advanced forward.
    """

    def __init__(
        self,
        task: int,
        lead_to_pickup: float,
        from_pickup: DistanceField,
        from_follower: DistanceField,
        from_goal: DistanceField,
    ):
        self.task = task
        self.lead_to_pickup = lead_to_pickup
        self.from_pickup = from_pickup
        self.from_follower = from_follower
        self.from_goal = from_goal
        self.heap: list[tuple[float, int, int, int]] = []
        self.stream: list[tuple[Meeting, float]] = []
        self.pops = 0

    def earliest(self, v: Cell) -> float:
        return earliest_meeting_time(self, v)

    def cost(self, v: Cell, t: float) -> float:
        return meeting_cost(self, v, t)

    def __len__(self) -> int:
        return len(self.heap)

    def peek_cost(self) -> float:
        return self.heap[0][0] if self.heap else INF

    def next_meeting(self) -> Meeting:
        return next_meeting(self)

    def meeting_at(self, index: int) -> tuple[Meeting, float]:
        """The ``index``-th meeting of the best-first stream with its cost."""
        while len(self.stream) <= index:
            meeting = next_meeting(self)
            self.stream.append((meeting, self.cost(meeting.loc, meeting.t)))
        return self.stream[index]


def earliest_meeting_time(table: MeetingTable, v: Cell) -> float:
    lead = table.lead_to_pickup + table.from_pickup[v]
    follow = table.from_follower[v]
    return max(lead, follow)


def meeting_cost(table: MeetingTable, v: Cell, t: float) -> float:
    to_goal = table.from_goal[v]
    if t == INF or t < earliest_meeting_time(table, v) or to_goal == INF:
        return INF
    return int(2 * t + to_goal)


def compute_meeting_table(
    instance: Instance, task: int, fields: FieldCache | None = None
) -> MeetingTable:
    """Seed the table with every cell at its earliest meeting time.

    Cells with infinite cost are left out; an empty heap means the task cannot
    be completed even without other agents.
    """
    fields = fields or FieldCache(instance.grid)
    spec = instance.tasks[task]
    from_pickup = fields(spec.start)
    table = MeetingTable(
        task,
        from_pickup[instance.leader_starts[task]],
        from_pickup,
        fields(instance.follower_starts[task]),
        fields(spec.goal),
    )
    if math.isinf(table.lead_to_pickup):
        return table
    for v in instance.grid.free_cells():
        t = table.earliest(v)
        cost = table.cost(v, t)
        if cost < INF:
            table.heap.append((int(cost), v[0], v[1], int(t)))
    heapq.heapify(table.heap)
    return table


def next_meeting(table: MeetingTable) -> Meeting:
    """Pop the cheapest meeting and re-offer its cell one step later."""
    cost, r, c, t = heapq.heappop(table.heap)
    heapq.heappush(table.heap, (cost + 2, r, c, t + 1))
    table.pops += 1
    return Meeting((r, c), t)


@dataclass(frozen=True)
class MeetingSet:
    """One meeting per task, plus each meeting's position in its task's stream."""

    meetings: tuple[Meeting, ...]
    costs: tuple[float, ...]
    index: tuple[int, ...]

    @property
    def cost(self) -> float:
        return sum(self.costs)

    def __len__(self) -> int:
        return len(self.meetings)

    def __iter__(self):
        return iter(self.meetings)

    def __getitem__(self, i: int) -> Meeting:
        return self.meetings[i]


def meeting_set_at(tables: list[MeetingTable], index: tuple[int, ...]) -> MeetingSet:
    picked = [table.meeting_at(j) for table, j in zip(tables, index)]
    return MeetingSet(
        tuple(m for m, _ in picked), tuple(c for _, c in picked), tuple(index)
    )


def initial_meeting_set(tables: list[MeetingTable]) -> MeetingSet:
    """The conflict-blind optimum: each task's cheapest meeting."""
    for table in tables:
        if not table.heap:
            raise UnsolvableTaskError(f"task {table.task} has no feasible meeting")
    return meeting_set_at(tables, (0,) * len(tables))
