"""Cooperative conflict-based search over a forest of constraint trees.

Each root fixes one meeting per task and carries no constraints. Nodes are
taken best-first from two queues (regular nodes win ties against roots).
Extracting a conflicted root first generates its meeting-space successors,
one per task with that task's meeting advanced to the next in its stream,
and then every extracted conflicted node is split as in ordinary CBS.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import time
from collections.abc import Callable
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

from .grid_map import Cell
from .mdd import MDD, ConflictClass, build_follower_mdd, build_leader_mdd, select_conflict
from .meetings import (
    MeetingSet,
    MeetingTable,
    UnsolvableTaskError,
    compute_meeting_table,
    initial_meeting_set,
    meeting_set_at,
)
from .pathfinding import (
    Constraint,
    ConstraintTable,
    FieldCache,
    Path,
    plan_follower_path,
    plan_leader_path,
)
from .scenario import Instance, follower_id, is_leader, leader_id, task_of
from .wellformed import is_well_formed

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 120.0


class NotWellFormedError(ValueError):
    def __init__(self, verdict):
        super().__init__(verdict.message)
        self.verdict = verdict


class Conflict(NamedTuple):
    """Agents ``a1 < a2`` collide at time ``t``.

    Vertex conflict: both occupy ``v``. Edge conflict (``u`` set): ``a1``
    moves ``u -> v`` while ``a2`` moves ``v -> u``, both arriving at ``t``.
    """

    t: int
    a1: int
    a2: int
    v: Cell
    u: Cell | None = None

    @property
    def is_edge(self) -> bool:
        return self.u is not None

    def constraints(self) -> tuple[Constraint, Constraint]:
        if self.u is None:
            return Constraint(self.a1, self.v, self.t), Constraint(self.a2, self.v, self.t)
        return (
            Constraint(self.a1, self.v, self.t, self.u),
            Constraint(self.a2, self.u, self.t, self.v),
        )


@dataclass(frozen=True)
class Solution:
    """Paths indexed by agent id (leader ``2i``, follower ``2i+1``) and the meetings they realise."""

    meetings: MeetingSet
    paths: tuple[Path, ...]

    @property
    def cost(self) -> int:
        return compute_soc(self)

    def leader_path(self, task: int) -> Path:
        return self.paths[leader_id(task)]

    def follower_path(self, task: int) -> Path:
        return self.paths[follower_id(task)]

    def replace(self, agent: int, path: Path) -> Solution:
        paths = list(self.paths)
        paths[agent] = path
        return Solution(self.meetings, tuple(paths))

    def to_json(self, stats: SearchStats | None = None) -> dict:
        out = {
            "cost": self.cost,
            "tasks": [
                {
                    "meeting": {"cell": list(m.loc), "t": m.t},
                    "leader_path": [list(c) for c in self.leader_path(i).cells],
                    "follower_path": [list(c) for c in self.follower_path(i).cells],
                }
                for i, m in enumerate(self.meetings)
            ],
        }
        if stats is not None:
            out["stats"] = stats.to_json()
        return out


def compute_soc(solution: Solution) -> int:
    """Sum over agents of their finish times (leaders finish at the meeting)."""
    return sum(p.finish_time for p in solution.paths)


def detect_conflicts(solution: Solution, first_only: bool = False) -> list[Conflict]:
    """All conflicts ordered by ``(t, a1, a2)``, vertex before edge.

    An agent is present from time 0 through its last path step. The meeting
    of a task's own leader and follower is not a conflict.
    """
    paths = [p.cells for p in solution.paths]
    meetings = solution.meetings.meetings
    horizon = max((len(p) for p in paths), default=0)
    found: list[Conflict] = []
    for t in range(horizon):
        occupied: dict[Cell, list[int]] = {}
        moves: dict[tuple[Cell, Cell], int] = {}
        step: list[Conflict] = []
        for a, cells in enumerate(paths):
            if t >= len(cells):
                continue
            v = cells[t]
            here = occupied.setdefault(v, [])
            for b in here:
                if not _is_meeting(b, a, v, t, meetings):
                    step.append(Conflict(t, b, a, v))
            here.append(a)
            if t:
                u = cells[t - 1]
                if u != v:
                    b = moves.get((v, u))
                    if b is not None:
                        step.append(Conflict(t, b, a, u, u=v))
                    moves[(u, v)] = a
        if step:
            step.sort(key=lambda c: (c.a1, c.a2, c.is_edge))
            if first_only:
                return step[:1]
            found.extend(step)
    return found


def _is_meeting(a: int, b: int, v: Cell, t: int, meetings) -> bool:
    if task_of(a) != task_of(b) or a == b:
        return False
    m = meetings[task_of(a)]
    return m.t == t and m.loc == v


def detect_first_conflict(solution: Solution) -> Conflict | None:
    found = detect_conflicts(solution, first_only=True)
    return found[0] if found else None


@dataclass
class SearchStats:
    meeting_sets: int = 0
    roots_expanded: int = 0
    regulars_expanded: int = 0
    nodes_generated: int = 0
    planner_calls: int = 0
    mdds_built: int = 0
    first_set_solved: bool = False
    time_s: float = 0.0

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(eq=False)
class CTNode:
    constraints: frozenset[Constraint]
    meetings: MeetingSet
    root: bool
    solution: Solution | None
    cost: float
    parent: CTNode | None = None
    conflicts: list[Conflict] | None = None

    def agent_constraints(self, agent: int) -> frozenset[Constraint]:
        return frozenset(c for c in self.constraints if c.agent == agent)


@dataclass
class SearchResult:
    status: str
    solution: Solution | None
    stats: SearchStats
    events: list[dict] = field(default_factory=list)

    @property
    def solved(self) -> bool:
        return self.status == "solved"

    @property
    def cost(self) -> int | None:
        return self.solution.cost if self.solution is not None else None


class CoCBS:
    """One search over one instance. Not reusable; create a new object per solve.

    Args:
        use_pc: split cardinal, then semi-cardinal conflicts first.
        use_le: insert new roots priced by their meeting cost and plan their
            paths only when extracted.
        timeout: wall-clock budget in seconds.
        record: keep a per-expansion event log in ``result.events``.
    """

    def __init__(
        self,
        instance: Instance,
        use_pc: bool = False,
        use_le: bool = False,
        timeout: float | None = DEFAULT_TIMEOUT,
        record: bool = False,
        on_split: Callable[[CTNode, Conflict, ConflictClass | None, list[CTNode | None]], None]
        | None = None,
    ):
        self.instance = instance
        self.use_pc = use_pc
        self.use_le = use_le
        self.timeout = timeout
        self.record = record
        self.on_split = on_split
        self.fields = FieldCache(instance.grid)
        self.stats = SearchStats()
        self.events: list[dict] = []
        self.tables: list[MeetingTable] = []
        self._open: list = []
        self._roots: list = []
        self._seq = itertools.count()
        self._seen: set[tuple[int, ...]] = set()
        self._mdd_cache: dict = {}

    # -- paths level ------------------------------------------------------

    def _plan(self, agent: int, meetings: MeetingSet, constraints) -> Path | None:
        self.stats.planner_calls += 1
        task = task_of(agent)
        planner = plan_leader_path if is_leader(agent) else plan_follower_path
        return planner(self.instance, task, meetings[task], constraints, self.fields)

    def _plan_root(self, node: CTNode) -> None:
        parent = node.parent
        if parent is not None and parent.solution is not None:
            paths = list(parent.solution.paths)
            changed = [i for i, (a, b) in enumerate(zip(parent.meetings, node.meetings)) if a != b]
        else:
            paths = [None] * (2 * self.instance.num_tasks)
            changed = range(self.instance.num_tasks)
        for i in changed:
            for agent in (leader_id(i), follower_id(i)):
                path = self._plan(agent, node.meetings, ())
                if path is None:
                    raise RuntimeError(f"unconstrained planning failed for agent {agent}")
                paths[agent] = path
        node.solution = Solution(node.meetings, tuple(paths))
        node.cost = node.solution.cost

    # -- queues -------------------------------------------------------------

    def _push(self, node: CTNode) -> None:
        self.stats.nodes_generated += 1
        if node.root:
            heapq.heappush(self._roots, (node.cost, next(self._seq), node))
        else:
            heapq.heappush(self._open, (node.cost, len(node.conflicts), next(self._seq), node))

    def _pop(self) -> CTNode:
        if self._open and (not self._roots or self._open[0][0] <= self._roots[0][0]):
            return heapq.heappop(self._open)[-1]
        return heapq.heappop(self._roots)[-1]

    # -- meetings level -----------------------------------------------------

    def expand_root(self, node: CTNode) -> list[CTNode]:
        children = []
        for i in range(self.instance.num_tasks):
            index = list(node.meetings.index)
            index[i] += 1
            index = tuple(index)
            if index in self._seen:
                continue
            self._seen.add(index)
            meetings = meeting_set_at(self.tables, index)
            child = CTNode(frozenset(), meetings, True, None, meetings.cost, parent=node)
            self.stats.meeting_sets += 1
            if not self.use_le:
                self._plan_root(child)
            self._push(child)
            children.append(child)
        return children

    # -- conflicts level ----------------------------------------------------

    def _mdd(self, node: CTNode, agent: int) -> MDD:
        task = task_of(agent)
        meeting = node.meetings[task]
        cost = node.solution.paths[agent].finish_time
        cons = node.agent_constraints(agent)
        key = (agent, cons, meeting, cost)
        mdd = self._mdd_cache.get(key)
        if mdd is None:
            self.stats.mdds_built += 1
            build = build_leader_mdd if is_leader(agent) else build_follower_mdd
            mdd = build(self.instance, task, meeting, cons, cost, self.fields)
            self._mdd_cache[key] = mdd
        return mdd

    def choose_conflict(self, node: CTNode) -> tuple[Conflict, ConflictClass | None]:
        if not self.use_pc:
            return node.conflicts[0], None
        return select_conflict(node.conflicts, lambda a: self._mdd(node, a))

    def split_on_conflict(self, node: CTNode, conflict: Conflict) -> list[CTNode | None]:
        """One child per conflicting agent; ``None`` marks a child with no feasible plan."""
        children: list[CTNode | None] = []
        for con in conflict.constraints():
            constraints = node.constraints | {con}
            agent_cons = ConstraintTable(c for c in constraints if c.agent == con.agent)
            path = self._plan(con.agent, node.meetings, agent_cons)
            if path is None:
                children.append(None)
                continue
            solution = node.solution.replace(con.agent, path)
            child = CTNode(constraints, node.meetings, False, solution, solution.cost, parent=node)
            child.conflicts = detect_conflicts(solution)
            children.append(child)
        return children

    # -- main loop ----------------------------------------------------------

    def solve(self) -> SearchResult:
        start = time.perf_counter()
        deadline = None if self.timeout is None else start + self.timeout
        inst = self.instance
        self.tables = [compute_meeting_table(inst, i, self.fields) for i in range(inst.num_tasks)]
        try:
            meetings = initial_meeting_set(self.tables)
        except UnsolvableTaskError:
            self.stats.time_s = time.perf_counter() - start
            return SearchResult("unsolvable", None, self.stats, self.events)
        self._seen.add(meetings.index)
        self.stats.meeting_sets = 1
        root = CTNode(frozenset(), meetings, True, None, meetings.cost)
        self._plan_root(root)
        self._push(root)

        status, found = "unsolvable", None
        while self._open or self._roots:
            if deadline is not None and time.perf_counter() > deadline:
                status = "timeout"
                break
            node = self._pop()
            if node.solution is None:
                priced = node.cost
                self._plan_root(node)
                if node.cost > priced:
                    self._push(node)
                    continue
            if node.conflicts is None:
                node.conflicts = detect_conflicts(node.solution)
            if not node.conflicts:
                status, found = "solved", node
                break
            new_roots = []
            if node.root:
                self.stats.roots_expanded += 1
                new_roots = self.expand_root(node)
            else:
                self.stats.regulars_expanded += 1
            conflict, cls = self.choose_conflict(node)
            children = self.split_on_conflict(node, conflict)
            for child in children:
                if child is not None:
                    self._push(child)
            if self.on_split is not None:
                self.on_split(node, conflict, cls, children)
            if self.record:
                self.events.append(
                    {
                        "root": node.root,
                        "cost": node.cost,
                        "meetings": node.meetings.meetings,
                        "conflict": conflict,
                        "class": cls,
                        "new_roots": [r.cost for r in new_roots],
                        "children": [None if c is None else c.cost for c in children],
                    }
                )

        self.stats.time_s = time.perf_counter() - start
        if found is None:
            return SearchResult(status, None, self.stats, self.events)
        self.stats.first_set_solved = found.meetings.index == (0,) * inst.num_tasks
        return SearchResult("solved", found.solution, self.stats, self.events)


def solve(
    instance: Instance,
    use_pc: bool = False,
    use_le: bool = False,
    timeout: float | None = DEFAULT_TIMEOUT,
    check_well_formed: bool = True,
    record: bool = False,
) -> SearchResult:
    """Optimal sum-of-costs solution of a well-formed instance.

    Raises:
        NotWellFormedError: when ``check_well_formed`` is set and the instance
            fails the well-formedness test.
    """
    if check_well_formed:
        verdict = is_well_formed(instance)
        if not verdict:
            raise NotWellFormedError(verdict)
    return CoCBS(instance, use_pc=use_pc, use_le=use_le, timeout=timeout, record=record).solve()


VARIANTS = {
    "basic": {"use_pc": False, "use_le": False},
    "pc": {"use_pc": True, "use_le": False},
    "pc-le": {"use_pc": True, "use_le": True},
}
