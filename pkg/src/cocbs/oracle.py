"""Brute-force optimal Co-MAPF solver and an independent solution validator.

The oracle runs A* over joint states (every agent's cell and progress) with
no fixed meetings: a leader that has picked its task up and its follower
meet whenever they share a cell. It deliberately shares nothing with the
main solver except the map and instance types, so it is only usable on toy
instances (two tasks on small grids).
"""

from __future__ import annotations

import heapq
import itertools
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .grid_map import Cell
from .scenario import Instance

_DONE = -1


class OracleLimitError(RuntimeError):
    """The joint search hit its expansion guard before proving optimality."""


@dataclass
class OracleResult:
    status: str  # "optimal" | "bound"
    cost: int | None = None
    paths: list[list[Cell]] = field(default_factory=list)
    meetings: list[tuple[Cell, int]] = field(default_factory=list)
    expansions: int = 0


def _all_pairs(instance: Instance) -> tuple[list[Cell], dict[Cell, int], np.ndarray]:
    cells = instance.grid.free_cells()
    index = {c: i for i, c in enumerate(cells)}
    rows, cols = [], []
    for c in cells:
        for w in instance.grid.neighbors(c):
            rows.append(index[c])
            cols.append(index[w])
    adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(cells), len(cells)))
    dist = shortest_path(adj, method="D", unweighted=True)
    return cells, index, dist


class _Task:
    """Relaxed cost-to-go tables for one task in isolation."""

    def __init__(self, dist: np.ndarray, pickup: int, goal: int):
        self.pickup, self.goal = pickup, goal
        n = dist.shape[0]
        lead = np.empty((n, 2, n))
        lead[:, 0, :] = dist[:, pickup][:, None] + dist[pickup][None, :]
        lead[:, 1, :] = dist
        # pair[l, phase, f] = min_v 2 * max(lead[l, phase, v], dist[f, v]) + dist[v, goal]
        joint = np.maximum(lead[:, :, None, :], dist[None, None, :, :])
        self.pair = (2 * joint + dist[:, goal][None, None, None, :]).min(axis=3).tolist()
        self.after = dist[:, goal].tolist()


def solve_exhaustive(
    instance: Instance, cost_bound: float, max_expansions: int = 2_000_000
) -> OracleResult:
    """Minimum sum-of-costs over all solutions of cost at most ``cost_bound``.

    Returns status ``"bound"`` when no solution fits under the bound.

    Raises:
        OracleLimitError: after ``max_expansions`` joint-state expansions.
    """
    cells, index, dist = _all_pairs(instance)
    nbrs = [
        tuple(index[w] for w in instance.grid.neighbors(c)) + (i,) for i, c in enumerate(cells)
    ]
    k = instance.num_tasks
    tasks = [_Task(dist, index[t.start], index[t.goal]) for t in instance.tasks]
    n_agents = 2 * k

    # agent state: (cell, phase) or _DONE
    # leader phase: 0 before pickup, 1 after; follower phase: 0 before meeting, 1 after
    start = []
    for i in range(k):
        lead = index[instance.leader_starts[i]]
        start.append((lead, int(lead == tasks[i].pickup)))
        start.append((index[instance.follower_starts[i]], 0))
    start = tuple(start)

    def h(state) -> float:
        total = 0.0
        for i, task in enumerate(tasks):
            lead, follow = state[2 * i], state[2 * i + 1]
            if lead != _DONE:
                total += task.pair[lead[0]][lead[1]][follow[0]]
            elif follow != _DONE:
                total += task.after[follow[0]]
        return total

    def successors(state):
        active = [a for a in range(n_agents) if state[a] != _DONE]
        here = {a: state[a][0] for a in active}
        choice: dict[int, int] = {}

        def compatible(a: int, w: int) -> bool:
            for b, wb in choice.items():
                if wb == w:
                    # only a picked-up leader and its own waiting follower may share a cell
                    lead, follow = min(a, b), max(a, b)
                    if lead % 2 or follow != lead + 1:
                        return False
                    if not (state[lead][1] or w == tasks[lead // 2].pickup):
                        return False
                if wb == here[a] and w == here[b]:
                    return False
            return True

        def rec(pos: int):
            if pos == len(active):
                yield dict(choice)
                return
            a = active[pos]
            for w in nbrs[here[a]]:
                if compatible(a, w):
                    choice[a] = w
                    yield from rec(pos + 1)
                    del choice[a]

        for move in rec(0):
            nxt = list(state)
            for a, w in move.items():
                phase = state[a][1]
                if a % 2 == 0 and w == tasks[a // 2].pickup:
                    phase = 1
                nxt[a] = (w, phase)
            for i in range(k):
                la, fa = 2 * i, 2 * i + 1
                lead, follow = nxt[la], nxt[fa]
                if lead != _DONE and follow != _DONE and lead[0] == follow[0]:
                    nxt[la] = _DONE
                    follow = nxt[fa] = (follow[0], 1)
                if follow != _DONE and follow[1] == 1 and follow[0] == tasks[i].goal:
                    nxt[fa] = _DONE
            yield tuple(nxt), move, len(active)

    counter = itertools.count()
    best = {start: 0}
    parent: dict = {start: None}
    h0 = h(start)
    heap = [(h0, 0, next(counter), start)]
    expansions = 0
    goal_state = None
    while heap:
        f, neg_g, _, state = heapq.heappop(heap)
        g = -neg_g
        if g != best.get(state):
            continue
        if f > cost_bound:
            break
        if all(s == _DONE for s in state):
            goal_state = state
            break
        expansions += 1
        if expansions > max_expansions:
            raise OracleLimitError(f"more than {max_expansions} joint states expanded")
        for nxt, move, step_cost in successors(state):
            ng = g + step_cost
            if ng >= best.get(nxt, np.inf):
                continue
            nh = h(nxt)
            if ng + nh > cost_bound:
                continue
            best[nxt] = ng
            parent[nxt] = (state, move)
            heapq.heappush(heap, (ng + nh, -ng, next(counter), nxt))

    if goal_state is None:
        return OracleResult("bound", expansions=expansions)
    # rebuild per-agent cell sequences
    chain = []
    s = goal_state
    while parent[s] is not None:
        prev, move = parent[s]
        chain.append(move)
        s = prev
    chain.reverse()
    paths = [[cells[start[a][0]]] for a in range(n_agents)]
    for move in chain:
        for a, w in move.items():
            paths[a].append(cells[w])
    meetings = [(paths[2 * i][-1], len(paths[2 * i]) - 1) for i in range(k)]
    cost = sum(len(p) - 1 for p in paths)
    return OracleResult("optimal", int(cost), paths, meetings, expansions)


def validate_solution(
    instance: Instance,
    meetings: Sequence[tuple[Cell, int]],
    paths: Sequence[Sequence[Cell]],
) -> list[str]:
    """Problems with a candidate solution; empty when it is valid.

    ``paths`` is indexed by agent id (leader ``2i``, follower ``2i+1``).
    """
    errors: list[str] = []
    grid = instance.grid
    k = instance.num_tasks
    if len(paths) != 2 * k or len(meetings) != k:
        return [f"expected {2 * k} paths and {k} meetings"]
    paths = [[tuple(c) for c in p] for p in paths]
    for a, p in enumerate(paths):
        if not p:
            errors.append(f"agent {a}: empty path")
            continue
        if p[0] != instance.agent_starts[a]:
            errors.append(f"agent {a}: starts at {p[0]}, not {instance.agent_starts[a]}")
        for t, c in enumerate(p):
            if not grid.is_free(c):
                errors.append(f"agent {a}: blocked cell {c} at t={t}")
            if t and c != p[t - 1] and abs(c[0] - p[t - 1][0]) + abs(c[1] - p[t - 1][1]) != 1:
                errors.append(f"agent {a}: jump {p[t - 1]}->{c} at t={t}")
    if errors:
        return errors

    for i, task in enumerate(instance.tasks):
        loc, when = tuple(meetings[i][0]), meetings[i][1]
        lead, follow = paths[2 * i], paths[2 * i + 1]
        if len(lead) - 1 != when or lead[-1] != loc:
            errors.append(f"task {i}: leader does not end at meeting {loc}@{when}")
        if task.start not in lead[: when + 1]:
            errors.append(f"task {i}: leader never visits task start {task.start}")
        if len(follow) <= when or follow[when] != loc:
            errors.append(f"task {i}: follower not at meeting {loc}@{when}")
        elif follow[-1] != task.goal:
            errors.append(f"task {i}: follower does not end at goal {task.goal}")
        elif task.goal in follow[when:-1]:
            errors.append(f"task {i}: follower reaches goal before its last step")

    horizon = max(len(p) for p in paths)
    for t in range(horizon):
        present = [a for a in range(2 * k) if t < len(paths[a])]
        for a, b in itertools.combinations(present, 2):
            if paths[a][t] == paths[b][t]:
                i = a // 2
                pair_meeting = (
                    a // 2 == b // 2
                    and (tuple(meetings[i][0]), meetings[i][1]) == (paths[a][t], t)
                )
                if not pair_meeting:
                    errors.append(f"vertex conflict: agents {a},{b} at {paths[a][t]} t={t}")
            if (
                t
                and paths[a][t] == paths[b][t - 1]
                and paths[b][t] == paths[a][t - 1]
                and paths[a][t] != paths[a][t - 1]
            ):
                errors.append(f"edge conflict: agents {a},{b} swap at t={t}")
    return errors
