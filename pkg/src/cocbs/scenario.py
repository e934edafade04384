"""Co-MAPF instances: MovingAI ``.scen`` parsing, task derivation and JSON I/O."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid_map import Cell, GridMap, grid_from_rows, load_map, parse_map


class ScenarioError(ValueError):
    """Malformed scenario data or an invalid instance."""


@dataclass(frozen=True)
class ScenEntry:
    """One row of a MovingAI ``.scen`` file (cells already converted to ``(row, col)``)."""

    bucket: int
    map_name: str
    map_width: int
    map_height: int
    start: Cell
    goal: Cell
    optimal_length: float = 0.0

    def to_line(self) -> str:
        return "\t".join(
            str(x)
            for x in (
                self.bucket,
                self.map_name,
                self.map_width,
                self.map_height,
                self.start[1],
                self.start[0],
                self.goal[1],
                self.goal[0],
                f"{self.optimal_length:.8f}",
            )
        )


@dataclass(frozen=True)
class Task:
    start: Cell
    goal: Cell


@dataclass(frozen=True)
class Instance:
    """A Co-MAPF problem: task ``i`` is executed by leader ``i`` and follower ``i``.

    Agent ids used throughout the package are ``2*i`` for the leader and
    ``2*i + 1`` for the follower of task ``i``.
    """

    grid: GridMap
    tasks: tuple[Task, ...]
    leader_starts: tuple[Cell, ...]
    follower_starts: tuple[Cell, ...]
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "leader_starts", tuple(map(tuple, self.leader_starts)))
        object.__setattr__(self, "follower_starts", tuple(map(tuple, self.follower_starts)))
        k = len(self.tasks)
        if len(self.leader_starts) != k or len(self.follower_starts) != k:
            raise ScenarioError(
                f"{k} tasks but {len(self.leader_starts)} leaders and "
                f"{len(self.follower_starts)} followers"
            )
        for label, cell in self._labelled_cells():
            if not self.grid.is_free(cell):
                raise ScenarioError(f"{label} {cell} is blocked or out of bounds")
        starts = self.agent_starts
        if len(set(starts)) != len(starts):
            seen: dict[Cell, int] = {}
            for agent, cell in enumerate(starts):
                if cell in seen:
                    raise ScenarioError(
                        f"agents {seen[cell]} and {agent} share start cell {cell}"
                    )
                seen[cell] = agent

    def _labelled_cells(self):
        for i, task in enumerate(self.tasks):
            yield f"task {i} start", task.start
            yield f"task {i} goal", task.goal
            yield f"leader {i} start", self.leader_starts[i]
            yield f"follower {i} start", self.follower_starts[i]

    @property
    def num_tasks(self) -> int:
        return len(self.tasks)

    @property
    def agent_starts(self) -> tuple[Cell, ...]:
        """Start cell of every agent, indexed by agent id."""
        out = []
        for lead, follow in zip(self.leader_starts, self.follower_starts):
            out += [lead, follow]
        return tuple(out)

    def to_json(self, inline_map: bool = True) -> dict:
        return {
            "map": self.grid.render() if inline_map else self.grid.name,
            "tasks": [{"start": list(t.start), "goal": list(t.goal)} for t in self.tasks],
            "leaders": [list(c) for c in self.leader_starts],
            "followers": [list(c) for c in self.follower_starts],
        }


def leader_id(task: int) -> int:
    return 2 * task


def follower_id(task: int) -> int:
    return 2 * task + 1


def task_of(agent: int) -> int:
    return agent // 2


def is_leader(agent: int) -> bool:
    return agent % 2 == 0


def parse_scen(text: str) -> list[ScenEntry]:
    """Parse MovingAI scenario rows; the ``version`` line is optional."""
    entries = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if lineno == 1 and line.split()[0] == "version":
            continue
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) != 9:
            raise ScenarioError(f"row {lineno}: expected 9 fields, got {len(parts)}")
        try:
            bucket, width, height, sx, sy, gx, gy = (
                int(parts[i]) for i in (0, 2, 3, 4, 5, 6, 7)
            )
            optimal = float(parts[8])
        except ValueError as exc:
            raise ScenarioError(f"row {lineno}: non-numeric field ({exc})") from None
        start, goal = (sy, sx), (gy, gx)
        for label, (r, c) in (("start", start), ("goal", goal)):
            if not (0 <= r < height and 0 <= c < width):
                raise ScenarioError(f"row {lineno}: {label} {(r, c)} outside {width}x{height}")
        entries.append(ScenEntry(bucket, parts[1], width, height, start, goal, optimal))
    return entries


def render_scen(entries: list[ScenEntry]) -> str:
    return "version 1\n" + "".join(e.to_line() + "\n" for e in entries)


def build_instance(grid: GridMap, entries: list[ScenEntry], k: int, name: str = "") -> Instance:
    """Derive a ``k``-task instance from the first ``2k`` scenario rows.

    Row ``2j`` gives task ``j``'s start and goal. Row ``2j+1`` gives the
    leader's start (its start field) and the follower's start (its goal field).
    """
    if k < 0:
        raise ScenarioError("k must be non-negative")
    if len(entries) < 2 * k:
        raise ScenarioError(f"need {2 * k} scenario rows for {k} tasks, have {len(entries)}")
    tasks, leaders, followers = [], [], []
    for j in range(k):
        task_row, agent_row = entries[2 * j], entries[2 * j + 1]
        tasks.append(Task(task_row.start, task_row.goal))
        leaders.append(agent_row.start)
        followers.append(agent_row.goal)
    return Instance(grid, tuple(tasks), tuple(leaders), tuple(followers), name=name)


def _read_map_field(value: str, base: Path | None) -> GridMap:
    if "\n" in value:
        text = value.strip()
        return parse_map(value) if text.startswith("type") else grid_from_rows(text)
    path = Path(value)
    if base is not None and not path.is_absolute():
        path = base / path
    return load_map(path)


def instance_from_json(data: dict | str, base: Path | None = None) -> Instance:
    """Build an instance from the native JSON form.

    ``map`` is either a path (relative to ``base``) or inline text: a full
    ``.map`` file or bare glyph rows separated by newlines.
    """
    if isinstance(data, str):
        data = json.loads(data)
    try:
        grid = _read_map_field(data["map"], base)
        tasks = tuple(Task(tuple(t["start"]), tuple(t["goal"])) for t in data["tasks"])
        leaders = tuple(tuple(c) for c in data["leaders"])
        followers = tuple(tuple(c) for c in data["followers"])
    except (KeyError, TypeError) as exc:
        raise ScenarioError(f"bad instance JSON: {exc!r}") from None
    return Instance(grid, tasks, leaders, followers, name=data.get("name", ""))


def load_instance(path: str | Path) -> Instance:
    path = Path(path)
    inst = instance_from_json(path.read_text(), base=path.parent)
    if not inst.name:
        object.__setattr__(inst, "name", path.stem)
    return inst


def _largest_component(grid: GridMap) -> list[Cell]:
    seen: set[Cell] = set()
    best: list[Cell] = []
    for cell in grid.free_cells():
        if cell in seen:
            continue
        comp, stack = [], [cell]
        seen.add(cell)
        while stack:
            u = stack.pop()
            comp.append(u)
            for w in grid.neighbors(u):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(comp) > len(best):
            best = comp
    return sorted(best)


def random_scen_entries(grid: GridMap, n: int, rng: np.random.Generator) -> list[ScenEntry]:
    """``n`` random rows whose ``2n`` cells are pairwise distinct.

    All cells come from the largest connected component, so every row is
    solvable on its own. Distinctness guarantees unique agent starts for
    :func:`build_instance`.
    """
    cells = _largest_component(grid)
    if 2 * n > len(cells):
        raise ScenarioError(f"map has only {len(cells)} connected cells; need {2 * n}")
    picks = rng.choice(len(cells), size=2 * n, replace=False)
    out = []
    for j in range(n):
        start, goal = cells[picks[2 * j]], cells[picks[2 * j + 1]]
        out.append(ScenEntry(0, grid.name + ".map", grid.width, grid.height, start, goal, 0.0))
    return out


def random_instance(grid: GridMap, k: int, rng: np.random.Generator, name: str = "") -> Instance:
    return build_instance(grid, random_scen_entries(grid, 2 * k, rng), k, name=name)
