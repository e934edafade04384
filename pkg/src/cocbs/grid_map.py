"""4-connected grid worlds and the MovingAI ``.map`` format."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import TypeAlias

import numpy as np

Cell: TypeAlias = tuple[int, int]
"""A grid location as ``(row, col)`` with row 0 at the top."""

FREE_GLYPHS = frozenset(".G")
BLOCKED_GLYPHS = frozenset("@OT")

# up, down, left, right
_OFFSETS = ((-1, 0), (1, 0), (0, -1), (0, 1))


class MapParseError(ValueError):
    """Raised when a ``.map`` file cannot be parsed.

    Attributes:
        line: 1-based line number of the offending input line.
        column: 1-based column, or ``None`` when the whole line is at fault.
    """

    def __init__(self, message: str, line: int, column: int | None = None):
        where = f"line {line}" if column is None else f"line {line}, column {column}"
        super().__init__(f"{where}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True, eq=False)
class GridMap:
    """Occupancy grid. ``blocked[r, c]`` is True for obstacles.

    The array is made read-only on construction, so a map can be shared
    between solvers without copying.
    """

    blocked: np.ndarray
    name: str = ""
    _adjacency: dict[Cell, tuple[Cell, ...]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        blocked = np.array(self.blocked, dtype=bool)
        if blocked.ndim != 2 or blocked.shape[0] < 1 or blocked.shape[1] < 1:
            raise ValueError(f"grid must be a non-empty 2-D array, got shape {blocked.shape}")
        blocked.setflags(write=False)
        object.__setattr__(self, "blocked", blocked)
        adjacency = {}
        for r, c in zip(*np.nonzero(~blocked)):
            cell = (int(r), int(c))
            adjacency[cell] = tuple(
                (cell[0] + dr, cell[1] + dc)
                for dr, dc in _OFFSETS
                if self._open(cell[0] + dr, cell[1] + dc, blocked)
            )
        object.__setattr__(self, "_adjacency", adjacency)

    @staticmethod
    def _open(r: int, c: int, blocked: np.ndarray) -> bool:
        h, w = blocked.shape
        return 0 <= r < h and 0 <= c < w and not blocked[r, c]

    @property
    def height(self) -> int:
        return self.blocked.shape[0]

    @property
    def width(self) -> int:
        return self.blocked.shape[1]

    @property
    def num_free(self) -> int:
        return len(self._adjacency)

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.height and 0 <= cell[1] < self.width

    def is_free(self, cell: Cell) -> bool:
        return cell in self._adjacency

    def free_cells(self) -> list[Cell]:
        """All traversable cells in row-major order."""
        return sorted(self._adjacency)

    def neighbors(self, cell: Cell) -> tuple[Cell, ...]:
        """Traversable 4-neighbours of a free cell, ordered up, down, left, right."""
        return self._adjacency[cell]

    def render(self) -> str:
        """Serialize back to MovingAI ``.map`` text."""
        rows = ["".join("@" if b else "." for b in row) for row in self.blocked]
        header = ["type octile", f"height {self.height}", f"width {self.width}", "map"]
        return "\n".join(header + rows) + "\n"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GridMap):
            return NotImplemented
        return self.blocked.shape == other.blocked.shape and bool(
            np.array_equal(self.blocked, other.blocked)
        )

    def __hash__(self) -> int:
        return hash((self.blocked.shape, self.blocked.tobytes()))


def neighbors(grid: GridMap, cell: Cell) -> tuple[Cell, ...]:
    return grid.neighbors(cell)


def parse_map(text: str, name: str = "") -> GridMap:
    """Parse a MovingAI ``.map`` file.

    The header is ``type``, ``height H``, ``width W`` and ``map`` (in that
    order), followed by exactly H rows of W glyphs. ``.`` and ``G`` are
    traversable; ``@``, ``O`` and ``T`` are obstacles.

    Raises:
        MapParseError: on a malformed header, a row of the wrong length, a
            missing row or an unknown glyph.
    """
    lines = text.splitlines()
    values: dict[str, int | str] = {}
    expected = ("type", "height", "width")
    pos = 0
    for key in expected:
        while pos < len(lines) and not lines[pos].strip():
            pos += 1
        if pos >= len(lines):
            raise MapParseError(f"missing '{key}' header", pos + 1)
        parts = lines[pos].split()
        if len(parts) != 2 or parts[0] != key:
            raise MapParseError(f"expected '{key} <value>', got {lines[pos]!r}", pos + 1)
        if key == "type":
            values[key] = parts[1]
        else:
            try:
                values[key] = int(parts[1])
            except ValueError:
                raise MapParseError(f"{key} must be an integer, got {parts[1]!r}", pos + 1) from None
            if values[key] < 1:
                raise MapParseError(f"{key} must be positive", pos + 1)
        pos += 1
    if pos >= len(lines) or lines[pos].strip() != "map":
        raise MapParseError("expected 'map' line", pos + 1)
    pos += 1

    height, width = int(values["height"]), int(values["width"])
    blocked = np.zeros((height, width), dtype=bool)
    for r in range(height):
        lineno = pos + r + 1
        if pos + r >= len(lines):
            raise MapParseError(f"expected {height} rows, found {r}", lineno)
        row = lines[pos + r].rstrip("\r")
        if len(row) != width:
            raise MapParseError(f"row has {len(row)} cells, expected {width}", lineno)
        for c, glyph in enumerate(row):
            if glyph in BLOCKED_GLYPHS:
                blocked[r, c] = True
            elif glyph not in FREE_GLYPHS:
                raise MapParseError(f"unknown glyph {glyph!r}", lineno, c + 1)
    for extra in range(pos + height, len(lines)):
        if lines[extra].strip():
            raise MapParseError("trailing data after the last map row", extra + 1)
    return GridMap(blocked, name=name)


def grid_from_rows(rows: list[str] | str, name: str = "") -> GridMap:
    """Build a map from bare glyph rows (no header); handy for hand-written instances."""
    if isinstance(rows, str):
        rows = [r for r in rows.strip().splitlines() if r.strip()]
    rows = [r.strip() for r in rows]
    header = f"type octile\nheight {len(rows)}\nwidth {len(rows[0]) if rows else 0}\nmap\n"
    return parse_map(header + "\n".join(rows) + "\n", name=name)


def load_map(path: str | Path) -> GridMap:
    path = Path(path)
    return parse_map(path.read_text(), name=path.stem)


def random_grid(
    height: int, width: int, obstacle_ratio: float, rng: np.random.Generator, name: str = ""
) -> GridMap:
    """Uniformly place ``round(ratio * area)`` obstacles."""
    area = height * width
    n_blocked = int(round(obstacle_ratio * area))
    flat = np.zeros(area, dtype=bool)
    flat[rng.choice(area, size=n_blocked, replace=False)] = True
    return GridMap(flat.reshape(height, width), name=name)


def warehouse_grid(
    height: int = 27,
    width: int = 57,
    shelf_length: int = 5,
    aisle: int = 1,
    margin: int = 2,
    name: str = "warehouse-57-27",
) -> GridMap:
    """Rows of shelf blocks separated by one-cell aisles, with open margins.

    A generated warehouse-style layout; it is not a copy of any published map.
    """
    blocked = np.zeros((height, width), dtype=bool)
    r = margin
    while r < height - margin:
        c = margin
        while c + shelf_length <= width - margin:
            blocked[r, c : c + shelf_length] = True
            c += shelf_length + aisle
        r += 1 + aisle
    return GridMap(blocked, name=name)
