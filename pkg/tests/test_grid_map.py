import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _support import fig3
from cocbs.grid_map import GridMap, MapParseError, grid_from_rows, parse_map, random_grid, warehouse_grid


def _map(rows: list[str]) -> str:
    return f"type octile\nheight {len(rows)}\nwidth {len(rows[0])}\nmap\n" + "\n".join(rows) + "\n"


def test_single_free_cell():
    grid = parse_map(_map(["."]))
    assert (grid.height, grid.width, grid.num_free) == (1, 1, 1)
    assert grid.neighbors((0, 0)) == ()


def test_fig3_grid_has_one_obstacle():
    grid = fig3().grid
    assert grid.blocked.sum() == 1 and grid.blocked[2, 1]
    assert set(grid.neighbors((2, 0))) == {(1, 0), (3, 0)}


def test_blocked_middle_row_splits_map():
    grid = parse_map(_map(["...", "@@@", "..."]))
    top = {c for c in grid.free_cells() if c[0] == 0}
    for c in top:
        assert all(w[0] == 0 for w in grid.neighbors(c))


def test_neighbor_counts_on_empty_map():
    grid = parse_map(_map(["...", "...", "..."]))
    assert len(grid.neighbors((1, 1))) == 4
    assert len(grid.neighbors((0, 0))) == 2


def test_glyphs():
    grid = parse_map(_map([".G@", "OT."]))
    assert grid.free_cells() == [(0, 0), (0, 1), (1, 2)]


@pytest.mark.parametrize(
    "text, line, column",
    [
        ("type octile\nheight 2\nwidth 2\nmap\n..\n.\n", 6, None),
        ("type octile\nheight 1\nwidth 3\nmap\n.x.\n", 5, 2),
        ("type octile\nwidth 2\nheight 2\nmap\n..\n..\n", 2, None),
        ("type octile\nheight 2\nwidth 2\nmap\n..\n", 6, None),
        ("type octile\nheight 1\nwidth 1\nmap\n.\n@\n", 6, None),
    ],
)
def test_parse_errors_name_position(text, line, column):
    with pytest.raises(MapParseError) as err:
        parse_map(text)
    assert err.value.line == line
    assert err.value.column == column
    assert f"line {line}" in str(err.value)


def test_grid_is_read_only():
    grid = grid_from_rows(["..", ".@"])
    with pytest.raises(ValueError):
        grid.blocked[0, 0] = True


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 9), st.integers(1, 9), st.floats(0, 0.6), st.integers(0, 2**31))
def test_round_trip_and_symmetry(h, w, ratio, seed):
    grid = random_grid(h, w, ratio, np.random.default_rng(seed))
    again = parse_map(grid.render())
    assert again == grid and hash(again) == hash(grid)
    for c in grid.free_cells():
        for n in grid.neighbors(c):
            assert c in grid.neighbors(n)
            assert abs(c[0] - n[0]) + abs(c[1] - n[1]) == 1


def test_warehouse_stand_in_shape():
    grid = warehouse_grid()
    assert (grid.height, grid.width) == (27, 57)
    assert isinstance(grid, GridMap) and 0 < grid.blocked.mean() < 0.5
