"""Optimal cooperative multi-agent path finding with Co-CBS."""

from .grid_map import GridMap, MapParseError, load_map, parse_map
from .meetings import Meeting, MeetingTable, compute_meeting_table, meeting_cost, next_meeting
from .oracle import solve_exhaustive, validate_solution
from .scenario import Instance, ScenarioError, Task, build_instance, load_instance, parse_scen
from .search import VARIANTS, CoCBS, NotWellFormedError, SearchResult, Solution, solve
from .wellformed import WellFormedness, is_well_formed

__all__ = [
    "VARIANTS",
    "CoCBS",
    "GridMap",
    "Instance",
    "MapParseError",
    "Meeting",
    "MeetingTable",
    "NotWellFormedError",
    "ScenarioError",
    "SearchResult",
    "Solution",
    "Task",
    "WellFormedness",
    "build_instance",
    "compute_meeting_table",
    "is_well_formed",
    "load_instance",
    "load_map",
    "meeting_cost",
    "next_meeting",
    "parse_map",
    "parse_scen",
    "solve",
    "solve_exhaustive",
    "validate_solution",
]
