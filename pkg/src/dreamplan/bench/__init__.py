"""Benchmark harness: experiment grids, metrics, report tables and the CLI."""
from .metrics import DegenerateGap, EmptyInput, completion_rate, gamma, success_rate
from .report import Report, summarize
from .runner import RunSpec, build_components, load_sites, make_gateway, run_grid, run_task, site_tasks, solvable

__all__ = [name for name in dir() if not name.startswith("_")]
