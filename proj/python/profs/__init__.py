"""Hierarchical composite-endpoint tests with progressive follow-up."""

from profs._core import (
    __version__,
    fs_test,
    mvn_rectangle,
    profs_test,
    quantile_schedule,
    read_dataset,
    scenario_ids,
    simulate_scenario,
)

__all__ = [
    "__version__",
    "fs_test",
    "mvn_rectangle",
    "profs_test",
    "quantile_schedule",
    "read_dataset",
    "scenario_ids",
    "simulate_scenario",
]
