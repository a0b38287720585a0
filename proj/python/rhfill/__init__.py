"""Python access to the rhfill scenario engine."""

from ._rhfill import (
    Error,
    describe_group,
    emit_plot_data,
    graph_dump,
    multiply,
    run_scenario,
    run_scenario_file,
    task_kinds,
    validate_scenario,
)

__all__ = [
    "Error",
    "describe_group",
    "emit_plot_data",
    "graph_dump",
    "multiply",
    "run_scenario",
    "run_scenario_file",
    "task_kinds",
    "validate_scenario",
]
