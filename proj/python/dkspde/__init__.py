"""Python bindings for the dkspde solver core."""

from ._core import (
    ConfigError,
    GridSpec,
    NumericError,
    StepError,
    check_assumptions,
    couple,
    default_xi_edges,
    initial_state,
    preset_names,
    resolve_config,
    run_cli,
    simulate,
    theta,
)

__all__ = [
    "ConfigError",
    "GridSpec",
    "NumericError",
    "StepError",
    "check_assumptions",
    "couple",
    "default_xi_edges",
    "initial_state",
    "preset_names",
    "resolve_config",
    "run_cli",
    "simulate",
    "theta",
]
