"""Localized reduced basis methods with randomized training and online enrichment."""

from ._locrb import (
    Basis,
    ConfigError,
    ConvergenceError,
    Model,
    NotAffineError,
    ParameterError,
    Problem,
    SolverError,
    __version__,
    mark,
    preset_names,
    run_cli,
)

__all__ = [
    "Basis",
    "ConfigError",
    "ConvergenceError",
    "Model",
    "NotAffineError",
    "ParameterError",
    "Problem",
    "SolverError",
    "__version__",
    "mark",
    "preset_names",
    "run_cli",
]
