"""Effective Hamiltonians of switching Markov processes."""

from ._core import (
    ConfigError,
    Model,
    ModelError,
    NumericalError,
    hamiltonian,
    legendre,
    model_from_json,
    preset,
    preset_names,
    principal_eigenpair,
    simulate,
    stationary_measure,
    sweep,
    validate,
    velocity,
)

__all__ = [
    "ConfigError",
    "Model",
    "ModelError",
    "NumericalError",
    "hamiltonian",
    "legendre",
    "model_from_json",
    "preset",
    "preset_names",
    "principal_eigenpair",
    "simulate",
    "stationary_measure",
    "sweep",
    "validate",
    "velocity",
]
