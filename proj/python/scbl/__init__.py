"""Numerical lab for magnetic Schrodinger operators on flat tori."""

import json

from . import _scbl
from ._scbl import (
    ConfigError,
    DomainError,
    NumericalError,
    ScblError,
    command_names,
    fit_expansion,
    model_f0,
    run_command,
)

__version__ = _scbl.__version__


def _text(config):
    return config if isinstance(config, str) else json.dumps(config)


def normalize_config(config):
    """Validated config (dict or JSON text) with every default filled in."""
    return json.loads(_scbl.normalize_config(_text(config)))


def operator_spectrum(config, p, grid=()):
    return _scbl.operator_spectrum(_text(config), p, list(grid))


def trace_sweep(config, p_list, workers=1):
    """Rows of p, scaled trace, grid and refined-grid check."""
    return json.loads(_scbl.trace_sweep(_text(config), list(p_list), workers))


def leading_integral(config, mesh=16):
    return _scbl.leading_integral(_text(config), mesh)


def run_criterion(criterion, config_dir):
    return json.loads(_scbl.run_criterion(criterion, str(config_dir)))


__all__ = [
    "ConfigError",
    "DomainError",
    "NumericalError",
    "ScblError",
    "command_names",
    "fit_expansion",
    "leading_integral",
    "model_f0",
    "normalize_config",
    "operator_spectrum",
    "run_command",
    "run_criterion",
    "trace_sweep",
]
