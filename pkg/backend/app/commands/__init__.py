"""
CLI subcommands package
"""
from .simulate import run as simulate_command
from .fit import run as fit_command
from .predict import run as predict_command
from .approx_error import run as approx_error_command
from .diagnostics import run as diagnostics_command

__all__ = [
    'simulate_command',
    'fit_command',
    'predict_command',
    'approx_error_command',
    'diagnostics_command',
]
