"""
Utilities module for the perimeter lab.
"""

from .data_structures import (
    Kernel, HalfspaceMass, Profile, ProfileViolation, Domain,
    IndicatorField, BoundaryQuadrature, Stencil, ExperimentConfig,
    ConvergenceReport, LowerBoundReport, OracleEstimate
)
from .config_parser import ConfigError, ExperimentConfigParser
from .logging_utils import setup_logging, log_step
from .serialization import to_dict, json_safe

__all__ = [
    'Kernel', 'HalfspaceMass', 'Profile', 'ProfileViolation', 'Domain',
    'IndicatorField', 'BoundaryQuadrature', 'Stencil', 'ExperimentConfig',
    'ConvergenceReport', 'LowerBoundReport', 'OracleEstimate',
    'ConfigError', 'ExperimentConfigParser',
    'setup_logging', 'log_step',
    'to_dict', 'json_safe',
]
