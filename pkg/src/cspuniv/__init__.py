"""Finite-template CSP instances, their LP/integer relaxations, and the
algorithms built on top of them."""

from .core import Constraint, Instance, Verdict, brute_force_solve, load_instance, make_instance, save_instance
from .errors import CspError, ParseError, PropertyViolation, ResourceError, UsageError

__all__ = [
    "Constraint",
    "Instance",
    "Verdict",
    "brute_force_solve",
    "load_instance",
    "make_instance",
    "save_instance",
    "CspError",
    "ParseError",
    "PropertyViolation",
    "ResourceError",
    "UsageError",
]

__version__ = "0.1.0"
