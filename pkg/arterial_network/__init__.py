"""Explicit characteristic scheme for quasilinear hyperbolic flow on arterial networks."""

from .network import Network, validate_topology
from .parser import parse_network, serialize_network
from .scheme import run, step
from .state import GridState, StepSizes

__all__ = [
    "GridState",
    "Network",
    "StepSizes",
    "parse_network",
    "run",
    "serialize_network",
    "step",
    "validate_topology",
]
