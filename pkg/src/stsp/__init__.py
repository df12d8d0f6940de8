"""Compact formulations, exact oracles and a small MILP engine for the Steiner TSP."""
from .instance import Instance, InstanceError, build_instance, format_instance, parse_instance
from .milp import MilpModel, ModelError, export_mps, parse_mps
from .lp import solve_lp
from .bnb import solve_milp

__version__ = "0.1.0"
