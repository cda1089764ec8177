"""Projection time stepping for perfect plasticity with a moving von Mises
constraint set: tensor projection primitives, chart-based oracles, a P1/P0
finite element discretization, three step variants, and a study harness."""

from .tensor_core import SymMat
from .stepper import ProblemSpec, Trajectory, run

__all__ = ["SymMat", "ProblemSpec", "Trajectory", "run"]
__version__ = "0.1.0"
