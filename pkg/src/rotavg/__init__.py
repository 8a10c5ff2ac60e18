"""Rotation averaging on SO(3): BCD and SUM solvers with optimality certificates."""
from .certificate import Certificate, build_lambda, certify
from .errors import DegenerateInputError, NumericalError, ParseError, RotavgError
from .graph import (
    RAGraph,
    assemble_cost_block,
    assemble_r_tilde,
    objective,
    spanning_tree_init,
    trace_objective_sum,
)
from .so3 import (
    axis_angle_to_rotation,
    chordal_sq,
    losso_oracle,
    random_rotation,
    rotation_to_nearest_valid,
    solve_losso,
)
from .solvers import ConvergenceTrace, SolverConfig, majorizer_value, solve, solve_bcd, solve_sum
from .synth import SynthSpec, generate

__version__ = "0.1.0"
