"""Finite element solvers for Cahn-Hilliard and Allen-Cahn gradient flows
based on invariant energy quadratization."""

from .config import RunConfig, load_config, parse_config
from .errors import (
    ConfigError,
    IdentityCheckError,
    IeqFemError,
    LinearSolverError,
    PotentialDomainError,
    StructuralError,
)
from .fem import FeSpace
from .ieq import Discretization
from .mesh import Mesh, build_rect_mesh
from .potential import DoubleWell, EquationCoeffs, FloryHuggins
from .stepping import State, StepConfig, advance, initial_state

__version__ = "0.1.0"
