"""Numerical spectral analysis of regular generalized indefinite strings.

The package solves -f'' = z*omega*f + z^2*nu*f on [0,1) for grid-represented
coefficients, locates eigenvalues of the associated self-adjoint relation,
discretizes its resolvent, and measures how solutions, resolvents, and
spectra respond to coefficient perturbations.
"""

from .coeff import (
    GridPartition,
    PiecewiseConstFn,
    SampledCoefficient,
    SpecSequence,
    StringSpec,
    check_density,
    check_sequence,
    combined_coefficient,
    cumulative_density,
)
from .convergence import ConvergenceReport, PerturbationFamily, fit_rate, make_family, run_experiment
from .errors import (
    ExpressionError,
    GisError,
    InsufficientDataError,
    InvalidSpecError,
    NearEigenvalueError,
    NumericError,
    PropagationOverflowError,
    StructureError,
)
from .expressions import Expression, parse_expression
from .propagator import SolutionPath, cell_transfer, propagate, reconstruct_derivative, weak_residual
from .relation_gap import BoundedOp, FiniteRelation, gap, perturbation_suite, transform
from .resolvent import (
    ResolventMatrix,
    StateVector,
    greens_function,
    operator_norm,
    resolvent_apply,
    resolvent_difference,
    resolvent_matrix,
    reweight,
    reweight_state,
    unweight,
    unweight_state,
)
from .spectral import FundamentalPair, Spectrum, characteristic, find_eigenvalues, fundamental_pair, wronskian

__version__ = "0.1.0"

__all__ = [
    "GridPartition",
    "PiecewiseConstFn",
    "SampledCoefficient",
    "SpecSequence",
    "StringSpec",
    "check_density",
    "check_sequence",
    "combined_coefficient",
    "cumulative_density",
    "ConvergenceReport",
    "PerturbationFamily",
    "fit_rate",
    "make_family",
    "run_experiment",
    "ExpressionError",
    "GisError",
    "InsufficientDataError",
    "InvalidSpecError",
    "NearEigenvalueError",
    "NumericError",
    "PropagationOverflowError",
    "StructureError",
    "Expression",
    "parse_expression",
    "SolutionPath",
    "cell_transfer",
    "propagate",
    "reconstruct_derivative",
    "weak_residual",
    "BoundedOp",
    "FiniteRelation",
    "gap",
    "perturbation_suite",
    "transform",
    "ResolventMatrix",
    "StateVector",
    "greens_function",
    "operator_norm",
    "resolvent_apply",
    "resolvent_difference",
    "resolvent_matrix",
    "reweight",
    "reweight_state",
    "unweight",
    "unweight_state",
    "FundamentalPair",
    "Spectrum",
    "characteristic",
    "find_eigenvalues",
    "fundamental_pair",
    "wronskian",
]
