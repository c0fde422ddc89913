"""Moments of time-inhomogeneous polynomial jump-diffusions.

The generator of a polynomial process maps polynomials of degree ``k`` into
themselves, so on a monomial basis it is a matrix ``H_t`` and conditional
moments follow from the matrix evolution ``dP/dt = P H_t``.  This package
builds ``H_t`` from polynomial characteristics, solves for ``P_{s,t}`` by
the exact exponential (commuting case), a third-order Magnus expansion or
RK4, and cross-checks against Monte Carlo.
"""
from .errors import (
    DegreeOverflow,
    DiffusionNotPSD,
    MissingSampler,
    NumericalError,
    PolymagError,
    QuadratureError,
    SpecError,
)
from .genmat import (
    ProcessSpec,
    StateSpace,
    apply_generator,
    build_spec,
    commutator_probe,
    generator_matrix,
    validate_spec,
)
from .magnus import (
    kolmogorov_defects,
    magnus_terms,
    moment,
    moments,
    norm_integral,
    transition_matrix,
)
from .mc import SimConfig, estimate_moment, estimate_moments, kernel_consistency_check, simulate_paths
from .polyalg import MonomialBasis, Polynomial, enumerate_basis
from .processes import builtin, parse_spec, to_document
from .timefuncs import TimeCoefficient, TimePoly

__version__ = "0.1.0"

__all__ = [
    "DegreeOverflow",
    "DiffusionNotPSD",
    "MissingSampler",
    "MonomialBasis",
    "NumericalError",
    "PolymagError",
    "Polynomial",
    "ProcessSpec",
    "QuadratureError",
    "SimConfig",
    "SpecError",
    "StateSpace",
    "TimeCoefficient",
    "TimePoly",
    "apply_generator",
    "build_spec",
    "builtin",
    "commutator_probe",
    "enumerate_basis",
    "estimate_moment",
    "estimate_moments",
    "generator_matrix",
    "kernel_consistency_check",
    "kolmogorov_defects",
    "magnus_terms",
    "moment",
    "moments",
    "norm_integral",
    "parse_spec",
    "simulate_paths",
    "to_document",
    "transition_matrix",
    "validate_spec",
]
