"""fracphi: multi-term linear fractional differential equations with respect
to a function -- discretized operators, series solvers, Mittag-Leffler closed
forms, and verification helpers."""

from .core import (
    CaseClassification,
    CaseTag,
    ComplexOrder,
    ContractionCertificate,
    FDEProblem,
    Finding,
    Grid,
    GridFunction,
    PhiSpec,
    classify_case,
    validate_problem,
)
from .errors import (
    ExprDomainError,
    ExprSyntaxError,
    FracphiError,
    GammaPoleError,
    IterationLimitError,
    SeriesDivergenceError,
    ValidationFailure,
)
from .expr import differentiate, evaluate, parse, unparse
from .fraccalc import (
    OperatorWeights,
    caputo_derivative,
    caputo_smooth,
    frac_integral,
    gamma_complex,
    integral_weights,
    phi_power_der,
    phi_power_int,
    reciprocal_gamma,
    rl_derivative,
)
from .mlfun import KsParams, MlParams, kilbas_saigo, kilbas_saigo_coefficients, ml_multivariate, ml_two_param
from .solver import (
    Solution,
    canonical_set,
    check_contraction,
    neumann_solve,
    picard_solve,
    residual,
    solve_constant,
    solve_ivp,
)

__version__ = "0.1.0"

__all__ = [
    "CaseClassification",
    "CaseTag",
    "ComplexOrder",
    "ContractionCertificate",
    "FDEProblem",
    "Finding",
    "Grid",
    "GridFunction",
    "PhiSpec",
    "classify_case",
    "validate_problem",
    "FracphiError",
    "ExprSyntaxError",
    "ExprDomainError",
    "ValidationFailure",
    "GammaPoleError",
    "SeriesDivergenceError",
    "IterationLimitError",
    "parse",
    "unparse",
    "evaluate",
    "differentiate",
    "OperatorWeights",
    "integral_weights",
    "frac_integral",
    "rl_derivative",
    "caputo_derivative",
    "caputo_smooth",
    "phi_power_int",
    "phi_power_der",
    "gamma_complex",
    "reciprocal_gamma",
    "MlParams",
    "KsParams",
    "ml_multivariate",
    "ml_two_param",
    "kilbas_saigo",
    "kilbas_saigo_coefficients",
    "Solution",
    "check_contraction",
    "picard_solve",
    "neumann_solve",
    "canonical_set",
    "solve_ivp",
    "solve_constant",
    "residual",
]
