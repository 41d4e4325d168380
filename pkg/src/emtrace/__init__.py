"""Exact arithmetic for quadratic forms and the 2-abelian 3-cocycles realizing them."""

from emtrace.cocycles import (
    StructuredCocycle,
    TabulatedCocycle,
    Cochain2Table,
    base_cyclic,
    coboundary,
    from_quad,
    normal_form_check,
    tabulate,
    trace,
    verify,
)
from emtrace.errors import (
    BudgetExceeded,
    EmtraceError,
    InvalidCoefficientError,
    NotQuadraticError,
    NotRepresentableError,
    NotSymmetricError,
)
from emtrace.forms import (
    BilinearFormMatrix,
    QuadraticFormParams,
    QuadraticFormTable,
    enumerate_quads,
    eval_quad,
    fit_params,
    validate_params,
)
from emtrace.groups import FgAbGroup, canonicalize
from emtrace.represent import bilinear_witness, is_trace_of_bilinear, theta

__version__ = "0.1.0"

__all__ = [
    "BilinearFormMatrix",
    "BudgetExceeded",
    "Cochain2Table",
    "EmtraceError",
    "FgAbGroup",
    "InvalidCoefficientError",
    "NotQuadraticError",
    "NotRepresentableError",
    "NotSymmetricError",
    "QuadraticFormParams",
    "QuadraticFormTable",
    "StructuredCocycle",
    "TabulatedCocycle",
    "base_cyclic",
    "bilinear_witness",
    "canonicalize",
    "coboundary",
    "enumerate_quads",
    "eval_quad",
    "fit_params",
    "from_quad",
    "is_trace_of_bilinear",
    "normal_form_check",
    "tabulate",
    "theta",
    "trace",
    "validate_params",
    "verify",
]
