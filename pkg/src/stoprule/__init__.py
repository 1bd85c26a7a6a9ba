"""Exact and asymptotic solutions of threshold optimal-stopping problems."""

from .core import (
    Certification,
    PayoffModel,
    RecurrenceSpec,
    ThresholdResult,
    ValueTable,
    optimal_threshold,
    solve_backward,
    solve_optimal,
    streaming_threshold,
    verify_threshold_optimality,
)
from .errors import (
    DiagnosticError,
    DomainError,
    IntegrationError,
    NonFiniteError,
    StopruleError,
    StructureError,
    ValidationError,
)
from .specialfn import BranchId, digamma, expint_ei, lambert_w
from .variants import (
    VARIANT_IDS,
    AsymptoticResult,
    VariantParams,
    asymptotic_limits,
    closed_form_f,
    make_variant,
    solve_variant,
)

__version__ = "0.1.0"
