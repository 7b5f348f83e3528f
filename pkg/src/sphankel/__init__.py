"""Smallest eigenvalue of Hankel matrices for the weight ``x**alpha exp(-x - t/x)``.

The package computes moments, factors the Hankel matrix, certifies its
smallest eigenvalue at whatever precision the condition number demands, and
compares the result with large-N asymptotic predictions.
"""

from .asymptotics import (
    EndpointExpansion,
    LambdaPrediction,
    ScaledVariable,
    endpoint_expansion,
    kernel_diag_asymptotic,
    kernel_window_check,
    lambda_prediction,
    perron,
    pn_full,
    pn_simplified,
    solve_endpoints_exact,
)
from .eigen import (
    EigenCertificate,
    TridiagonalForm,
    precision_policy,
    smallest_eigenvalue,
    sturm_count,
    tridiagonalize,
)
from .errors import (
    DomainError,
    EscalationCeilingError,
    HardEdgeError,
    NewtonError,
    PrecisionInsufficientError,
    QuadratureError,
    SaddleAbsentError,
    SphankelError,
)
from .hankel import (
    HankelSystem,
    KernelDiagonal,
    assemble,
    build_system,
    evaluate_orthonormal,
    kernel_diagonal,
    kernel_matrix,
    orthonormal_coeffs,
    rayleigh_lower_bound,
)
from .moments import MomentTable, WeightParams, compute_moment_table, spot_check_moment, weight_eval
from .numerics import (
    EndpointPair,
    Interval,
    PrecisionContext,
    halfline_quadrature,
    integrate_finite_sqrt_weight,
    integrate_halfline,
    newton_solve_2d,
    sqrt_weight_quadrature,
    verify_identity_suite,
)

__version__ = "0.1.0"
