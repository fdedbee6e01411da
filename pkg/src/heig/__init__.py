"""Eigenvalue localization and eigenpairs for Hammerstein integral equations

    u(t) = lam * int_0^1 k(t, s) f(s, u(s), H[u]) ds

with a sign-changing nonlinearity and a functional term ``H``.
"""

from .bounds import (
    BoundPair,
    EnvelopeError,
    ProblemSpec,
    build_bounds,
    build_bounds_general,
    build_bounds_separable,
    check_envelopes,
    exp_ratio_envelopes,
    sign_split,
)
from .conditions import (
    ConditionReport,
    NoConditionError,
    check_conditions,
    golden_section_max,
    interval_threshold_scan,
    localization,
    threshold_scan,
)
from .eigensolver import (
    DegenerateOperatorError,
    DiscreteOperator,
    EigenPair,
    NoConvergenceError,
    NonFiniteError,
    apply_T,
    discretize,
    solve_pair,
    sup_norm,
    sweep_rho,
    verify_pair,
)
from .kernels import (
    GREEN_DIRICHLET,
    GREEN_MIXED,
    DuplicateKernelError,
    Kernel,
    KernelDomainError,
    get_kernel,
    green_dirichlet,
    green_mixed,
    load_kernel_csv,
    register_kernel,
    unregister_kernel,
)
from .problems import ExampleId, as_general, example_problem, linear_problem
from .quadrature import QuadratureConfig, QuadratureError, integrate, integrate_with_error, kernel_apply

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
