"""Numerics for the periodic singular Sturm-Liouville operator

    L u = eps * (f u')' + u'   on (-pi, pi), periodic,

where f is odd, anti-periodic and positive on (0, pi).  The package covers the
integrating factor and singular homogeneous solution, the Green's kernel and
its Schatten diagnostics, the spectrum via shooting, and the associated
forward-backward evolution.
"""

from .model import ModelProfile, ValidationReport, apply_ell, check_epsilon, make_profile, validate_profile
from .singular_factor import IntegratingFactor, build_factor, endpoint_exponents, eval_psi, verify_homogeneous
from .resolvent import (
    GreenKernel,
    LambdaSolutions,
    apply_tilde,
    assemble_T,
    green_eval,
    project_tilde,
    resolvent_at,
    schatten_sum,
    singular_values,
    solve_inhomogeneous,
)
from .schatten_dyadic import SeparableKernel, dyadic_bound, dyadic_coefficients, power_kernel, split_T
from .spectrum import (
    alpha_sequence,
    biorthogonal_coeffs,
    eigen_system,
    eigenfunction,
    find_eigenvalues,
    gram_condition,
    rho,
    shoot_phi,
    theta,
)
from .evolution import (
    EvolutionField,
    dirichlet_solve,
    fourier_decay_rate,
    pde_residual,
    spectral_evolve,
    test_profile_h,
)

__all__ = [
    "ModelProfile",
    "ValidationReport",
    "apply_ell",
    "check_epsilon",
    "make_profile",
    "validate_profile",
    "IntegratingFactor",
    "build_factor",
    "endpoint_exponents",
    "eval_psi",
    "verify_homogeneous",
    "GreenKernel",
    "LambdaSolutions",
    "apply_tilde",
    "assemble_T",
    "green_eval",
    "project_tilde",
    "resolvent_at",
    "schatten_sum",
    "singular_values",
    "solve_inhomogeneous",
    "SeparableKernel",
    "dyadic_bound",
    "dyadic_coefficients",
    "power_kernel",
    "split_T",
    "alpha_sequence",
    "biorthogonal_coeffs",
    "eigen_system",
    "eigenfunction",
    "find_eigenvalues",
    "gram_condition",
    "rho",
    "shoot_phi",
    "theta",
    "EvolutionField",
    "dirichlet_solve",
    "fourier_decay_rate",
    "pde_residual",
    "spectral_evolve",
    "test_profile_h",
]

__version__ = "0.1.0"
