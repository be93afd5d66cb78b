"""pimlap: point-cloud graph-Laplacian spectra via the point integral method.

Pipeline: sample a manifold density, assemble the kernel pencil (L, B),
solve the generalized eigenproblem or the Poisson system, and verify the
spectrum against closed-form or finite-difference references.
"""
from ._backend import BACKEND, backends_available
from .analysis import (
    SpectralReport,
    SweepGrid,
    coercivity_constant,
    discrepancy,
    eig_error_table,
    fit_power_law,
    rayleigh,
    subspace_angle,
)
from .assembly import LaplacianSystem, assemble, norm_const, t_auto, w_field
from .errors import (
    ConfigError,
    DegenerateDensityError,
    InvalidArgumentError,
    MultiplicityMismatchError,
    NumericalFailureError,
    OutOfSupportError,
    PimlapError,
    UnsupportedConfigurationError,
)
from .geometry import (
    DensitySpec,
    ManifoldModel,
    PointCloud,
    ReferenceSpectrum,
    builtin_function,
    fd_oracle_1d,
    quadrature_grid,
    reference_spectrum,
    sample,
)
from .kernels import (
    KernelSpec,
    ValidationReport,
    eval_R,
    eval_barR,
    kernel_by_name,
    polynomial_kernel,
    truncated_gaussian_smoothed,
    validate_kernel,
    wendland41,
)
from .solver import (
    EigResult,
    PoissonSolution,
    apply_Ttn,
    extend_eigvec,
    group_eigenvalues,
    solve_eig,
    solve_poisson,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "backends_available",
    "ConfigError",
    "DegenerateDensityError",
    "DensitySpec",
    "EigResult",
    "InvalidArgumentError",
    "KernelSpec",
    "LaplacianSystem",
    "ManifoldModel",
    "MultiplicityMismatchError",
    "NumericalFailureError",
    "OutOfSupportError",
    "PimlapError",
    "PointCloud",
    "PoissonSolution",
    "ReferenceSpectrum",
    "SpectralReport",
    "SweepGrid",
    "UnsupportedConfigurationError",
    "ValidationReport",
    "apply_Ttn",
    "assemble",
    "builtin_function",
    "coercivity_constant",
    "discrepancy",
    "eig_error_table",
    "eval_R",
    "eval_barR",
    "extend_eigvec",
    "fd_oracle_1d",
    "fit_power_law",
    "group_eigenvalues",
    "kernel_by_name",
    "norm_const",
    "polynomial_kernel",
    "quadrature_grid",
    "rayleigh",
    "reference_spectrum",
    "sample",
    "solve_eig",
    "solve_poisson",
    "subspace_angle",
    "t_auto",
    "truncated_gaussian_smoothed",
    "validate_kernel",
    "w_field",
    "wendland41",
]
