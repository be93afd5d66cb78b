"""Exception types for the public API."""


class PimlapError(Exception):
    """Base class for all package-specific failures."""


class InvalidArgumentError(PimlapError, ValueError):
    """An argument violates a documented precondition."""


class UnsupportedConfigurationError(PimlapError):
    """A requested manifold/density combination has no reference oracle."""


class DegenerateDensityError(PimlapError):
    """Rejection sampling acceptance rate collapsed below 1e-3."""


class NumericalFailureError(PimlapError):
    """A solver could not reach its accuracy contract.

    Carries optional diagnostics (residual history, matrix spectra hints).
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class OutOfSupportError(PimlapError):
    """A query point lies outside the support of every kernel bump."""


class MultiplicityMismatchError(PimlapError):
    """Discrete eigenvalue group and reference multiplicity disagree."""

    def __init__(self, group_dim, reference_dim):
        super().__init__(
            f"group dimension {group_dim} != reference multiplicity {reference_dim}"
        )
        self.group_dim = group_dim
        self.reference_dim = reference_dim


class ConfigError(PimlapError):
    """Configuration file is malformed or references unknown families."""

    def __init__(self, message, key=None):
        super().__init__(message if key is None else f"{message} (key: {key})")
        self.key = key
