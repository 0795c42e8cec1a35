"""Exception types shared by all dicke_lab modules."""


class DickeLabError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(DickeLabError, ValueError):
    """Invalid physical parameters or violated operation preconditions."""


class ConfigError(DickeLabError, ValueError):
    """Invalid run configuration; message carries the offending field path."""


class NumericalError(DickeLabError, RuntimeError):
    """A numerical routine failed (eigensolver, quadrature, undefined result)."""


class IntegrationError(NumericalError):
    """Trajectory integration failed (step-size underflow or solver abort)."""


class SingularityError(NumericalError):
    """Phase-space point too close to the atomic-sphere boundary Q^2+P^2 = 4."""


class EmptyShellError(ParameterError):
    """Requested energy lies below the classical ground-state energy."""


class ConvergenceError(DickeLabError, RuntimeError):
    """Unconverged eigenstates were requested where converged ones are required."""


class TruncationError(DickeLabError, RuntimeError):
    """Basis mapping lost more norm than the allowed truncation budget."""


class WindowError(ParameterError):
    """Empty or otherwise unusable microcanonical/statistics window."""


class SampleSizeError(ParameterError):
    """Not enough states/samples in range for the requested statistic."""


class SupportError(ParameterError):
    """Coefficient weight falls outside the converged subspace."""


class RecipeError(DickeLabError, KeyError):
    """Unknown export recipe or archive dataset."""


class CacheError(DickeLabError, RuntimeError):
    """Eigen-solution cache is corrupt or unreadable."""


class ParityResolutionWarning(UserWarning):
    """Some converged states did not resolve to a definite parity."""
