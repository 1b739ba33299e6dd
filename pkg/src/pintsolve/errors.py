"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid user-supplied parameter (bad dimension, flag, or range)."""


class DimensionMismatchError(InputError):
    """Operands with incompatible dimensions."""


class NotSpdError(ValueError):
    """An operator that must be symmetric positive definite is not."""


class DiagnosticModeRequiredError(RuntimeError):
    """Operation needs exact spatial factorizations that were not built."""


class SolverDivergenceError(RuntimeError):
    """Iterative solver residual grew past the divergence threshold."""


class BoundViolationError(RuntimeError):
    """A proven spectral bound was violated numerically."""
