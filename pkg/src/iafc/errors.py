"""Exception types shared across the package."""


class IafcError(Exception):
    """Base class for all package-specific errors."""


class CoverageError(IafcError):
    """A spectral or temporal grid does not cover the band it must resolve."""


class ResolutionError(IafcError):
    """A grid is too coarse to resolve the requested structure."""


class StepSizeError(IafcError):
    """A propagation step violates its stability/aliasing criterion."""


class ConvergenceError(IafcError):
    """An iterative refinement failed to converge within its budget."""


class NumericalInstabilityError(IafcError):
    """A time-domain integration showed unphysical energy growth."""


class UndefinedFidelityError(IafcError):
    """Fidelity requested between fields with vanishing energy."""


class ConfigError(IafcError):
    """Invalid run configuration.  Collects all problems, not just the first."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(str(p) for p in self.problems))
