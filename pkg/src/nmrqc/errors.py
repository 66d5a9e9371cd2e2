"""Exception types shared across the package."""


class NmrqcError(Exception):
    """Base class for all package errors."""


class ValidationError(NmrqcError):
    """Bad input: malformed config/circuit files, broken invariants, shape errors."""


class UncoupledPairError(ValidationError):
    """A two-qubit gate was requested between nuclei with zero J coupling."""


class UnresolvedPeaksError(NmrqcError):
    """Spectral lines are too close (or degenerate) to be read out separately."""


class FitError(NmrqcError):
    """A least-squares fit failed to converge or the data carried no signal."""
