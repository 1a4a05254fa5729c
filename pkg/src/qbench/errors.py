"""Exception taxonomy shared across the bench.

The CLI maps these onto exit codes: validation errors exit 2, reference
errors exit 3, insufficient data exits 4.
"""


class QBenchError(Exception):
    """Base class for all bench errors."""


class ValidationError(QBenchError):
    """Input violates a documented contract (non-unitary matrix, bad scene, ...)."""


class NormalizationError(ValidationError):
    """A state that must be normalized is not."""


class RegistryError(QBenchError):
    """Mode registry mismatch or collision."""


class ImpossibleOutcomeError(QBenchError):
    """Post-selection on an outcome whose probability is (numerically) zero."""


class ReferenceError_(QBenchError):
    """A name points at nothing: unknown component, parameter, or session."""


class UnknownSceneError(ReferenceError_):
    """Requested builtin scene does not exist."""


class SceneParseError(ValidationError):
    """Scene document could not be parsed; carries position info when known."""

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class DanglingPathError(ValidationError):
    """A photon was routed to a port with no link and no terminator."""


class InsufficientDataError(QBenchError):
    """Not enough counts to estimate the requested quantity."""


class InvalidFrequenciesError(ValidationError):
    """Frequency triple violates energy conservation."""
