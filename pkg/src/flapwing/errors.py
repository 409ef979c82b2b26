"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`FlapwingError`. The CLI maps :class:`ConfigError` (and its file-format
relatives) to exit code 2 and :class:`NumericalError` to exit code 3.
"""


class FlapwingError(Exception):
    """Base class for all package errors."""


class ConfigError(FlapwingError):
    """Invalid configuration; ``field`` and ``line`` locate the offending entry."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if field:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class FormatError(ConfigError):
    """Malformed input data file (bad header, unparsable rows)."""


class GapError(FormatError):
    """Time series contains a gap larger than the allowed multiple of the median step."""


class NumericalError(FlapwingError):
    """Base class for failures of the numerical model."""


class AssemblyError(NumericalError):
    """A linkage loop cannot close for the requested angles."""


class SingularLinkageError(NumericalError):
    """Linkage constraint Jacobian is rank deficient (kinematic singularity)."""

    def __init__(self, message, condition=None):
        self.condition = condition
        super().__init__(message)


class SingularKKTError(NumericalError):
    """The constrained equations of motion cannot be solved."""

    def __init__(self, message, condition=None):
        self.condition = condition
        super().__init__(message)


class IllConditionedError(NumericalError):
    """Collocation system for the Fourier rates is ill conditioned."""


class DegenerateFlowError(NumericalError):
    """Relative airspeed too small to define normalized aerodynamic time."""


class NonFiniteStateError(NumericalError):
    """The integrated state contains NaN or infinite entries."""

    def __init__(self, message, block=None, t=None):
        self.block = block
        self.t = t
        super().__init__(message)


class SimulationError(NumericalError):
    """A simulation step failed; wraps the underlying error with its time stamp."""

    def __init__(self, message, t=None, phase=None):
        self.t = t
        self.phase = phase
        super().__init__(message)


class EmptyHistoryError(FlapwingError):
    """No circulation history available to build a wake."""


class InsufficientOverlapError(FlapwingError):
    """Simulated and measured traces overlap for fewer than two flap periods."""


class ExportError(FlapwingError, OSError):
    """Writing or reading an output file failed; the message names the path."""
