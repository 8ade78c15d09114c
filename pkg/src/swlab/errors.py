"""Exception hierarchy shared by every swlab module."""


class SwlabError(Exception):
    """Base class; the CLI maps any subclass to exit status 1."""


class ParameterError(SwlabError, ValueError):
    """An argument is outside its documented domain."""


class CapacityError(SwlabError):
    """An exhaustive enumeration would exceed its configured cap."""


class PlacementError(SwlabError):
    """A cube or gadget does not fit inside the lattice."""


class ReflectionDomainError(SwlabError, ValueError):
    """A point reflection was applied to something outside its cube."""


class ShapeError(SwlabError, ValueError):
    """A configuration does not match the lattice it is used with."""


class DegenerateInputError(SwlabError, ValueError):
    """Empty region, zero variance, or another input with nothing to measure."""


class InsufficientSignalError(SwlabError):
    """Too few significant autocorrelation lags to fit a decay rate."""


class InsufficientDataError(SwlabError):
    """A series is too short for the requested estimate."""


class ConsistencyError(SwlabError):
    """Occupied bonds impose contradictory signs around a cycle."""


class PreconditionError(SwlabError):
    """A documented precondition on derived quantities does not hold."""


class ParseError(SwlabError, ValueError):
    """A text file does not follow its documented format."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)
