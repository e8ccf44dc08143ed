"""Exception hierarchy shared by every stage of the pipeline."""


class AdvqError(Exception):
    """Base class; ``module`` names the stage that raised it."""

    module = "advq"

    def __str__(self):
        return f"[{self.module}] {super().__str__()}"


class ParseError(AdvqError):
    module = "boolfn"


class ValidationError(AdvqError):
    module = "boolfn"


class CompositionError(AdvqError):
    module = "boolfn"


class PSDViolationError(AdvqError):
    module = "advsdp"


class ConvergenceError(AdvqError):
    """Raised when the SDP solver stops short of the requested accuracy.

    ``best`` holds the best iterate turned into a DualSolution (or None when
    the solver returned nothing usable).
    """

    module = "advsdp"

    def __init__(self, message, best=None, info=None):
        super().__init__(message)
        self.best = best
        self.info = info or {}


class CertificateError(AdvqError):
    module = "advsdp"


class DegenerateFunctionError(AdvqError):
    """F_0 or F_1 is empty, so there is nothing to distinguish."""

    module = "graphrefl"


class DomainError(AdvqError):
    module = "graphrefl"


class ProjectorError(AdvqError):
    module = "spectral"


class BoundViolation(AdvqError):
    """A numerically checked inequality or identity failed.

    ``invariant`` is a short stable name for the failing check.
    """

    module = "verify"

    def __init__(self, invariant, message):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant


class ConfigError(AdvqError):
    module = "cli"
