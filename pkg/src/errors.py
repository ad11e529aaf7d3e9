class BilliardLabError(Exception):
    """
    Base class for every failure raised by the lab.
    `context` carries the numbers a caller needs to diagnose the failure
    (last residuals, failing step, offending angle, ...).
    """

    exit_code = 2

    def __init__(self, message, **context):
        super().__init__(message)
        self.message = message
        self.context = dict(context)

    def to_record(self):
        """Machine-readable error record written by the CLI."""
        return {
            "error": type(self).__name__,
            "family": "hypothesis" if isinstance(self, HypothesisError) else "numerical",
            "message": self.message,
            "context": self.context,
        }


class HypothesisError(BilliardLabError):
    """An input does not satisfy a geometric hypothesis (exit code 1)."""

    exit_code = 1


class NumericalError(BilliardLabError):
    """A computation failed to meet its tolerance (exit code 2)."""

    exit_code = 2


class CurveValidationError(HypothesisError):
    def __init__(self, message, diagnostics=None, **context):
        super().__init__(message, **context)
        self.diagnostics = diagnostics


class RadonHypothesisFailed(HypothesisError):
    pass


class PhaseSpaceError(HypothesisError):
    pass


class BracketFailure(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class MonotonicityViolation(NumericalError):
    pass


class NonConvergedQuadrature(NumericalError):
    pass


class ProjectionError(NumericalError):
    pass
