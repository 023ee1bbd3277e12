"""Exception types raised by the solvers."""


class SolverError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SolverError):
    """Invalid run configuration (bad schema, unknown keys, bad values)."""


class ModelEvaluationError(SolverError):
    """A model callback produced non-finite or ill-shaped output."""


class StepFailureError(SolverError):
    """The inner Newton solve of an implicit time step did not converge.

    Carries the index of the failing step.
    """

    def __init__(self, step, residual, message=None):
        self.step = step
        self.residual = residual
        super().__init__(
            message or f"implicit step {step} failed (residual {residual:.3e})"
        )


class BlowUpError(SolverError):
    """The state (or objective) became non-finite during integration."""

    def __init__(self, step=None, message=None):
        self.step = step
        super().__init__(message or f"non-finite state at step {step}")


class AdjointStepError(SolverError):
    """A linear solve in a backward sweep failed."""

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"backward linear solve failed at step {step}")
