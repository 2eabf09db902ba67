# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Exception classes raised across the toolkit.
"""


class ResilError(Exception):
    """Base class for every error raised by resilkit."""
    pass


class ModelMismatchError(ResilError, ValueError):
    """
    Raised when a state, action or matrix does not have the dimension
    or mode set declared by the model it is used with.
    """
    pass


class PolicyDomainError(ResilError, ValueError):
    """
    Raised when a policy is asked for an action on a state it does not
    cover.
    """
    pass


class DomainError(ResilError, ValueError):
    """
    Raised when arguments fall outside the domain of an operation, for
    example an empty window or a non-finite payoff.
    """
    pass


class IllConditionedError(ResilError, ArithmeticError):
    """Raised when a matrix that must be inverted is (numerically) singular."""
    pass


class TransitionDomainError(ResilError, ValueError):
    """Raised when a transition table has no entry for a reached state."""
    pass


class NonConvergenceError(ResilError, RuntimeError):
    """
    Raised when an iterative method hits its iteration cap.  The partial
    result and the final residual are attached so callers can still
    inspect them.
    """

    def __init__(self, msg, result=None, residual=None):
        super().__init__(msg)
        self.result = result
        self.residual = residual


class EmbeddingError(ResilError, ValueError):
    """Raised when a game state or action has no image in the twin model."""
    pass


class CapacityError(ResilError, ValueError):
    """Raised when an exact enumeration would exceed its size limit."""
    pass


class StepSizeError(ResilError, ValueError):
    """Raised when an explicit time step violates its stability bound."""
    pass


class UnspecifiedDynamicsError(ResilError, NotImplementedError):
    """
    Raised for actions that are accepted by a schema but have no
    transition rule unless the user supplies one.
    """
    pass


class ValidationError(ResilError, ValueError):
    """
    Raised when a scenario file fails validation.  ``errors`` holds the
    complete list of messages, not only the first one found.
    """

    def __init__(self, errors, path=None):
        self.errors = list(errors)
        self.path = path
        head = "Invalid scenario"
        if path is not None:
            head = "Invalid scenario {}".format(path)
        super().__init__("{} ({} errors):\n  {}".format(
            head, len(self.errors), "\n  ".join(self.errors)))


class ExperimentError(ResilError, RuntimeError):
    """
    Raised by the experiment runner around a module error, naming the
    experiment kind and the step that failed.  The original exception is
    chained as ``__cause__``.
    """

    def __init__(self, msg, kind=None, step=None):
        super().__init__(msg)
        self.kind = kind
        self.step = step
