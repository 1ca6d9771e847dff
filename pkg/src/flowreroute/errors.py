"""Exception types shared across the package."""


class FlowRerouteError(Exception):
    """Base class for all domain errors raised by this package."""


class InstanceFormatError(FlowRerouteError):
    """An instance/schedule/formula document could not be parsed."""


class InvariantViolation(FlowRerouteError):
    """A structural invariant of an instance does not hold."""


class ScheduleFormatError(FlowRerouteError):
    """A schedule document is malformed or is not a partition of the updates."""


class NotADagError(FlowRerouteError):
    """The old/new union of a flow pair contains a directed cycle."""


class WrongPairCountError(FlowRerouteError):
    """An operation restricted to two-pair instances got something else."""


class RoundTooLargeError(FlowRerouteError):
    """A round exceeds the subset cap; exhaustive subset checking is refused.

    This is a refusal to check, not a verdict about the sequence.
    """


class TooManyUpdatesError(FlowRerouteError):
    """The instance has more non-empty updates than the search budget allows."""


class DegenerateFormulaError(FlowRerouteError):
    """A CNF formula cannot be reduced (tautological clause, unused variable...)."""


class AssignmentError(FlowRerouteError):
    """A truth assignment does not satisfy the formula it was used with."""


class HorizonExceededError(FlowRerouteError):
    """A schedule uses more rounds than the model's round horizon."""


class PathNotInGraphError(FlowRerouteError):
    """A requested path uses an edge absent from the base topology."""
