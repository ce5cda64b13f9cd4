"""Exception types shared across the package."""


class OneFactorError(Exception):
    """Base class for all errors raised by this package."""


class SelfLoopError(OneFactorError):
    pass


class DuplicateEdgeError(OneFactorError):
    pass


class VertexOutOfRangeError(OneFactorError):
    pass


class UnknownVertexError(OneFactorError):
    pass


class UnknownEdgeError(OneFactorError):
    pass


class InfeasibleDegreeError(OneFactorError):
    pass


class RetryBudgetExhaustedError(OneFactorError):
    """A randomized construction ran out of retries.

    ``context`` carries whatever diagnostics the failing stage collected
    (e.g. which check failed on the last attempt).
    """

    def __init__(self, message: str, context=None):
        super().__init__(message)
        self.context = context


class NotBipartiteError(OneFactorError):
    """An edge does not cross the supplied bipartition."""


class UnbalancedPartsError(OneFactorError):
    pass


class NotRegularError(OneFactorError):
    pass


class RequestTooLargeError(OneFactorError):
    pass


class DiracViolatedError(OneFactorError):
    """Minimum degree below half the (even) vertex count."""

    def __init__(self, message: str, index=None):
        super().__init__(message)
        self.index = index


class ConstructionFailedError(OneFactorError):
    """A step-budgeted search gave up; indicates a bug when preconditions held."""


class GreedyStuckError(OneFactorError):
    """Greedy reservoir assignment found no usable edge for some vertex."""

    def __init__(self, message: str, index=None, vertex=None):
        super().__init__(message)
        self.index = index
        self.vertex = vertex


class BadKError(OneFactorError):
    pass


class DomainError(OneFactorError, ValueError):
    pass


class TooLargeError(OneFactorError):
    pass


class OddOrderError(OneFactorError):
    pass


class PreconditionViolatedError(OneFactorError):
    pass


class InvariantBrokenError(OneFactorError):
    """An internal invariant failed; always a bug, never an input problem."""


class ResampleGoodGraphError(OneFactorError):
    """Completion gave up on the current good subgraph; caller should rebuild it."""


class FormatError(OneFactorError):
    """Text-format parse error with a 1-based line number when known."""

    def __init__(self, message: str, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
