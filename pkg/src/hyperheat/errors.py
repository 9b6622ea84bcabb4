"""Exception hierarchy for hyperheat."""


class HyperheatError(Exception):
    """Base class for all hyperheat errors."""


class ValidationError(HyperheatError):
    """A hypergraph violates a structural invariant."""

    def __init__(self, message, edge_index=None):
        super().__init__(message)
        self.edge_index = edge_index


class EmptyEdge(ValidationError):
    pass


class SingletonEdge(ValidationError):
    pass


class NonPositiveWeight(ValidationError):
    pass


class IndexOutOfRange(ValidationError):
    pass


class DuplicateVertexInEdge(ValidationError):
    pass


class NoPinnedVertices(ValidationError):
    pass


class DisconnectedGraph(HyperheatError):
    pass


class ParseError(HyperheatError):
    """Input document could not be parsed; message carries diagnostics."""


class OutOfRange(HyperheatError):
    """Time outside a schedule's domain."""


class ConstraintViolated(HyperheatError):
    """State does not satisfy the pinned-coordinate constraint."""


class GridMismatch(HyperheatError):
    """Two trajectories do not share a common time grid."""


class NotALinearCase(HyperheatError):
    """Linear oracle requested outside p = 2 with all edges of size 2."""


class InitialStateNotAdmissible(HyperheatError):
    pass


class NonZeroData(HyperheatError):
    """Decay study requires identically zero pins and forcing."""


class NoConvergence(HyperheatError):
    def __init__(self, residual, iterations):
        super().__init__(
            f"no convergence: residual {residual:.3e} after {iterations} iterations"
        )
        self.residual = residual
        self.iterations = iterations


class NotConverged(HyperheatError):
    """Trajectory tail has not settled to a limit."""

    def __init__(self, tail_oscillation):
        super().__init__(f"tail oscillation {tail_oscillation:.3e} above tolerance")
        self.tail_oscillation = tail_oscillation
