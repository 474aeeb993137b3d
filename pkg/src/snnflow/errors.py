"""Exception hierarchy shared across the toolchain.

The CLI maps these onto its exit-code contract: input/format problems
exit 2, analysis failures (inconsistency, deadlock, infeasibility)
exit 1, exhausted analysis budgets exit 3.
"""


class SnnflowError(Exception):
    """Base class for all snnflow errors."""


class GraphFormatError(SnnflowError):
    """A graph file could not be parsed against its documented schema."""


class GraphValidationError(SnnflowError):
    """A structural invariant of a graph is violated; message names it."""


class ConfigError(SnnflowError):
    """A run configuration is incomplete or out of range."""


class InfeasiblePartitionError(SnnflowError):
    """No partition can satisfy the crossbar constraints."""


class InconsistentGraphError(SnnflowError):
    """The dataflow graph admits no non-trivial repetition vector."""


class DeadlockError(SnnflowError):
    """Execution stalled with no fireable actor.

    ``state`` carries a human-readable snapshot of channel occupancy and
    the starving actors at the point of the stall.
    """

    def __init__(self, message: str, state: dict | None = None):
        super().__init__(message)
        self.state = state or {}


class InfeasibleCapacityError(SnnflowError):
    """A channel capacity is too small for a single firing."""


class InfeasibleMappingError(SnnflowError):
    """No cluster-to-core assignment satisfies the platform capacities."""


class BudgetExceededError(SnnflowError):
    """A state/exploration budget ran out before an answer was found.

    ``partial`` may carry whatever results were completed before the
    budget ran out (e.g. a partial Pareto front) so callers can flush
    them before exiting.
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial
