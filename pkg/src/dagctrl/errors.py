"""Exception types raised across the toolkit."""


class DagctrlError(Exception):
    """Base class for all toolkit errors."""


class CycleError(DagctrlError):
    """The information graph contains a directed cycle."""


class DimensionError(DagctrlError):
    """Matrix or block dimensions do not conform."""


class SingularError(DagctrlError):
    """A linear solve hit a (numerically) singular matrix."""


class NumericalError(DagctrlError):
    """A numerical routine failed to meet its accuracy contract."""


class NotHurwitzError(DagctrlError):
    """An operation required a Hurwitz matrix and did not get one."""


class NonzeroFeedthroughError(DagctrlError):
    """The system has a direct feedthrough where none is allowed."""


class AssumptionError(DagctrlError):
    """Problem data violates the standing solvability assumptions."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ImaginaryAxisError(DagctrlError):
    """A Hamiltonian eigenvalue sits (numerically) on the imaginary axis."""


class WellPosednessError(DagctrlError):
    """A feedback interconnection has a singular feedthrough loop."""


class MissingAncestorError(DagctrlError):
    """An agent update ran without a required ancestor message."""


class DivergenceError(DagctrlError):
    """A simulated state exceeded the divergence guard."""
