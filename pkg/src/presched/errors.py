"""Exception types shared across the package."""


class PreschedError(Exception):
    """Base class for all package errors."""


class InvalidParameter(PreschedError):
    pass


class InvalidDelta(InvalidParameter):
    pass


class InvalidR(InvalidParameter):
    pass


class InvalidConfig(InvalidParameter):
    pass


class WrongEnvironment(PreschedError):
    pass


class InfeasibleJob(PreschedError):
    """A job has no machine with a positive processing rate."""


class Infeasible(PreschedError):
    pass


class NoFeasibleMachine(PreschedError):
    pass


class PolicyError(PreschedError):
    pass


class PolicyAssignedUnknownJob(PolicyError):
    pass


class InvalidAssignment(PolicyError):
    pass


class NonterminatingPolicy(PolicyError):
    """The simulation made no progress across repeated same-time events."""


class InvalidTrace(PreschedError):
    def __init__(self, report):
        self.report = report
        super().__init__(f"trace failed validation: {report.summary()}")


class NonpositiveRate(PreschedError):
    pass


class DidNotConverge(PreschedError):
    pass


class TooLarge(PreschedError):
    pass


class CapacityExceeded(PreschedError):
    pass


class InvalidSpeedup(PreschedError):
    pass


class NegativeArgument(PreschedError):
    pass
