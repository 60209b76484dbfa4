"""Exception hierarchy.

Every error raised on bad input derives from :class:`PerceptError`, which the
CLI maps to exit code 3.
"""


class PerceptError(ValueError):
    pass


class CycleError(PerceptError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("graph contains the cycle " + " -> ".join(self.cycle))


class DuplicateNode(PerceptError):
    pass


class UnknownEndpoint(PerceptError):
    pass


class UnknownNode(PerceptError):
    pass


class OverlappingSets(PerceptError):
    pass


class SingularCovariance(PerceptError):
    pass


class DuplicateTarget(PerceptError):
    pass


class NonFiniteValue(PerceptError):
    pass


class UnknownTarget(PerceptError):
    pass


class VariableMismatch(PerceptError):
    pass


class UnknownVariable(PerceptError):
    pass


class DimensionMismatch(PerceptError):
    pass


class TooFewRows(PerceptError):
    pass


class SchemaError(PerceptError):
    def __init__(self, path, reason):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}")


class ProfileValidationError(PerceptError):
    pass


class MissingDescriptors(ProfileValidationError):
    pass


class NoSharedVariables(PerceptError):
    pass


class EmptyMatchedSet(PerceptError):
    pass


class OutOfRangeProbability(PerceptError):
    pass
