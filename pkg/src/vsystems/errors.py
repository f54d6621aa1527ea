"""Exception hierarchy shared by all modules."""


class VSystemError(Exception):
    """Base class for all library errors."""


class DegenerateMetric(VSystemError):
    """The covector system does not span the dual space."""


class ZeroCovector(VSystemError):
    pass


class UnsupportedSpec(VSystemError):
    pass


class UnsupportedWeight(VSystemError):
    pass


class OrbitOverflow(VSystemError):
    """Reflection closure exceeded the configured bound."""


class NotAVeeSystem(VSystemError):
    pass


class WeightNotInSystem(VSystemError):
    pass


class Infeasible(VSystemError):
    """The linear conditions on the open constants have no solution.

    ``relation`` carries a human readable form of the violated relation.
    """

    def __init__(self, message, relation=None):
        super().__init__(message)
        self.relation = relation if relation is not None else message


class NotConstructible(VSystemError):
    pass


class PoleTooClose(VSystemError):
    """An evaluation point lies too close to a singular hyperplane."""

    def __init__(self, message, offending=None):
        super().__init__(message)
        self.offending = offending


class SamplingExhausted(VSystemError):
    pass


class LemmaViolation(VSystemError):
    pass


class NonIntegerExponent(VSystemError):
    pass


class NonIntegerExponentWarning(UserWarning):
    pass


class DegenerateCritical(VSystemError):
    pass


class CriticalValueZero(VSystemError):
    pass


class UnknownName(VSystemError):
    pass


class InputError(VSystemError):
    """Malformed system file, catalog reference or command-line value."""
