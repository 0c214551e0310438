"""Exception types raised by the solvers and model constructors."""


class TdmFairError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(TdmFairError, ValueError):
    """An argument violates a documented precondition."""


class DegeneratePlacementError(TdmFairError, ValueError):
    """A placement yields a service cell of zero length."""


class RateUnachievableError(TdmFairError, ValueError):
    """The requested rate is at or above the capacity supremum."""


class InstanceTooLargeError(TdmFairError, ValueError):
    """A brute-force search instance exceeds the enumeration limits."""
