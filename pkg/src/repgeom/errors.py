"""Exception hierarchy.

Every data-dependent failure raised by the library derives from
:class:`RepgeomError`, so the CLI can map it to a single exit code and a
one-line ``ClassName: message`` report.
"""


class RepgeomError(ValueError):
    """Base class for data errors."""


class ContractError(RepgeomError):
    """Arguments violate an operation's preconditions."""


# linalg
class DegenerateData(RepgeomError):
    pass


class DimensionMismatch(RepgeomError):
    pass


class SingularSystem(RepgeomError):
    pass


class ConstantTarget(RepgeomError):
    pass


# neighbors / intrinsic dimension
class KTooLarge(RepgeomError):
    pass


class DegenerateNeighborhood(RepgeomError):
    pass


class AllDegenerate(RepgeomError):
    pass


class InsufficientRange(RepgeomError):
    pass


# alignment
class TooFewSamples(RepgeomError):
    pass


class ManifestError(RepgeomError):
    pass


# noise ceiling
class EmptyCounts(RepgeomError):
    pass


class NegativeVariance(RepgeomError):
    pass


class NoRepeats(RepgeomError):
    pass


class LengthMismatch(RepgeomError):
    pass


# stats
class ConstantInput(RepgeomError):
    pass


class TooFewItems(RepgeomError):
    pass


class TieCollapse(RepgeomError):
    pass


class ShapeMismatch(RepgeomError):
    pass


class MissingField(RepgeomError):
    pass


# synthetic
class SpecError(RepgeomError):
    pass


# io
class BadMagic(RepgeomError):
    pass


class TruncatedPayload(RepgeomError):
    pass


class NonFiniteValue(RepgeomError):
    pass
